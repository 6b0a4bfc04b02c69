"""Shared helpers for the experiment scripts: run presets through the CLI."""
import argparse
import csv
import json
from pathlib import Path

from ottospin.cli import main as cli_main


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", type=Path, default=Path("results"), help="root output directory")
    p.add_argument("--workers", type=int, default=1)
    return p


def run_presets(names, out: Path, workers: int = 1, **overrides) -> dict:
    """Run each preset into out/<name>; return the parsed summaries."""
    summaries = {}
    for name in names:
        argv = ["run", name, "--out", str(out / name), "--workers", str(workers)]
        for key, value in overrides.items():
            argv += [f"--{key}", str(value)]
        code = cli_main(argv)
        if code != 0:
            raise SystemExit(f"{name} exited with status {code}")
        summaries[name] = json.loads((out / name / "summary.json").read_text())
    return summaries


def read_table(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def show(summary: dict, keys=None) -> None:
    body = {k: v for k, v in summary.items() if keys is None or k in keys}
    print(json.dumps(body, indent=2, sort_keys=True))
