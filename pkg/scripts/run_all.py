"""Run every preset into one results tree and print a digest of each summary."""
from ottospin.experiments import PRESETS

from _common import parser, run_presets, show

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    for name, summary in run_presets(list(PRESETS), args.out, args.workers).items():
        print(f"# {name}")
        show(summary, keys={k for k in summary if k not in ("config", "conventions")})
