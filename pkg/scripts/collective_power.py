"""Collective spin engine: cycle diagnostics and limit-cycle power against t_th and j."""
from _common import parser, run_presets, show

PRESETS = ["collective-cycle", "power-vs-tth", "power-vs-j"]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    for name, summary in run_presets(PRESETS, args.out, args.workers).items():
        print(f"# {name}")
        show(summary)
