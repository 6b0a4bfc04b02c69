"""Collective thermalization: t_T against j and the mean-field magnetization curve."""
from _common import parser, run_presets, show

PRESETS = ["tT-vs-j", "meanfield-vs-numeric"]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    for name, summary in run_presets(PRESETS, args.out, args.workers).items():
        print(f"# {name}")
        show(summary)
