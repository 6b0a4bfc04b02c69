"""LMG working fluid driven through its critical region: T* dips and extracted work.

These presets are the slow ones (a few minutes in total on one core);
pass --workers to spread the grid points over processes.
"""
from _common import parser, run_presets, show

PRESETS = ["lmg-cycles", "tstar-dip-vs-j", "work-vs-tu", "work-vs-gammabar"]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    for name, summary in run_presets(PRESETS, args.out, args.workers).items():
        print(f"# {name}")
        show(summary)
