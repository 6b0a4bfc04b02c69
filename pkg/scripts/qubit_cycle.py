"""Single-qubit Otto cycle: fully thermalized cycle and the approach to the limit cycle."""
from _common import parser, run_presets, show

PRESETS = ["qubit-cycle", "qubit-limit-cycle"]

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    for name, summary in run_presets(PRESETS, args.out, args.workers).items():
        print(f"# {name}")
        show(summary)
