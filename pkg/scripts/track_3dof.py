"""Three-axis step from (2.5 mm, 0.25 deg, 35 deg) to (14 mm, 1.6 deg, 45 deg); writes telemetry and per-axis series."""

import argparse
import json

from headctl.harness import emit_plot_data, preset, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/track3dof")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sensing", choices=("direct", "vision"), default="direct")
    args = ap.parse_args()
    summary, _ = run_experiment(preset("track3dof", out=args.out, seed=args.seed, sensing=args.sensing))
    emit_plot_data(summary.telemetry)
    keys = ("final_state", "steady_state_error", "bound", "rise_time", "overshoot", "saturation_fraction", "wall_time")
    print(json.dumps({k: getattr(summary, k) for k in keys}, indent=2))


if __name__ == "__main__":
    main()
