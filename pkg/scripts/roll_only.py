"""Roll step from 35 deg to 45 deg with z and pitch held; reports roll overshoot and steady-state error."""

import argparse
import json

from headctl.harness import emit_plot_data, preset, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/roll_only")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary, _ = run_experiment(preset("roll_only", out=args.out, seed=args.seed))
    emit_plot_data(summary.telemetry)
    print(json.dumps({"final_state": summary.final_state, "roll_overshoot": summary.overshoot["roll"],
                      "roll_steady_state_error": summary.steady_state_axis_error[2], "bound": summary.bound,
                      "saturation_fraction": summary.saturation_fraction}, indent=2))


if __name__ == "__main__":
    main()
