"""Regenerate the bundled approximator checkpoint (600 s excitation capture, 200 epochs)."""

import argparse
import json
import shutil
from pathlib import Path

from headctl.harness import preset, train_network
from headctl.harness.config import DEFAULT_NETWORK


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/train_default")
    ap.add_argument("--install", action="store_true", help="copy the checkpoint over the bundled default")
    args = ap.parse_args()
    cfg = preset("train_network", out=args.out)
    _, info = train_network(cfg)
    print(json.dumps({k: info[k] for k in ("n_params", "val_reduction", "sup_error_heldout", "eps_max")}, indent=2))
    if args.install:
        shutil.copyfile(Path(args.out) / "network.npz", DEFAULT_NETWORK)
        print(f"installed {DEFAULT_NETWORK}")


if __name__ == "__main__":
    main()
