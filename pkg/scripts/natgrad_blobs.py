"""Compare SGD, full natural gradient and the component-wise variant on two-class blobs.

    python scripts/natgrad_blobs.py --epochs 10 --csv traces.csv
"""

import argparse

import numpy as np

from infogeom import natgrad

OPTIMIZERS = ("sgd", "ngd", "cw-ngd")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--n-per-class", type=int, default=50)
    ap.add_argument("--hidden", type=int, default=8)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--batch", type=int, default=10)
    ap.add_argument("--lr", type=float, default=0.01)
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--clip", type=float, default=0.5)
    ap.add_argument("--csv", help="write step,sgd,ngd,cw-ngd losses here")
    args = ap.parse_args()

    traces = {}
    for opt in OPTIMIZERS:
        net, X, y = natgrad.blob_task(args.n_per_class, args.seed, args.hidden)
        cfg = natgrad.TrainConfig(opt, args.lr, args.gamma, args.epochs, args.batch, args.clip, args.seed)
        traces[opt] = natgrad.train(net, X, y, cfg).losses
    steps = len(traces["sgd"])
    marks = sorted({0, min(50, steps - 1), steps // 2, steps - 1})
    print("step " + "".join(f"{o:>10}" for o in OPTIMIZERS))
    for i in marks:
        print(f"{i:4d} " + "".join(f"{traces[o][i]:10.4f}" for o in OPTIMIZERS))
    if args.csv:
        table = np.column_stack([np.arange(steps)] + [traces[o] for o in OPTIMIZERS])
        np.savetxt(args.csv, table, delimiter=",", header="step," + ",".join(OPTIMIZERS), comments="", fmt=["%d"] + ["%.17g"] * 3)


if __name__ == "__main__":
    main()
