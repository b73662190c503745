#!/usr/bin/env python3
"""Plot loss curves written by `linkage-tune sweep` or `linkage-tune erm`.

Usage: plot_curves.py OUT.png CURVE [CURVE ...]

Each CURVE is a text file holding the piece count, then `lo,hi,value` lines.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_curve(path):
    lines = Path(path).read_text().split()
    count = int(lines[0])
    pieces = [tuple(float(x) for x in line.split(",")) for line in lines[1 : count + 1]]
    if len(pieces) != count:
        raise ValueError(f"{path}: expected {count} pieces, found {len(pieces)}")
    return pieces


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", help="image to write")
    parser.add_argument("curves", nargs="+", help="curve files")
    parser.add_argument("--xlabel", default="parameter")
    args = parser.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4))
    for path in args.curves:
        pieces = read_curve(path)
        xs = [p[0] for p in pieces] + [pieces[-1][1]]
        ys = [p[2] for p in pieces] + [pieces[-1][2]]
        ax.step(xs, ys, where="post", label=Path(path).stem, linewidth=1)
    ax.set_xlim(0, 1)
    ax.set_xlabel(args.xlabel)
    ax.set_ylabel("loss")
    if len(args.curves) <= 10:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
