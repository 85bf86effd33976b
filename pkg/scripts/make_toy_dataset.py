#!/usr/bin/env python3
"""Generate a small synthetic paired low-light/normal-light dataset.

Writes <root>/{train,val}/{low,high}/NNNN.png. The clean images are smooth
random color patterns; the low images are the clean images darkened by a
smooth spatially-varying illumination field plus Gaussian sensor noise.
"""

from __future__ import annotations

import argparse

from mirrorlight.toydata import make_toy_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("root", help="output directory for the dataset")
    parser.add_argument("--n-train", type=int, default=8)
    parser.add_argument("--n-val", type=int, default=2)
    parser.add_argument("--size", type=int, default=64, help="image side length")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--noise-sigma",
        type=float,
        default=0.003,
        help="std of the additive sensor noise on the low images",
    )
    parser.add_argument(
        "--field-min", type=float, default=0.06, help="darkest illumination scale"
    )
    parser.add_argument(
        "--field-max", type=float, default=0.30, help="brightest illumination scale"
    )
    parser.add_argument(
        "--constant-field",
        action="store_true",
        help="darken each image by a single scalar instead of a smooth "
        "spatially-varying field (the regime used by the toy training scripts)",
    )
    args = parser.parse_args()

    root = make_toy_dataset(
        args.root,
        n_train=args.n_train,
        n_val=args.n_val,
        size=args.size,
        seed=args.seed,
        noise_sigma=args.noise_sigma,
        field_range=(args.field_min, args.field_max),
        spatial_field=not args.constant_field,
    )
    print(f"wrote {args.n_train} train / {args.n_val} val pairs under {root}")


if __name__ == "__main__":
    main()
