"""Scan disk radii for degenerate tube geometries in one direction.

Example:
    python scripts/degeneracy_scan.py --l0 1 0 --radii 0.24 0.25 0.26 \
        --max-group 3
"""
import argparse

from hardtorus import (SystemParams, admissible_directions,
                       degenerate_radius_check)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l0", type=int, nargs=2, default=[1, 0])
    ap.add_argument("--radii", type=float, nargs="+",
                    default=[0.24, 0.25, 0.26])
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--max-group", type=int, default=None)
    args = ap.parse_args()

    l0 = tuple(args.l0)
    print(f"{'radius':>8} {'directions':>11} {'length h':>10} "
          f"{'width k':>9}")
    for r in args.radii:
        params = SystemParams(masses=(1.0,) * args.n, radius=r)
        flags = degenerate_radius_check(params, l0,
                                        max_group=args.max_group)
        n_dirs = len(admissible_directions(r))
        li = ",".join(map(str, flags.length_matches)) or "-"
        wi = ",".join(map(str, flags.width_matches)) or "-"
        mark = "  <- degenerate" if flags.degenerate else ""
        print(f"{r:>8g} {n_dirs:>11} {li:>10} {wi:>9}{mark}")


if __name__ == "__main__":
    main()
