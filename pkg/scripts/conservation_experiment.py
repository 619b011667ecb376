"""Ensemble conservation check: drift maxima and rate stability.

Example:
    python scripts/conservation_experiment.py --n 3 --radius 0.1 \
        --t-max 100 --ensemble 20
"""
import argparse

from hardtorus import SystemParams, collision_rate, sample_state, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--masses", type=float, nargs="*", default=None,
                    help="explicit masses (overrides --n)")
    ap.add_argument("--radius", type=float, default=0.1)
    ap.add_argument("--t-max", type=float, default=100.0)
    ap.add_argument("--ensemble", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    masses = tuple(args.masses) if args.masses else (1.0,) * args.n
    params = SystemParams(masses=masses, radius=args.radius)
    worst_e = worst_p = 0.0
    print(f"{'seed':>6} {'events':>8} {'rate':>10} {'dE':>12} {'dP':>12} "
          f"{'stable':>7}")
    for k in range(args.ensemble):
        state = sample_state(args.seed + k, params)
        traj = simulate(state, args.t_max, params)
        rep = collision_rate(traj)
        worst_e = max(worst_e, traj.max_energy_drift)
        worst_p = max(worst_p, traj.max_momentum_drift)
        print(f"{args.seed + k:>6} {traj.n_events:>8} {rep.rate:>10.4f} "
              f"{traj.max_energy_drift:>12.3e} "
              f"{traj.max_momentum_drift:>12.3e} {str(rep.bound_ok):>7}")
    print(f"worst energy drift   {worst_e:.3e}")
    print(f"worst momentum drift {worst_p:.3e}")


if __name__ == "__main__":
    main()
