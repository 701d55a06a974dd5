"""Equilibrium melonic flow and the Schwinger-Dyson counter-terms.

Run: python3 demos/equilibrium_and_sd.py     (~1 s)
"""

import numpy as np

from tgftflow.equilibrium import (SYSTEMS, EqState, eq_fixed_points, sd_renormalization_factors,
                                  sd_solve_sigma)


def main():
    for name, fn in SYSTEMS.items():
        ratios = [fn(EqState(0.0, lam))[2] / lam / (4 * np.pi ** 2) for lam in (1e-2, 1e-3, 1e-5)]
        roots = eq_fixed_points(name)
        print(f"{name:11s} eta/(4 pi^2 lam) at lam = 1e-2, 1e-3, 1e-5: "
              + ", ".join(f"{r:.5f}" for r in ratios) + f"; non-trivial fixed points: {len(roots)}")

    print("\ncutoff   A_inf       Z_inf           Z_lambda        |difference|")
    cutoffs = [10, 20, 40, 80]
    A = []
    for cutoff in cutoffs:
        sol = sd_solve_sigma(1e-3, cutoff)
        z_inf, z_lam, res = sd_renormalization_factors(sol)
        A.append(sol.a_infty)
        print(f"{cutoff:6d}  {sol.a_infty:9.5f}  {z_inf:.12f}  {z_lam:.12f}  {res:.1e}")
    slope, _ = np.polyfit(np.log(cutoffs), A, 1)
    print(f"A_inf ~ {slope:.4f} ln(cutoff); correlation {np.corrcoef(np.log(cutoffs), A)[0, 1]:.6f}")


if __name__ == "__main__":
    main()
