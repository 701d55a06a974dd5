"""Non-Gaussian fixed points and critical exponents at beta_hat = 0.

Run: python3 demos/fixed_points.py [alpha ...]     (default: 4 7; ~15 s per alpha)
"""

import sys

from tgftflow.fixedpoint import locate_fixed_points
from tgftflow.flow import FlowConfig
from tgftflow.kernels import RegulatorParams


def main(alphas):
    config = FlowConfig()
    for alpha in alphas:
        fps = locate_fixed_points(RegulatorParams(alpha, 0.0), config, lam_range=(-0.1, 0.1))
        print(f"alpha = {alpha:g}: {len(fps)} non-Gaussian fixed point(s)")
        for fp in sorted(fps, key=lambda f: -f.re_theta):
            th = ", ".join(f"{t.real:.5g}{t.imag:+.5g}i" for t in fp.theta)
            print(f"  (msq*, lam*) = ({fp.state.msq:.6g}, {fp.state.lam:.6g})  "
                  f"theta = {th}  eta* = {fp.eta_star:.5g}  residual = {fp.residual:.1e}")


if __name__ == "__main__":
    main([float(a) for a in sys.argv[1:]] or [4.0, 7.0])
