"""Threshold functions and the flow near the Gaussian point.

Run: python3 demos/gaussian_point.py
"""

import numpy as np

from tgftflow.flow import FlowState, beta_functions, gaussian_coefficients, normalization_constant
from tgftflow.kernels import RegulatorParams
from tgftflow.thresholds import threshold_set

LITIM = RegulatorParams(alpha=1.0, beta_hat=0.0)


def main():
    ts = threshold_set(0.0, LITIM)
    print("threshold functions at alpha=1, beta_hat=0, msq=0")
    for name, value in ts.as_dict().items():
        print(f"  {name:7s} {value.real: .10f}   (+/- {ts.errors[name]:.1e})")
    print(f"  I1 / (3 pi^3 / 8) = {ts.I1.real / (3 * np.pi ** 3 / 8):.12f}")

    b = beta_functions(FlowState(0.0, 0.0), LITIM)
    print(f"\nbeta(0, 0) = ({b.beta_msq}, {b.beta_lam}), eta = {b.eta}")

    gc = gaussian_coefficients(LITIM)
    print(f"a0 = {gc.a0:.8g}   b0 = {gc.b0:.8g}   a0/b0 = {gc.ratio:.8g}")
    print(f"b0 / pi^2 = {gc.b0 / np.pi ** 2:.8g}, a0 / pi^2 = {gc.a0 / np.pi ** 2:.8g}")
    print(f"normalization constant of the radial measure: {normalization_constant():.10g}"
          f" (pi^2 = {np.pi ** 2:.10g})")


if __name__ == "__main__":
    main()
