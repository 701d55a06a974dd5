"""Flow trajectories: the free line and the separatrix at alpha = 7.

Run: python3 demos/portrait.py [output_dir]     (~2 min; writes CSV files when a directory is given)
"""

import sys
from pathlib import Path

import numpy as np

from tgftflow.cli import emit_results
from tgftflow.fixedpoint import locate_fixed_points
from tgftflow.flow import FlowConfig, FlowState
from tgftflow.kernels import RegulatorParams
from tgftflow.portrait import TOWARD_UV, integrate_trajectory, trace_separatrix

ALPHA7 = RegulatorParams(7.0, 0.0)


def main(out_dir=None):
    free = integrate_trajectory(FlowState(0.5, 0.0), TOWARD_UV, ALPHA7, t_max=1.0)
    dev = np.max(np.abs(free.msq - 0.5 * np.exp(-2 * free.t)))
    print(f"free line: {len(free.t)} samples, max deviation from 0.5 exp(-2t) = {dev:.1e}")

    config = FlowConfig()
    fps = locate_fixed_points(ALPHA7, config, lam_range=(-0.1, 0.1))
    fp = max(fps, key=lambda f: (f.re_theta, -f.state.msq))
    print(f"fixed point at alpha=7: ({fp.state.msq:.6g}, {fp.state.lam:.6g})")
    branches = trace_separatrix(fp, ALPHA7, config, t_max=10.0)
    for rec in branches:
        d = np.hypot(rec.msq, rec.lam)
        k = int(np.argmin(d))
        print(f"  branch {rec.meta['sign']:+.0f}: {rec.termination} at t = {rec.t[-1]:.3g}, "
              f"closest approach to the Gaussian point {d[k]:.4g} at t = {rec.t[k]:.3g}")
        if out_dir is not None:
            path = Path(out_dir) / f"separatrix_{'plus' if rec.meta['sign'] > 0 else 'minus'}.csv"
            emit_results(rec.rows(), "csv", str(path), {"alpha": 7.0, "beta_hat": 0.0}, "portrait")
            print(f"    wrote {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
