"""Fixed points of the two-coupling flow and their stability data.

The stability matrix follows the convention ``M[i, j] = d beta_j / d g_i`` with
``g = (msq, lam)``, i.e. it is the transpose of the usual Jacobian, and the
critical exponents are the negated eigenvalues of ``M``.
"""

from dataclasses import dataclass

import numpy as np

from .flow import FlowConfig, FlowState, SingularEta, beta_functions, eta_denominator
from .thresholds import DomainError


class NoConvergence(RuntimeError):
    pass


class LeftPhysicalRegion(RuntimeError):
    pass


@dataclass(frozen=True)
class FixedPointReport:
    state: FlowState
    eta_star: float
    theta: tuple
    jacobian: np.ndarray
    residual: float
    iterations: int
    denominator: float = 1.0

    @property
    def re_theta(self):
        return float(self.theta[0].real)

    @property
    def im_theta(self):
        return float(abs(self.theta[0].imag))

    def is_gaussian(self, tol=1e-8):
        return abs(self.state.msq) < tol and abs(self.state.lam) < tol


def _beta_array(x, params, config):
    return beta_functions(FlowState(float(x[0]), float(x[1])), params, config).as_array()


def _jacobian(x, params, config, step):
    """``J[i, j] = d beta_i / d g_j`` by central differences."""
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        J[:, j] = (_beta_array(x + e, params, config) - _beta_array(x - e, params, config)) / (2 * step)
    return J


def stability_matrix(state, params, config=None, step=1e-5):
    """Central-difference stability matrix ``M[i, j] = d beta_j / d g_i``."""
    config = config or FlowConfig()
    return _jacobian(state.as_array(), params, config, step).T


def step_sensitivity(state, params, config=None, step=1e-5):
    """Largest relative change of the stability matrix when the step is halved."""
    M = stability_matrix(state, params, config, step)
    M2 = stability_matrix(state, params, config, step / 2)
    scale = np.maximum(np.abs(M2), 1e-12 * np.abs(M2).max() + 1e-300)
    return float((np.abs(M - M2) / scale).max())


def critical_exponents(M):
    """Negated eigenvalues of a real 2x2 matrix in closed form.

    Complex pairs are ordered with positive imaginary part first; real pairs
    in decreasing order.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("stability matrix has non-finite entries")
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = 0.25 * tr * tr - det
    if disc < 0:
        re = -0.5 * tr
        im = np.sqrt(-disc)
        return (complex(re, im), complex(re, -im))
    root = np.sqrt(disc)
    # cancellation-free real roots
    q = 0.5 * tr + np.copysign(root, tr) if tr != 0 else root
    if q == 0:
        l1 = l2 = 0.0
    else:
        l1, l2 = q, det / q
    lam1, lam2 = sorted((l1, l2))  # eigenvalues ascending -> exponents descending
    return (complex(-lam1, 0.0), complex(-lam2, 0.0))


def _physical(x, config, params):
    if not x[0] > -1.0:
        return False
    try:
        return eta_denominator(FlowState(float(x[0]), float(x[1])), params, config) > config.eta_floor
    except DomainError:
        return False


def find_fixed_point(params, guess, config=None, tol=1e-8, max_iter=200, step=1e-5):
    """Damped Newton search for a zero of ``(beta_msq, beta_lam)``.

    Parameters
    ----------
    params : RegulatorParams
    guess : FlowState
        Starting point in the physical region.
    config : FlowConfig, optional
    tol : float
        Target on the Euclidean norm of the beta vector.

    Returns
    -------
    FixedPointReport

    Raises
    ------
    NoConvergence
        Iteration budget exhausted or a stalled line search.
    LeftPhysicalRegion
        The start is unphysical or no admissible step stays physical.
    """
    config = config or FlowConfig()
    x = guess.as_array().astype(float)
    if not _physical(x, config, params):
        raise LeftPhysicalRegion(f"guess {guess} is not in the physical region")
    b = _beta_array(x, params, config)
    norm = np.linalg.norm(b)
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} iterations (|beta| = {norm:.3e})")
        it += 1
        J = _jacobian(x, params, config, step)
        try:
            dx = -np.linalg.solve(J, b)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular Jacobian") from None
        t = 1.0
        accepted = False
        for _ in range(60):
            trial = x + t * dx
            if _physical(trial, config, params):
                try:
                    bt = _beta_array(trial, params, config)
                except SingularEta:
                    bt = None
                if bt is not None and np.linalg.norm(bt) ** 2 <= (1 - 1e-4 * t) * norm ** 2:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if not any(_physical(x + s * dx, config, params) for s in (1e-3, 1e-6)):
                raise LeftPhysicalRegion(f"Newton step leaves the physical region at {x}")
            raise NoConvergence(f"line search stalled at {x} (|beta| = {norm:.3e})")
        x, b = trial, bt
        norm = np.linalg.norm(b)
    state = FlowState(float(x[0]), float(x[1]))
    M = stability_matrix(state, params, config, step)
    bv = beta_functions(state, params, config)
    return FixedPointReport(state, bv.eta, critical_exponents(M), M, float(norm), it, bv.denominator)


def seed_grid(params, config=None, msq_range=(-0.9, 1.0), lam_range=(0.0, 0.1), n=20):
    """Cells of a coarse grid where both beta components change sign.

    Returns the cell centres as :class:`FlowState` seeds, skipping unphysical
    nodes.  The ``lam = 0`` line is excluded because the Gaussian point
    already lives there.
    """
    config = config or FlowConfig()
    ms = np.linspace(msq_range[0], msq_range[1], n)
    ls = np.linspace(lam_range[0], lam_range[1], n)
    ls = ls[ls != 0.0]
    B = np.full((len(ms), len(ls), 2), np.nan)
    for i, m in enumerate(ms):
        for j, l in enumerate(ls):
            try:
                B[i, j] = beta_functions(FlowState(float(m), float(l)), params, config).as_array()
            except (SingularEta, DomainError):
                pass
    seeds = []
    for i in range(len(ms) - 1):
        for j in range(len(ls) - 1):
            cell = B[i:i + 2, j:j + 2].reshape(4, 2)
            if np.isnan(cell).any():
                continue
            if all(cell[:, k].min() <= 0 <= cell[:, k].max() for k in range(2)):
                seeds.append(FlowState(0.5 * (ms[i] + ms[i + 1]), 0.5 * (ls[j] + ls[j + 1])))
    return seeds


def locate_fixed_points(params, config=None, msq_range=(-0.9, 1.0), lam_range=(0.0, 0.1),
                        n=20, tol=1e-8, include_gaussian=False):
    """Non-Gaussian fixed points reachable by Newton from the seed grid,
    deduplicated and ordered by ``lam``."""
    config = config or FlowConfig()
    found = []
    for seed in seed_grid(params, config, msq_range, lam_range, n):
        try:
            fp = find_fixed_point(params, seed, config, tol)
        except (NoConvergence, LeftPhysicalRegion, SingularEta, DomainError):
            continue
        if fp.is_gaussian(1e-6) and not include_gaussian:
            continue
        if any(np.linalg.norm(fp.state.as_array() - f.state.as_array()) < 1e-6 for f in found):
            continue
        found.append(fp)
    return sorted(found, key=lambda f: (f.state.lam, f.state.msq))
