"""Equilibrium melonic model: closed-form flows and the Schwinger-Dyson check.

Two independent cross-checks that need no momentum-frequency quadrature:

* the analytic flow of the equilibrium quartic melonic model with a Litim
  regulator, both in the plain truncation and with ``beta_lam`` fixed by the
  Ward-identity constraint;
* a self-consistent solution of the closed melonic Schwinger-Dyson equation
  for the self-energy on the integer lattice, from which the counter-terms
  ``Z_lambda`` and ``Z_infty`` follow.

Lattice sums
------------
The self-energy at external momentum ``p`` is a sum over a four-dimensional
box, ``S(p) = sum_q 1 / (E_p + sum_i e(q_i))`` with ``e(q) = q^2 + sigma_r(q^2)``.
Writing ``1/X = int_0^inf exp(-t X) dt`` factorizes it,

    S(p) = int_0^inf exp(-t E_p) F(t)^4 dt,    F(t) = sum_{|q| <= cutoff} exp(-t e(q)),

and likewise ``A = sum_q 1/(m^2 + sum_i e(q_i))^2 = int t exp(-t m^2) F(t)^4 dt``.
The ``t`` integral is done by the trapezoidal rule in ``s = ln t``, which
converges exponentially for these smooth, doubly decaying integrands.
:func:`brute_force_sums` evaluates the same sums term by term for small
cutoffs.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import root

from .flow import SingularEta

PI2 = np.pi ** 2
EQ_ETA_FLOOR = 1e-12


class IterationDiverged(RuntimeError):
    pass


class CutoffTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class EqState:
    msq: float
    lam: float

    def __post_init__(self):
        if not self.msq > -1.0:
            raise ValueError("msq must exceed -1")


def _omega(m, lam):
    return (1.0 + m) ** 2 - PI2 * lam


def eq_eta_truncation(state):
    m, lam = state.msq, state.lam
    u = 1.0 + m
    num = 4.0 * lam * PI2 * (u ** 2 - lam * PI2 * (2.0 + m))
    den = u ** 2 * _omega(m, lam) + 2.0 * (2.0 + m) / 3.0 * lam ** 2 * PI2 ** 2
    if abs(den) <= EQ_ETA_FLOOR:
        raise SingularEta(f"eta denominator vanishes at {state}")
    return num / den


def _beta_m(m, lam, eta):
    return -(2.0 + eta) * m - 10.0 * lam * PI2 / (1.0 + m) ** 2 * (1.0 + eta / 6.0)


def eq_beta_truncation(state):
    """``(beta_m, beta_lam, eta)`` of the truncated equilibrium flow."""
    m, lam = state.msq, state.lam
    eta = eq_eta_truncation(state)
    u = 1.0 + m
    bracket = 1.0 - 6.0 * PI2 * lam * (1.0 / u ** 2 + 1.0 + 1.0 / u)
    beta_lam = -2.0 * eta * lam + 4.0 * lam ** 2 * PI2 / u ** 3 * (1.0 + eta / 6.0) * bracket
    return _beta_m(m, lam, eta) + 0.0, beta_lam + 0.0, eta + 0.0


def _omega1(m, lam):
    u = 1.0 + m
    return (6.0 * PI2 * lam / 5.0 - 4.0 * PI2 ** 2 * lam ** 2 / u ** 3
            - 12.0 * PI2 * lam * m / (5.0 * u) - 4.0 * PI2 * lam / (5.0 * u))


def eq_eta_constrained(state):
    m, lam = state.msq, state.lam
    u = 1.0 + m
    den = u ** 2 - _omega1(m, lam)
    if abs(den) <= EQ_ETA_FLOOR:
        raise SingularEta(f"eta denominator vanishes at {state}")
    return 4.0 * PI2 * lam * (PI2 * lam / (5.0 * u ** 3) + 1.0) / den


def constraint_residual(state, beta_m, beta_lam, eta):
    m, lam = state.msq, state.lam
    u = 1.0 + m
    return beta_lam + eta * lam * _omega(m, lam) / u ** 2 - 2.0 * PI2 * lam ** 2 / u ** 3 * beta_m


def eq_beta_constrained(state):
    """``(beta_m, beta_lam, eta, residual)`` with ``beta_lam`` from the Ward constraint."""
    m, lam = state.msq, state.lam
    eta = eq_eta_constrained(state)
    u = 1.0 + m
    bm = _beta_m(m, lam, eta)
    bl = -eta * lam * _omega(m, lam) / u ** 2 + 2.0 * PI2 * lam ** 2 / u ** 3 * bm
    res = constraint_residual(state, bm, bl, eta)
    return bm + 0.0, bl + 0.0, eta + 0.0, abs(res)


SYSTEMS = {"truncation": eq_beta_truncation, "constrained": eq_beta_constrained}


def eq_fixed_points(system="constrained", msq_range=(-0.95, 2.0), lam_range=(0.0, 0.2), n=50,
                    lam_min=1e-6):
    """Zeros of an equilibrium beta system with ``lam > lam_min``.

    Cells of an ``n x n`` grid where both components change sign seed a root
    polish; roots that wander off the grid box are discarded.  Near the Gaussian point both components are small merely because
    they carry powers of ``lam``, so roots are confirmed on the rescaled
    residual ``(beta_m, beta_lam / lam^2)``, which stays finite there.
    """
    fn = SYSTEMS[system] if isinstance(system, str) else system
    ms = np.linspace(msq_range[0], msq_range[1], n)
    ls = np.linspace(lam_range[0], lam_range[1], n)
    B = np.full((n, n, 2), np.nan)
    for i, m in enumerate(ms):
        for j, l in enumerate(ls):
            try:
                B[i, j] = fn(EqState(m, l))[:2]
            except SingularEta:
                pass

    def scaled(x):
        if not (x[0] > -1 and x[1] > 0):
            return np.array([1e6, 1e6])
        try:
            bm, bl = fn(EqState(x[0], x[1]))[:2]
        except SingularEta:
            return np.array([1e6, 1e6])
        return np.array([bm, bl / x[1] ** 2])

    found = []
    for i in range(n - 1):
        for j in range(n - 1):
            cell = B[i:i + 2, j:j + 2].reshape(4, 2)
            if np.isnan(cell).any():
                continue
            if not all(cell[:, k].min() <= 0 <= cell[:, k].max() for k in range(2)):
                continue
            guess = [0.5 * (ms[i] + ms[i + 1]), max(0.5 * (ls[j] + ls[j + 1]), 2 * lam_min)]
            x = root(scaled, guess, tol=1e-14).x
            inside = (msq_range[0] <= x[0] <= msq_range[1]
                      and lam_range[0] <= x[1] <= lam_range[1])
            if inside and x[1] > lam_min and np.linalg.norm(scaled(x)) < 1e-9:
                if not any(np.linalg.norm(x - y) < 1e-8 for y in found):
                    found.append(x)
    return found


# ------------------------------------------------------- Schwinger-Dyson

@dataclass(frozen=True)
class SDSolution:
    """Converged melonic self-energy.

    ``sigma_r[p]`` is the renormalized self-energy at squared momentum
    ``p**2`` for ``p = 0..cutoff``.
    """

    sigma_r: np.ndarray
    a_infty: float
    z_lambda: float
    z_infty: float
    cutoff: int
    lam_r: float
    m_r2: float = 1.0
    iterations: int = 0
    update: float = 0.0

    @property
    def p2(self):
        return np.arange(self.cutoff + 1) ** 2


def _log_grid(m_r2, h=0.05):
    s = np.arange(-60.0, np.log(60.0 / m_r2) + 1.0 + h, h)
    return np.exp(s), h


def lattice_sums(e, m_r2, t=None, h=None):
    """``S(p)`` for every ``p`` and ``A`` for a 1-D dispersion table ``e``.

    ``e[k]`` is ``e(q)`` for ``q = k``, ``k = 0..cutoff`` (even in ``q``).
    """
    if t is None:
        t, h = _log_grid(m_r2)
    e = np.asarray(e, dtype=float)
    # F(t) = e(0) term + 2 * sum_{q >= 1}
    F = np.exp(-np.outer(t, e[:1]))[:, 0] + 2.0 * np.exp(-np.outer(t, e[1:])).sum(axis=1)
    F4 = F ** 4
    w = t * h  # dt = t ds
    Ep = m_r2 + e
    S = (np.exp(-np.outer(Ep, t)) * (F4 * w)).sum(axis=1)
    A = (np.exp(-m_r2 * t) * t * F4 * w).sum()
    return S, float(A)


def melonic_sum(energy, e, m_r2, t=None, h=None):
    """``sum_q 1 / (energy + sum_i e(q_i))`` for a scalar external energy."""
    if t is None:
        t, h = _log_grid(m_r2)
    e = np.asarray(e, dtype=float)
    F = np.exp(-t * e[0]) + 2.0 * np.exp(-np.outer(t, e[1:])).sum(axis=1)
    return float((np.exp(-energy * t) * F ** 4 * t * h).sum())


def brute_force_sums(e, m_r2):
    """Term-by-term evaluation of :func:`lattice_sums` (small cutoffs only)."""
    e = np.asarray(e, dtype=float)
    full = np.concatenate([e[:0:-1], e])  # q = -L..L
    tot = (full[:, None, None, None] + full[None, :, None, None]
           + full[None, None, :, None] + full[None, None, None, :])
    S = np.array([(1.0 / (m_r2 + ep + tot)).sum() for ep in e])
    A = float((1.0 / (m_r2 + tot) ** 2).sum())
    return S, A


def _renormalize(raw):
    """Subtract value and slope (in ``p^2``) of the three-point fit at p = 0, 1, 2."""
    a = raw[0]
    c = (raw[2] - a - 4.0 * (raw[1] - a)) / 12.0
    b = raw[1] - a - c
    p2 = np.arange(len(raw)) ** 2.0
    return -(raw - a - b * p2)


def quadratic_fit_coefficient(sigma):
    """Coefficient of ``p^2`` in the fit ``a + b p^2 + c p^4`` through p = 0, 1, 2."""
    a = sigma[0]
    c = (sigma[2] - a - 4.0 * (sigma[1] - a)) / 12.0
    return float(sigma[1] - a - c)


def sd_solve_sigma(lam_r, cutoff, damping=0.5, m_r2=1.0, tol=1e-10, max_iter=2000):
    """Damped fixed-point iteration of the closed melonic Schwinger-Dyson equation.

    Parameters
    ----------
    lam_r : float
        Renormalized quartic coupling.
    cutoff : int
        Sharp box cutoff ``|q_i| <= cutoff``, between 5 and 100.
    damping : float
        Fraction of the new iterate mixed in each sweep, ``0 < damping <= 1``.
    m_r2 : float
        Renormalized mass, strictly positive.

    Returns
    -------
    SDSolution

    Raises
    ------
    CutoffTooSmall, IterationDiverged
    """
    cutoff = int(cutoff)
    if cutoff < 5:
        raise CutoffTooSmall(f"cutoff must be at least 5 (got {cutoff})")
    if cutoff > 100:
        raise ValueError("cutoff above 100 is not supported")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if not m_r2 > 0:
        raise ValueError("m_r2 must be positive")
    p2 = np.arange(cutoff + 1) ** 2.0
    sigma = np.zeros(cutoff + 1)
    t, h = _log_grid(m_r2)
    prev_update = np.inf
    for it in range(1, max_iter + 1):
        S, A = lattice_sums(p2 + sigma, m_r2, t, h)
        zinv = 1.0 - 2.0 * lam_r * A
        if not zinv > 0:
            raise IterationDiverged(f"1 - 2 lam_r A_infty = {zinv:.3e} <= 0")
        z_lam = 1.0 / zinv
        new = _renormalize(-2.0 * z_lam * lam_r * S)
        step = new - sigma
        update = float(np.abs(step).max())
        sigma = sigma + damping * step
        if not np.all(np.isfinite(sigma)) or np.any(p2 + sigma < 0):
            raise IterationDiverged("self-energy left the stable region")
        if update < tol:
            break
        if it > 50 and update > 10 * prev_update:
            raise IterationDiverged(f"update grew to {update:.3e}")
        prev_update = min(prev_update, update)
    else:
        raise IterationDiverged(f"no convergence in {max_iter} sweeps (update {update:.3e})")
    S, A = lattice_sums(p2 + sigma, m_r2, t, h)
    z_lam = 1.0 / (1.0 - 2.0 * lam_r * A)
    sol = SDSolution(sigma, A, z_lam, np.nan, cutoff, float(lam_r), float(m_r2), it, update)
    z_inf = sd_renormalization_factors(sol)[0]
    return replace(sol, z_infty=z_inf)


def sd_renormalization_factors(sol, h=1e-4):
    """``(z_infty, z_lambda, |z_infty - z_lambda|)`` from their own definitions.

    ``Z_lambda`` follows from the four-point condition,
    ``1 / Z_lambda = 1 - 2 lam_r A_infty``.  ``Z_infty`` follows from the
    two-point normalization ``Z_infty = 1 + sigma'(0)``, where the slope of the
    bare self-energy ``sigma = -2 Z_lambda lam_r S`` is taken by a central
    difference of the melonic sum in the external energy (the renormalized
    self-energy has zero slope at the origin).
    """
    z_lam = 1.0 / (1.0 - 2.0 * sol.lam_r * sol.a_infty)
    e = sol.p2 + sol.sigma_r
    e0 = sol.m_r2 + e[0]
    dS = (melonic_sum(e0 + h, e, sol.m_r2) - melonic_sum(e0 - h, e, sol.m_r2)) / (2.0 * h)
    z_inf = 1.0 - 2.0 * z_lam * sol.lam_r * dS
    return z_inf, z_lam, abs(z_inf - z_lam)


def sd_rows(sol):
    return [{"p2": int(p), "sigma_r": float(s)} for p, s in zip(sol.p2, sol.sigma_r)]


def sd_summary(sol):
    z_inf, z_lam, res = sd_renormalization_factors(sol)
    return {"a_infty": sol.a_infty, "z_lambda": z_lam, "z_infty": z_inf,
            "identity_residual": res, "cutoff": sol.cutoff, "lam_r": sol.lam_r,
            "m_r2": sol.m_r2, "iterations": sol.iterations}
