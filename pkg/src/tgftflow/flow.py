"""Beta functions of the stochastic quartic melonic model.

The anomalous dimension appears inside the regulator derivative of the very
loops that define it.  Because every loop is affine in ``eta``, the
self-consistency equation

    eta = -lam' (dL.c0 + eta dL.c1) - lam (dD.c0 + eta dD.c1)

is linear and solved in closed form, with ``dL = L21 - L22`` and
``dD = D21 - D22``.  The derivative of the effective vertex is

    lam' = (2 lam^2 / 3) I1 + 8 lam^2 (W1 + W2)

and the sixtic coupling is slaved to the quartic one, ``kappa = 4 lam^3 I1 / (3 pi)``.
With ``eta`` resolved:

    beta_msq = -(2 + eta) msq - 5 lam dL(eta)
    beta_lam = -2 eta lam - (3/2) kappa dL(eta) + (16 lam^2 / pi)(L31 + L32/2 - L33)(eta)
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import RegulatorParams
from .quadrature import QuadratureSpec
from .thresholds import cached_thresholds, check_msq, threshold_set

RANK = 5  # number of colours of the tensor field
ETA_FLOOR = 1e-6


class SingularEta(ArithmeticError):
    """The eta denominator is at or below the floor (unphysical region)."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class FlowState:
    msq: float
    lam: float

    def __post_init__(self):
        check_msq(self.msq)
        if not np.isfinite(self.lam):
            raise ValueError("lam must be finite")

    def as_array(self):
        return np.array([self.msq, self.lam])


@dataclass(frozen=True)
class EtaSolution:
    eta: float
    numerator: float
    denominator: float
    singular: bool
    residual: float = 0.0


@dataclass(frozen=True)
class BetaVector:
    beta_msq: float
    beta_lam: float
    eta: float
    kappa_bar: float
    lam_prime: float
    denominator: float = 1.0

    def as_array(self):
        return np.array([self.beta_msq, self.beta_lam])


@dataclass(frozen=True)
class FlowConfig:
    """Numerical settings shared by every flow evaluation.

    ``measure_scale`` multiplies every threshold integral; it exists to test
    the covariance of universal quantities under a change of the loop measure
    normalization and is 1 in production.
    """

    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(rel_tol=1e-11))
    mu2_x_power: int = 2
    use_cache: bool = True
    measure_scale: float = 1.0
    eta_floor: float = ETA_FLOOR

    def __post_init__(self):
        if self.mu2_x_power not in (1, 2):
            raise ValueError("mu2_x_power must be 1 or 2")
        if not self.measure_scale > 0:
            raise ValueError("measure_scale must be positive")

    def with_scale(self, c):
        return replace(self, measure_scale=c)


def thresholds_for(msq, params, config=None):
    config = config or FlowConfig()
    fetch = cached_thresholds if config.use_cache else threshold_set
    ts = fetch(msq, params, config.quad, config.mu2_x_power)
    return ts.scaled(config.measure_scale)


def lambda_prime(state, ts):
    """Derivative of the effective quartic vertex at zero external momentum."""
    lam2 = state.lam ** 2
    return float(np.real(2.0 * lam2 / 3.0 * ts.I1 + 8.0 * lam2 * (ts.W1 + ts.W2)))


def kappa_bar(state, ts):
    """Dimensionless sixtic coupling slaved to the quartic one."""
    return float(np.real(4.0 / (3.0 * np.pi) * state.lam ** 3 * ts.I1))


def solve_eta(state, ts, floor=ETA_FLOOR, strict=False):
    """Solve the linear self-consistency equation for the anomalous dimension.

    Parameters
    ----------
    state : FlowState
    ts : ThresholdSet
        Thresholds (including the derivative pairs) at ``state.msq``.
    floor : float
        Denominators at or below this value mark the point as singular.
    strict : bool
        Raise :class:`SingularEta` instead of returning a flagged solution.

    Returns
    -------
    EtaSolution
    """
    if ts.msq != state.msq:
        raise ValueError("threshold set was computed at a different msq")
    lp = lambda_prime(state, ts)
    dL = ts.delta_L.real
    dD = ts.delta_D.real
    num = -(lp * dL.c0 + state.lam * dD.c0)
    den = 1.0 + lp * dL.c1 + state.lam * dD.c1
    singular = not den > floor
    if singular:
        sol = EtaSolution(np.nan, float(num), float(den), True, np.nan)
        if strict:
            raise SingularEta(f"eta denominator {den:.3e} <= {floor:g} at {state}", sol)
        return sol
    eta = num / den
    rhs = -lp * dL.value(eta) - state.lam * dD.value(eta)
    return EtaSolution(float(eta), float(num), float(den), False, float(abs(eta - rhs)))


def beta_from_thresholds(state, ts, floor=ETA_FLOOR):
    """Beta functions given precomputed thresholds; raises on singular eta."""
    sol = solve_eta(state, ts, floor, strict=True)
    eta = sol.eta
    lam = state.lam
    dL = float(np.real(ts.delta_L.value(eta)))
    kap = kappa_bar(state, ts)
    loops = float(np.real(ts.L31.value(eta) + 0.5 * ts.L32.value(eta) - ts.L33.value(eta)))
    beta_msq = -(2.0 + eta) * state.msq - RANK * lam * dL
    beta_lam = -2.0 * eta * lam - 1.5 * kap * dL + 16.0 * lam ** 2 / np.pi * loops
    # "+ 0.0" folds negative zeros so the Gaussian point prints as exact zeros
    return BetaVector(float(beta_msq) + 0.0, float(beta_lam) + 0.0, eta + 0.0, kap + 0.0,
                      lambda_prime(state, ts) + 0.0, sol.denominator)


def beta_functions(state, params, config=None):
    """``(beta_msq, beta_lam)`` together with eta, kappa and lam' at ``state``."""
    config = config or FlowConfig()
    if state.lam == 0.0:
        # free theory: every loop term carries a power of lam
        return BetaVector(-2.0 * state.msq + 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    ts = thresholds_for(state.msq, params, config)
    return beta_from_thresholds(state, ts, config.eta_floor)


def eta_at(state, params, config=None):
    config = config or FlowConfig()
    return solve_eta(state, thresholds_for(state.msq, params, config), config.eta_floor)


def eta_denominator(state, params, config=None):
    return eta_at(state, params, config).denominator


def eta_denominator_sign(state, params, config=None):
    """True iff the eta denominator is positive (physical region)."""
    return eta_denominator(state, params, config) > 0.0


def locate_denominator_zero(a, b, params, config=None, tol=1e-6):
    """Bisect the segment between states ``a`` and ``b`` for a zero of the
    eta denominator; the endpoints must have opposite signs."""
    pa = np.array([a.msq, a.lam])
    pb = np.array([b.msq, b.lam])
    fa = eta_denominator(a, params, config)
    fb = eta_denominator(b, params, config)
    if np.sign(fa) == np.sign(fb):
        raise ValueError("denominator has the same sign at both ends")
    while np.linalg.norm(pb - pa) > tol:
        pm = 0.5 * (pa + pb)
        fm = eta_denominator(FlowState(*pm), params, config)
        if np.sign(fm) == np.sign(fa):
            pa, fa = pm, fm
        else:
            pb, fb = pm, fm
    return FlowState(*(0.5 * (pa + pb)))


@dataclass(frozen=True)
class GaussianCoefficients:
    """Leading couplings of the flow near the Gaussian point.

    ``beta_lam = a0 lam^2 + ...`` and ``beta_msq = -2 msq + b0 lam + ...``.
    """

    a0: float
    b0: float
    a0_h: float
    a0_half_h: float
    b0_backward: float

    @property
    def ratio(self):
        return self.a0 / self.b0


def _a0_fit(params, config, h):
    lams = np.array([h, 2 * h, 3 * h])
    vals = np.array([beta_functions(FlowState(0.0, l), params, config).beta_lam for l in lams])
    # beta_lam / lam^2 = a0 + a1 lam + a2 lam^2 through three points
    coeffs = np.polyfit(lams, vals / lams ** 2, 2)
    return float(coeffs[-1])


def gaussian_coefficients(params, config=None, h_lam=1e-3, h_b=1e-4):
    """Extract ``(a0, b0)`` by finite differences at the Gaussian point."""
    config = config or FlowConfig()
    bp = beta_functions(FlowState(0.0, h_b), params, config).beta_msq
    bm = beta_functions(FlowState(0.0, -h_b), params, config).beta_msq
    b0 = (bp - bm) / (2 * h_b)
    b0_back = -bm / h_b
    a0_h = _a0_fit(params, config, h_lam)
    a0_half = _a0_fit(params, config, h_lam / 2)
    # the three-point fit leaves an O(h^3) remainder; one Richardson step removes it
    a0 = (8.0 * a0_half - a0_h) / 7.0
    return GaussianCoefficients(a0, float(b0), a0_h, a0_half, float(b0_back))


def normalization_constant(config=None):
    """Ratio between the closed-form sixtic coupling quoted for the
    ``alpha = 1, beta_hat = 0`` regulator, ``kappa = pi^4 lam^3 / 2`` at
    ``msq = 0``, and the value produced by the literal radial measure.

    A result different from 1 signals a uniform measure constant in the
    reference normalization.
    """
    config = config or FlowConfig()
    ts = thresholds_for(0.0, RegulatorParams(1.0, 0.0), replace(config, measure_scale=1.0))
    return float(np.pi ** 4 / 2.0 / kappa_bar(FlowState(0.0, 1.0), ts))
