"""Renormalization group trajectories and region maps in the (msq, lam) plane.

Trajectories are integrated in the dimensionless log-scale ``t`` with the
embedded Runge-Kutta 4(5) scheme of ``scipy.integrate.RK45``, driven step by
step so that every accepted point can be checked against the stop conditions.  Toward the
UV the couplings obey ``dX/dt = +beta(X)``, toward the IR ``dX/dt = -beta(X)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .flow import FlowConfig, FlowState, SingularEta, beta_functions, eta_at
from .quadrature import NonConvergence
from .thresholds import DomainError

TOWARD_UV = "toward-UV"
TOWARD_IR = "toward-IR"
TERMINATIONS = ("box-exit", "singular-region", "wall", "step-floor", "t-budget")

SINGULAR_STOP = 1e-3  # eta denominator below which integration stops
WALL_MARGIN = 1e-6
DEFAULT_BOX = ((-1.0, 10.0), (-1.0, 1.0))


class ImmediateTermination(RuntimeError):
    """The start point already violates a termination condition."""


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    msq: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    termination: str
    direction: str = TOWARD_UV
    meta: dict = field(default_factory=dict)

    @property
    def samples(self):
        return [(float(t), FlowState(float(m), float(l)), float(e))
                for t, m, l, e in zip(self.t, self.msq, self.lam, self.eta)]

    @property
    def end(self):
        return FlowState(float(self.msq[-1]), float(self.lam[-1]))

    def rows(self):
        return [{"t": float(t), "msq": float(m), "lam": float(l), "eta": float(e)}
                for t, m, l, e in zip(self.t, self.msq, self.lam, self.eta)]


class _Stop(Exception):
    def __init__(self, reason):
        self.reason = reason


def _sign(direction):
    if direction == TOWARD_UV:
        return 1.0
    if direction == TOWARD_IR:
        return -1.0
    raise ValueError(f"direction must be {TOWARD_UV!r} or {TOWARD_IR!r}")


def _check_point(x, params, config, box):
    """Termination reason at ``x`` or None."""
    (m0, m1), (l0, l1) = box
    if x[0] <= -1.0 + WALL_MARGIN:
        return "wall"
    if not (m0 <= x[0] <= m1 and l0 <= x[1] <= l1):
        return "box-exit"
    if x[1] != 0.0:
        try:
            den = eta_at(FlowState(float(x[0]), float(x[1])), params, config).denominator
        except (DomainError, NonConvergence):
            return "wall"
        if not den > SINGULAR_STOP:
            return "singular-region"
    return None


def integrate_trajectory(start, direction, params, config=None, t_max=10.0, box=DEFAULT_BOX,
                         rtol=1e-8, atol=1e-8, max_step=np.inf, max_samples=None):
    """Integrate one RG trajectory from ``start``.

    Parameters
    ----------
    start : FlowState
    direction : {"toward-UV", "toward-IR"}
    params : RegulatorParams
    config : FlowConfig, optional
    t_max : float
        Log-scale budget.
    box : ((msq_lo, msq_hi), (lam_lo, lam_hi))
        Leaving the box ends the trajectory.
    max_samples : int, optional
        Uniformly thin the accepted steps to at most this many samples (the
        first and last are always kept).

    Returns
    -------
    TrajectoryRecord
        All samples are physical; the termination reason is one of
        ``box-exit``, ``singular-region``, ``wall``, ``step-floor``, ``t-budget``.
    """
    config = config or FlowConfig()
    sgn = _sign(direction)
    x0 = np.array([start.msq, start.lam], dtype=float)
    reason = _check_point(x0, params, config, box)
    if reason is not None:
        raise ImmediateTermination(f"start {start} fails: {reason}")

    ts, xs = [0.0], [x0]

    def rhs(t, x):
        if x[0] <= -1.0 + WALL_MARGIN:
            raise _Stop("wall")
        try:
            b = beta_functions(FlowState(float(x[0]), float(x[1])), params, config)
        except SingularEta:
            raise _Stop("singular-region") from None
        except (DomainError, NonConvergence):
            raise _Stop("wall") from None
        return sgn * b.as_array()

    termination = "t-budget"
    solver = RK45(rhs, 0.0, x0, t_max, rtol=rtol, atol=atol, max_step=max_step)
    while True:
        try:
            solver.step()
        except _Stop as stop:
            termination = stop.reason
            break
        if solver.status == "failed":
            termination = "step-floor"
            break
        x = solver.y.copy()
        reason = _check_point(x, params, config, box)
        if reason is not None:
            termination = reason
            break
        ts.append(solver.t)
        xs.append(x)
        if solver.status == "finished":
            break
    t = np.array(ts)
    X = np.array(xs)
    if max_samples is not None and len(t) > max_samples:
        keep = np.unique(np.round(np.linspace(0, len(t) - 1, max_samples)).astype(int))
        t, X = t[keep], X[keep]
    eta = np.array([beta_functions(FlowState(m, l), params, config).eta for m, l in X])
    return TrajectoryRecord(t, X[:, 0].copy(), X[:, 1].copy(), eta, termination, direction)


def region_map(box, resolution, params, config=None):
    """Classify grid nodes of ``box`` as physical / singular / wall.

    Parameters
    ----------
    box : ((msq_lo, msq_hi), (lam_lo, lam_hi))
    resolution : int or (int, int)
        Number of nodes along ``msq`` and ``lam``.

    Returns
    -------
    msq : ndarray, lam : ndarray, labels : ndarray of str, shape (n_lam, n_msq)
    """
    config = config or FlowConfig()
    nm, nl = (resolution, resolution) if np.isscalar(resolution) else resolution
    (m0, m1), (l0, l1) = box
    if m0 <= -1.0:
        raise ValueError("box must lie in msq > -1")
    ms = np.linspace(m0, m1, nm)
    ls = np.linspace(l0, l1, nl)
    labels = np.empty((nl, nm), dtype=object)
    for j, l in enumerate(ls):
        for i, m in enumerate(ms):
            try:
                sol = eta_at(FlowState(float(m), float(l)), params, config)
                labels[j, i] = "physical" if sol.denominator > 0 else "singular"
            except (DomainError, NonConvergence):
                labels[j, i] = "wall"
    return ms, ls, labels


def region_rows(ms, ls, labels):
    return [{"msq": float(m), "lam": float(l), "region": labels[j, i]}
            for j, l in enumerate(ls) for i, m in enumerate(ms)]


def _departure_direction(M):
    """Real unit vector along the eigenvector of the linearized IR flow with
    the largest growth rate; for complex exponents the real part of the
    complex eigenvector is used (a convention)."""
    J = np.asarray(M).T  # d beta_i / d g_j
    w, V = np.linalg.eig(-J)  # IR flow: d(delta)/dt = -J delta
    k = int(np.argmax(w.real))
    v = V[:, k]
    if np.iscomplexobj(v):
        # rotate so the real part carries the largest weight
        phase = np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
        v = (v * phase).real
    return v / np.linalg.norm(v), w


def trace_separatrix(fp, params, config=None, eps=1e-4, t_max=30.0, box=DEFAULT_BOX):
    """Both IR branches leaving a non-Gaussian fixed point along its leading
    eigen-direction, started at ``fp +/- eps v``.

    The branches carry ``meta["convention"]`` describing the eigenvector choice.
    """
    if fp.is_gaussian(1e-10):
        raise ValueError("separatrix needs a non-Gaussian fixed point")
    v, w = _departure_direction(fp.jacobian)
    x = fp.state.as_array()
    out = []
    for s in (+1.0, -1.0):
        y = x + s * eps * v
        rec = integrate_trajectory(FlowState(float(y[0]), float(y[1])), TOWARD_IR, params,
                                   config, t_max=t_max, box=box)
        rec.meta = {"convention": "real part of leading eigenvector of the linearized IR flow",
                    "direction": v.tolist(), "sign": s, "eps": eps}
        out.append(rec)
    return tuple(out)


def extremum_times(t, values):
    """Times of interior local extrema of a sampled signal (parabolic refinement)."""
    t = np.asarray(t)
    v = np.asarray(values)
    out = []
    for k in range(1, len(v) - 1):
        if (v[k] - v[k - 1]) * (v[k + 1] - v[k]) < 0:
            t0, t1, t2 = t[k - 1:k + 2]
            y0, y1, y2 = v[k - 1:k + 2]
            den = (t0 - t1) * (t0 - t2) * (t1 - t2)
            a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / den
            b = (t2 ** 2 * (y0 - y1) + t1 ** 2 * (y2 - y0) + t0 ** 2 * (y1 - y2)) / den
            out.append(-b / (2 * a) if a != 0 else t1)
    return np.array(out)


def oscillation_period(record, component="msq"):
    """Mean spacing between successive maxima (or minima) of one coupling.

    Returns NaN when fewer than two extrema of the same kind occur.
    """
    ext = extremum_times(record.t, getattr(record, component))
    if len(ext) < 3:
        return float("nan")
    # alternate maxima and minima: same-kind extrema are two apart
    return float(np.mean(ext[2:] - ext[:-2]))


def linearized_trajectory(fp, x0, t, direction=TOWARD_IR):
    """Linearized flow ``delta(t) = exp(-/+ J t) delta(0)`` about a fixed point."""
    from scipy.linalg import expm
    J = np.asarray(fp.jacobian).T
    sgn = _sign(direction)
    d0 = np.asarray(x0, dtype=float) - fp.state.as_array()
    return np.array([fp.state.as_array() + expm(sgn * J * s) @ d0 for s in np.atleast_1d(t)])
