"""Threshold integrals of the flow equations.

All thresholds are momentum-frequency integrals of rational functions of the
propagator denominator ``f = f(x, y)`` and its conjugate ``fm = f(x, -y)``.
With ``T = 1 + tau r`` and the radial reduction ``int_{R^4} -> pi^2 int s ds``:

    L21 = (2/pi) int mu1 T / (f fm^2)       L22 = (2/pi) int mu2 / (f fm)
    L31 = int mu1 T / (f^3 fm)              L32 = int mu1 T / (f^2 fm^2)
    L33 = int mu2 / (f^2 fm)                I1  = int T / (f^3 fm)
    W1  = alpha int rho theta T / (f fm^2) (2/fm + 1/f)
    W2  = -alpha int tau theta / (f fm^2)

Every integrand except the one of ``I1`` vanishes for ``x >= 1``.  The ``L``
thresholds are affine in the anomalous dimension and are stored as
:class:`~tgftflow.kernels.AffinePair`.

``D21`` and ``D22`` are the first derivatives of ``L21`` and ``L22`` with
respect to an external squared momentum ``a`` entering as ``x -> x + a``.  An
integration by parts gives ``D = -(2/pi) pi^2 int dy int_0^1 ds g`` with ``g``
the ``L`` integrand stripped of its radial weight, i.e. ``-2`` times the same
integrand integrated over R^2 x R.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import (AffinePair, RegulatorParams, frequency_kernels,
                      momentum_regulator, mu_kernels, propagator_denominator, step)
from .quadrature import QuadratureSpec, frequency_momentum_integral

AFFINE_NAMES = ("L21", "L22", "D21", "D22", "L31", "L32", "L33")
SCALAR_NAMES = ("I1", "W1", "W2")

# order of the stacked integrand components on [0, 1]
_COMPONENTS = (
    "L21.c0", "L21.c1", "L22.c0", "L22.c1",
    "D21.c0", "D21.c1", "D22.c0", "D22.c1",
    "L31.c0", "L31.c1", "L32.c0", "L32.c1", "L33.c0", "L33.c1",
    "I1", "W1", "W2",
)


class DomainError(ValueError):
    """Raised where the propagator has a zero on the integration domain,
    in particular at or beyond the pole ``msq = -1``."""


def check_msq(msq):
    if not np.isfinite(msq) or msq <= -1.0:
        raise DomainError(f"msq must exceed -1 (got {msq!r})")


def propagator_zero(msq, params):
    """A squared momentum ``x`` in ``[0, 1)`` where ``f(x, y)`` vanishes for
    some real ``y``, or None.

    At ``y = 0``, ``f = x + msq + r(x)`` is smallest at ``x = 0`` (for
    ``alpha >= 1`` the minimum ``1 + msq`` sits at the end of the support).
    For ``beta_hat > 0`` the imaginary part also vanishes where
    ``1 + beta_hat^2 y^2 = beta_hat r(x)``; the real part there is
    ``x + msq + 1/beta_hat``.
    """
    a, b = params.alpha, params.beta_hat
    if msq + a <= 0.0:
        return 0.0
    if b > 0:
        x0 = -msq - 1.0 / b
        if 0.0 <= x0 < 1.0 and a * (1.0 - x0) * b > 1.0:
            return float(x0)
    return None


def check_domain(msq, params):
    """Reject ``msq`` values whose integrands have non-integrable poles."""
    check_msq(msq)
    x0 = propagator_zero(msq, params)
    if x0 is not None:
        raise DomainError(f"propagator vanishes at x = {x0:.6g} for msq = {msq!r}, {params}")


@dataclass(frozen=True)
class ThresholdSet:
    """All thresholds at one mass value.

    ``errors`` maps each component name (e.g. ``"L21.c0"``, ``"I1"``) to the
    quadrature error estimate.
    """

    msq: float
    params: RegulatorParams
    L21: AffinePair
    L22: AffinePair
    D21: AffinePair
    D22: AffinePair
    L31: AffinePair
    L32: AffinePair
    L33: AffinePair
    I1: complex
    W1: complex
    W2: complex
    errors: dict = field(default_factory=dict, compare=False, repr=False)
    evaluations: int = field(default=0, compare=False, repr=False)

    @property
    def delta_L(self):
        """``L21 - L22``, the combination entering the mass flow."""
        return self.L21 - self.L22

    @property
    def delta_D(self):
        return self.D21 - self.D22

    def scaled(self, c):
        """Every threshold multiplied by the constant ``c``."""
        if c == 1:
            return self
        kw = {n: getattr(self, n).scaled(c) for n in AFFINE_NAMES}
        kw.update({n: c * getattr(self, n) for n in SCALAR_NAMES})
        errors = {k: abs(c) * v for k, v in self.errors.items()}
        return replace(self, errors=errors, **kw)

    def as_dict(self):
        """Flat ``{component: complex}`` mapping in a fixed order."""
        out = {}
        for n in AFFINE_NAMES:
            p = getattr(self, n)
            out[n + ".c0"] = complex(p.c0)
            out[n + ".c1"] = complex(p.c1)
        for n in SCALAR_NAMES:
            out[n] = complex(getattr(self, n))
        return out


def _pieces(x, y, msq, params, mu2_x_power):
    alpha, _ = params.alpha, params.beta_hat
    f = propagator_denominator(x, y, msq, params)
    fm = np.conj(f)
    rho, tau = frequency_kernels(y, params)
    r = momentum_regulator(x, params)
    T = 1.0 + tau * r
    mu1, mu2 = mu_kernels(x, y, params, mu2_x_power)
    th = step(x)
    return dict(f=f, fm=fm, rho=rho, tau=tau, T=T, mu1=mu1, mu2=mu2, th=th, alpha=alpha)


def component_integrands(msq, params, mu2_x_power=2):
    """Un-weighted integrands ``g(s, y)`` of every threshold component.

    Returns ``{name: (g, dim, prefactor)}``: the component equals
    ``prefactor * int_{R^dim} d^dim x int dy g(|x|^2, y)``.  Used by the
    Monte Carlo cross-check; the production path in :func:`threshold_set`
    evaluates the same expressions in one stacked pass.
    """
    check_domain(msq, params)

    def make(key):
        def g(s, y):
            p = _pieces(s, y, msq, params, mu2_x_power)
            return _raw(p, key)
        return g

    out = {}
    for name in _COMPONENTS:
        base = name.replace("D2", "L2")
        if name.startswith("L2"):
            out[name] = (make(base), 4, 2.0 / np.pi)
        elif name.startswith("D2"):
            out[name] = (make(base), 2, -2.0)
        else:
            out[name] = (make(base), 4, 1.0)
    return out


def _raw(p, key):
    """Integrand of one component without prefactor and radial weight."""
    f, fm, T = p["f"], p["fm"], p["T"]
    name, _, part = key.partition(".")
    mu1 = getattr(p["mu1"], part) if part else None
    mu2 = getattr(p["mu2"], part) if part else None
    if name == "L21":
        return mu1 * T / (f * fm**2)
    if name == "L22":
        return mu2 / (f * fm)
    if name == "L31":
        return mu1 * T / (f**3 * fm)
    if name == "L32":
        return mu1 * T / (f**2 * fm**2)
    if name == "L33":
        return mu2 / (f**2 * fm)
    if name == "I1":
        return T / (f**3 * fm)
    if name == "W1":
        return p["alpha"] * p["rho"] * p["th"] * T / (f * fm**2) * (2.0 / fm + 1.0 / f)
    if name == "W2":
        return -p["alpha"] * p["tau"] * p["th"] / (f * fm**2)
    raise KeyError(key)


def _stacked(msq, params, mu2_x_power, components):
    """Vector integrand with plain ``ds dy`` measure on ``0 <= s <= 1``."""
    radial = np.pi**2
    two_over_pi = 2.0 / np.pi

    def g(s, y):
        p = _pieces(s, y, msq, params, mu2_x_power)
        rows = []
        for name in components:
            base = name.replace("D2", "L2")
            v = _raw(p, base)
            if name.startswith("L2"):
                v = two_over_pi * radial * s * v
            elif name.startswith("D2"):
                v = -two_over_pi * radial * v
            else:
                v = radial * s * v
            rows.append(v)
        return np.stack(rows)

    return g


def _integrate(msq, params, spec, mu2_x_power, components):
    check_domain(msq, params)
    spec = spec or QuadratureSpec()
    g = _stacked(msq, params, mu2_x_power, components)
    res = frequency_momentum_integral(g, (0.0, 1.0), spec)
    values = dict(zip(components, res.value))
    errors = dict(zip(components, np.atleast_1d(res.err_estimate).tolist()))
    evaluations = res.evaluations
    if "I1" in components:
        # only I1 survives beyond the regulator support
        def tail(s, y):
            f = 1j * y + s + msq
            return np.pi**2 * s / (f**3 * np.conj(f))

        t = frequency_momentum_integral(tail, (1.0, np.inf), spec)
        values["I1"] += t.value
        errors["I1"] += t.err_estimate
        evaluations += t.evaluations
    return values, errors, evaluations


def threshold_set(msq, params, spec=None, mu2_x_power=2):
    """Evaluate every threshold at mass parameter ``msq > -1``."""
    values, errors, evaluations = _integrate(msq, params, spec, mu2_x_power, _COMPONENTS)
    kw = {n: AffinePair(values[n + ".c0"], values[n + ".c1"]) for n in AFFINE_NAMES}
    kw.update({n: values[n] for n in SCALAR_NAMES})
    return ThresholdSet(msq=float(msq), params=params, errors=errors,
                        evaluations=evaluations, **kw)


def derivative_pair(msq, params, spec=None, mu2_x_power=2):
    """``(D21, D22)`` alone, cheaper than a full :func:`threshold_set`."""
    names = ("D21.c0", "D21.c1", "D22.c0", "D22.c1")
    values, _, _ = _integrate(msq, params, spec, mu2_x_power, names)
    return (AffinePair(values["D21.c0"], values["D21.c1"]),
            AffinePair(values["D22.c0"], values["D22.c1"]))


def shifted_L2(a, msq, params, spec=None, mu2_x_power=2):
    """``(L21, L22)`` at external squared momentum ``a`` (argument ``x + a``).

    Direct evaluation used to cross-check the derivative thresholds by finite
    differences; the shifted regulator kink sits at ``s = 1 - a``.
    """
    check_domain(msq, params)
    spec = spec or QuadratureSpec()
    if 0 < 1.0 - a < np.inf and (1.0 - a) not in spec.x_split:
        spec = spec.with_splits(1.0 - a)
    names = ("L21.c0", "L21.c1", "L22.c0", "L22.c1")
    base = _stacked(msq, params, mu2_x_power, names)

    def g(s, y):
        # _stacked applies the radial weight to its own argument; undo and reapply
        xs = s + a
        with np.errstate(divide="ignore", invalid="ignore"):
            v = base(xs, y) * np.where(xs > 0, s / xs, 0.0)
        return v

    hi = max(1.0 - a, 0.0)
    res = frequency_momentum_integral(g, (0.0, hi), spec)
    v = res.value
    return AffinePair(v[0], v[1]), AffinePair(v[2], v[3])


# ---------------------------------------------------------------- caching

class _Cache:
    def __init__(self, maxsize=4096):
        self.maxsize = maxsize
        self.enabled = True
        self.hits = 0
        self.misses = 0
        self._store = {}

    def key(self, msq, params, spec, mu2_x_power):
        # exact bit pattern of msq: no tolerance-based matching
        return (float(msq).hex(), params, spec, mu2_x_power)

    def get(self, msq, params, spec, mu2_x_power):
        spec = spec or QuadratureSpec()
        if not self.enabled:
            self.misses += 1
            return threshold_set(msq, params, spec, mu2_x_power)
        k = self.key(msq, params, spec, mu2_x_power)
        hit = self._store.get(k)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        ts = threshold_set(msq, params, spec, mu2_x_power)
        if len(self._store) >= self.maxsize:
            self._store.pop(next(iter(self._store)))
        self._store[k] = ts
        return ts

    def clear(self):
        self._store.clear()
        self.hits = self.misses = 0


_CACHE = _Cache()


def cached_thresholds(msq, params, spec=None, mu2_x_power=2):
    """Memoized :func:`threshold_set`, keyed by the exact bits of ``msq``."""
    return _CACHE.get(msq, params, spec, mu2_x_power)


def cache_info():
    return {"hits": _CACHE.hits, "misses": _CACHE.misses,
            "size": len(_CACHE._store), "enabled": _CACHE.enabled}


def clear_cache():
    _CACHE.clear()


def set_cache_enabled(flag):
    _CACHE.enabled = bool(flag)
