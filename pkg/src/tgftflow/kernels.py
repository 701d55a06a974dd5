"""Dimensionless regulator and propagator kernels.

The regulator is a Litim momentum factor ``r(x) = alpha (1 - x) theta(1 - x)``
times a causal rational frequency factor ``rho(y) = 1 / (1 - i beta_hat y)``.
Everything here is a pure numpy function of its arguments and broadcasts over
arrays of ``x`` (squared momentum) and ``y`` (frequency).

The anomalous dimension of the response field is zero in the symmetric phase,
so the regulator derivatives (the ``mu`` kernels) are affine in ``eta`` and are
returned as an :class:`AffinePair`.  With a general ``eta_Y`` they would read

    mu1 = (2+eta) rho r - (2 - i b y (eta_Y - eta)) r / (1 - i b y)^2
          + 2 alpha theta / (1 - i b y)
    mu2 = eta_Y tau r + 2 b (2 + b^2 y^2 (eta_Y - eta)) r / (1 + b^2 y^2)^2
          - 2 alpha b x^2 theta / (1 + b^2 y^2)
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegulatorParams:
    """Regulator amplitude ``alpha`` and renormalized frequency scale ``beta_hat``.

    ``beta_hat = 0`` switches off coarse-graining in frequency.  ``alpha = 0``
    (no momentum coarse-graining) is accepted for limiting-case checks.
    """

    alpha: float
    beta_hat: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha!r}")
        if not np.isfinite(self.beta_hat) or self.beta_hat < 0:
            raise ValueError(f"beta_hat must be non-negative, got {self.beta_hat!r}")


@dataclass(frozen=True)
class KernelPoint:
    x: float
    y: float

    def __post_init__(self):
        if self.x < 0:
            raise ValueError("x is a squared momentum and must be >= 0")


@dataclass(frozen=True)
class AffinePair:
    """``c0 + eta * c1``; works for scalars and numpy arrays alike."""

    c0: complex
    c1: complex

    def value(self, eta):
        return self.c0 + eta * self.c1

    def __add__(self, other):
        return AffinePair(self.c0 + other.c0, self.c1 + other.c1)

    def __sub__(self, other):
        return AffinePair(self.c0 - other.c0, self.c1 - other.c1)

    def scaled(self, c):
        return AffinePair(c * self.c0, c * self.c1)

    @property
    def real(self):
        return AffinePair(np.real(self.c0), np.real(self.c1))


def _unpack(params):
    """``(alpha, beta_hat)`` from a RegulatorParams or a plain pair; the pair
    form allows array-valued ``beta_hat`` for vectorized kernel evaluation."""
    if isinstance(params, tuple):
        return params
    return params.alpha, params.beta_hat


def step(x):
    """theta(1 - x) with the half-open convention: 1 for x < 1, 0 for x >= 1."""
    return np.where(np.asarray(x) < 1.0, 1.0, 0.0)


def momentum_regulator(x, params):
    alpha, _ = _unpack(params)
    x = np.asarray(x, dtype=float)
    return alpha * (1.0 - x) * step(x)


def frequency_kernels(y, params):
    """Return ``(rho_hat(y), tau_hat(y))``.

    ``tau_hat`` is fixed by the fluctuation-dissipation constraint
    ``rho(y) - rho(-y) = -2 i y tau(y)``.
    """
    _, b = _unpack(params)
    y = np.asarray(y, dtype=float)
    rho = 1.0 / (1.0 - 1j * b * y)
    tau = -b / (1.0 + (b * y) ** 2)
    return rho, tau


def frequency_pole(params):
    """Location of the single pole of ``rho_hat`` in the complex y plane."""
    _, b = _unpack(params)
    if b == 0:
        return None
    return -1j / b


def propagator_denominator(x, y, msq, params):
    """``f(x, y) = i y + x + msq + rho(-y) r(x)``; ``f(x, -y) = conj f(x, y)``."""
    _, b = _unpack(params)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho_minus = 1.0 / (1.0 + 1j * b * y)
    return 1j * y + x + msq + rho_minus * momentum_regulator(x, params)


def mu_kernels(x, y, params, mu2_x_power=2):
    """Regulator-derivative kernels ``(mu1, mu2)`` as eta-affine pairs.

    ``mu2_x_power`` selects the power of ``x`` in the last term of ``mu2``
    (2 as printed; 1 is offered for sensitivity studies).
    """
    alpha, b = _unpack(params)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    th = step(x)
    r = alpha * (1.0 - x) * th
    den = 1.0 - 1j * b * y
    rho = 1.0 / den
    mu1 = AffinePair(
        2.0 * rho * r - 2.0 * r / den**2 + 2.0 * alpha * th / den,
        rho * r - 1j * b * y * r / den**2,
    )
    lor = 1.0 + (b * y) ** 2
    mu2 = AffinePair(
        (4.0 * b * r / lor**2 - 2.0 * alpha * b * x**mu2_x_power * th / lor) + 0j,
        (-2.0 * b**3 * y**2 * r / lor**2) + 0j,
    )
    return mu1, mu2
