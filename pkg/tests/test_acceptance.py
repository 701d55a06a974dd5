"""Acceptance suite: one group of tests per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints a
PASS/FAIL line for every criterion together with the measured values.
"""

import time

import numpy as np
import pytest

from tgftflow.equilibrium import (SYSTEMS, EqState, eq_beta_constrained, eq_fixed_points,
                                  sd_renormalization_factors, sd_solve_sigma)
from tgftflow.fixedpoint import find_fixed_point
from tgftflow.flow import (FlowConfig, FlowState, beta_from_thresholds, beta_functions, eta_at,
                           gaussian_coefficients, kappa_bar, normalization_constant,
                           thresholds_for)
from tgftflow.kernels import RegulatorParams, frequency_kernels
from tgftflow.portrait import (TOWARD_IR, TOWARD_UV, integrate_trajectory, linearized_trajectory,
                               oscillation_period)
from tgftflow.quadrature import QuadratureSpec, mc_oracle_integral
from tgftflow.scan import EmptyResult, SeedOptions, msp_scan, stationary_points
from tgftflow.thresholds import component_integrands, derivative_pair, shifted_L2, threshold_set

from conftest import FP_LAM_WINDOW

LITIM = RegulatorParams(1.0, 0.0)
ACCEPT_SPEC = QuadratureSpec(rel_tol=1e-10)


def _fmt_theta(th):
    return f"{th.real:.4g}{th.imag:+.4g}i"


# ------------------------------------------------------------------ 1

@pytest.mark.criterion(1)
def test_fdt_identity(criterion_note):
    rng = np.random.default_rng(1)
    y = rng.uniform(-50, 50, 10**4)
    b = rng.uniform(0, 2, 10**4)
    t0 = time.perf_counter()
    rho_p, tau = frequency_kernels(y, (1.0, b))
    rho_m, _ = frequency_kernels(-y, (1.0, b))
    resid = np.abs(rho_p - rho_m + 2j * y * tau) / np.maximum(1.0, np.abs(2 * y * tau))
    elapsed = time.perf_counter() - t0
    criterion_note(f"max relative residual {resid.max():.2e} on 1e4 points, {elapsed * 1e3:.1f} ms")
    assert resid.max() <= 1e-12
    assert elapsed < 1.0


# ------------------------------------------------------------------ 2

@pytest.mark.criterion(2)
def test_gaussian_fixed_point(criterion_note):
    t0 = time.perf_counter()
    b = beta_functions(FlowState(0.0, 0.0), LITIM, FlowConfig(use_cache=False))
    # the same point through freshly integrated thresholds
    ts = threshold_set(0.0, LITIM, ACCEPT_SPEC)
    b2 = beta_from_thresholds(FlowState(0.0, 0.0), ts)
    elapsed = time.perf_counter() - t0
    criterion_note(f"beta(0,0) = ({b.beta_msq}, {b.beta_lam}), eta = {b.eta}; {elapsed:.2f} s")
    assert (b.beta_msq, b.beta_lam, b.eta) == (0.0, 0.0, 0.0)
    assert (b2.beta_msq, b2.beta_lam, b2.eta) == (0.0, 0.0, 0.0)
    assert elapsed < 10


# ------------------------------------------------------------------ 3

@pytest.fixture(scope="module")
def gaussian_litim():
    t0 = time.perf_counter()
    gc = gaussian_coefficients(LITIM)
    return gc, time.perf_counter() - t0


@pytest.mark.criterion(3)
def test_gaussian_coefficient_ratio(gaussian_litim, criterion_note):
    gc, elapsed = gaussian_litim
    criterion_note(f"a0 = {gc.a0:.6g}, b0 = {gc.b0:.6g}, a0/b0 = {gc.ratio:.6g} "
                   f"(target -2 within 1e-4); {elapsed:.1f} s")
    assert elapsed < 120
    assert gc.ratio == pytest.approx(-2.0, abs=1e-4)


@pytest.mark.criterion(3)
def test_gaussian_coefficient_values(gaussian_litim, criterion_note):
    gc, _ = gaussian_litim
    c = normalization_constant()
    detected = not np.isclose(c, 1.0, rtol=1e-6)
    scaled = (c * gc.a0, c * gc.b0) if detected else (gc.a0, gc.b0)
    criterion_note(f"normalization constant c = {c:.10g} (pi^2 = {np.pi ** 2:.10g}); "
                   f"c*a0 = {scaled[0]:.6g}, c*b0 = {scaled[1]:.6g}; "
                   f"a0/c = {gc.a0 / c:.6g}, b0/c = {gc.b0 / c:.6g} (targets 32.90, -16.45)")
    raw_ok = (gc.a0, gc.b0) == pytest.approx((32.90, -16.45), rel=0.02)
    assert raw_ok or scaled == pytest.approx((32.90, -16.45), rel=0.02)


# ------------------------------------------------------------------ 4

@pytest.mark.criterion(4)
def test_kappa_ratio_laws(criterion_note):
    t0 = time.perf_counter()

    def kap(m, p):
        return kappa_bar(FlowState(m, 1.0), thresholds_for(m, p))

    k0 = kap(0.0, LITIM)
    dev1 = max(abs(kap(m, LITIM) / k0 - (m * (m + 3) + 3) / (3 * (1 + m) ** 3))
               / ((m * (m + 3) + 3) / (3 * (1 + m) ** 3)) for m in (0.5, 1.0, 2.0))

    freq = RegulatorParams(0.0, 1.0)
    prod = [m * kap(m, freq) for m in (0.5, 1.0, 2.0)]
    dev2 = np.ptp(prod) / abs(np.mean(prod))

    mixed = RegulatorParams(1.0, 1.0)

    def closed(m):
        return (m * (m + 7) + 2 * (m + 1) * (2 * m + 3) * np.log1p(m)
                - 2 * (1 + m) * (2 * m + 3) * np.log(2 + m) + 7) / (1 + m) ** 3

    km0 = kap(0.0, mixed)
    dev3 = max(abs(kap(m, mixed) / km0 / (closed(m) / closed(0.0)) - 1) for m in (0.5, 1.0))
    elapsed = time.perf_counter() - t0
    criterion_note(f"relative deviations: Litim {dev1:.1e}, frequency-only {dev2:.1e}, "
                   f"mixed {dev3:.1e}; {elapsed:.1f} s")
    assert dev1 <= 1e-6 and dev2 <= 1e-6 and dev3 <= 1e-5
    assert elapsed < 120


# ------------------------------------------------------------------ 5

FP_TARGETS = {4.0: (1.57, 4.11, 1.06), 7.0: (1.28, 1.98, 0.4)}


@pytest.mark.criterion(5)
@pytest.mark.parametrize("alpha", [4.0, 7.0])
def test_fixed_point_exponents(alpha, fixed_point_alpha4, fixed_point_alpha7, criterion_note):
    fp = fixed_point_alpha4 if alpha == 4.0 else fixed_point_alpha7
    assert fp is not None, f"no non-Gaussian fixed point at alpha={alpha}"
    target = FP_TARGETS[alpha]
    got = (fp.re_theta, fp.im_theta, fp.eta_star)
    criterion_note(f"alpha={alpha:g}: fixed point ({fp.state.msq:.5g}, {fp.state.lam:.5g}), "
                   f"theta = {_fmt_theta(fp.theta[0])}, {_fmt_theta(fp.theta[1])}, "
                   f"eta = {fp.eta_star:.4g} (target theta {target[0]}+/-{target[1]}i, "
                   f"eta {target[2]})")
    assert got == pytest.approx(target, rel=0.05)


# ------------------------------------------------------------------ 6

@pytest.fixture(scope="module")
def msp_grid():
    t0 = time.perf_counter()
    grid = msp_scan(np.linspace(2.0, 5.0, 15), np.linspace(0.05, 0.5, 10), FlowConfig(),
                    SeedOptions(lam_range=FP_LAM_WINDOW))
    return grid, time.perf_counter() - t0


@pytest.mark.criterion(6)
def test_msp_stationary_point(msp_grid, criterion_note):
    grid, elapsed = msp_grid
    statuses = [c.status for row in grid.cells for c in row]
    n_ok = statuses.count("ok")
    hits = []
    for obs in ("re_theta", "im_theta", "eta_star"):
        try:
            pts = stationary_points(grid, obs)
        except EmptyResult:
            continue
        hits += [(obs, a, b) for a, b, _, _ in pts
                 if abs(a - 3.2) <= 0.4 and abs(b - 0.28) <= 0.10]
    re, im, eta = (grid.values(k) for k in ("re_theta", "im_theta", "eta_star"))
    criterion_note(f"15x10 grid: {n_ok}/150 cells solved in {elapsed / 60:.1f} min; "
                   f"Re theta in [{np.nanmin(re):.3g}, {np.nanmax(re):.3g}], "
                   f"Im theta in [{np.nanmin(im):.3g}, {np.nanmax(im):.3g}], "
                   f"eta in [{np.nanmin(eta):.3g}, {np.nanmax(eta):.3g}]; "
                   f"{len(hits)} stationary points in the target window")
    good = []
    for _, a, b in hits:
        i = int(np.argmin(np.abs(grid.alphas - a)))
        j = int(np.argmin(np.abs(grid.betas - b)))
        r = grid.cell(i, j).report
        theta_ok = abs(complex(r.re_theta, r.im_theta) - (4.45 + 5.46j)) <= 0.15 * abs(4.45 + 5.46j)
        if theta_ok and abs(r.eta_star + 0.05) <= 0.05:
            good.append((a, b))
    assert good, "no stationary point with the target exponents in the window"


# ------------------------------------------------------------------ 7

@pytest.mark.criterion(7)
def test_covariance_eta(criterion_note):
    rng = np.random.default_rng(7)
    base = FlowConfig()
    scaled = base.with_scale(2.0)
    worst = 0.0
    for _ in range(50):
        p = RegulatorParams(rng.uniform(0.5, 8.0), rng.uniform(0.0, 1.0))
        m, lam = rng.uniform(-0.5, 2.0), rng.uniform(-0.05, 0.05)
        e1 = eta_at(FlowState(m, lam), p, base).eta
        e2 = eta_at(FlowState(m, lam / 2), p, scaled).eta
        worst = max(worst, abs(e2 - e1) / max(abs(e1), 1e-12))
    criterion_note(f"eta at 50 random states: max relative change {worst:.1e}")
    assert worst <= 1e-4


@pytest.mark.criterion(7)
def test_covariance_theta(fixed_point_alpha7, flow_config, criterion_note):
    fp = fixed_point_alpha7
    assert fp is not None
    params = RegulatorParams(7.0, 0.0)
    fp2 = find_fixed_point(params, FlowState(fp.state.msq, fp.state.lam / 2),
                           flow_config.with_scale(2.0))
    d = max(abs(a - b) / abs(a) for a, b in zip(fp.theta, fp2.theta))
    criterion_note(f"theta at the alpha=7 fixed point: max relative change {d:.1e}; "
                   f"lam* ratio {fp2.state.lam / fp.state.lam:.8f}")
    assert d <= 1e-4


# ------------------------------------------------------------------ 8

@pytest.mark.criterion(8)
def test_derivative_identity(criterion_note):
    rng = np.random.default_rng(8)
    h = 1e-3
    worst = 0.0
    for _ in range(10):
        m, p = rng.uniform(0, 2), RegulatorParams(rng.uniform(0.5, 8), rng.uniform(0, 1))
        d21, _ = derivative_pair(m, p, ACCEPT_SPEC)
        L = [shifted_L2(a, m, p, ACCEPT_SPEC)[0] for a in (0.0, h, 2 * h, 3 * h, 4 * h)]
        for part in ("c0", "c1"):
            v = [getattr(l, part).real for l in L]
            # fourth-order one-sided stencil
            fd = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
            exact = getattr(d21, part).real
            worst = max(worst, abs(fd - exact) / abs(exact))
    criterion_note(f"D21 vs finite difference at 10 random points: max relative error {worst:.1e}")
    assert worst <= 1e-4


# ------------------------------------------------------------------ 9

@pytest.mark.criterion(9)
def test_monte_carlo_oracle(criterion_note):
    rng = np.random.default_rng(9)
    worst, checked, failures = 0.0, 0, []
    for k in range(20):
        m, p = rng.uniform(0, 2), RegulatorParams(rng.uniform(0.5, 8), rng.uniform(0, 1))
        ts = threshold_set(m, p, QuadratureSpec())
        values = ts.as_dict()
        for name, (g, dim, pref) in component_integrands(m, p).items():
            r = mc_oracle_integral(g, 10**6, seed=1000 + k, dim=dim,
                                   x_support=None if name == "I1" else 1.0)
            sigma = np.hypot(abs(pref) * r.err_estimate, ts.errors[name])
            if sigma == 0:
                # both sides vanish identically (frequency-only terms at beta_hat = 0)
                assert pref * r.value == 0 and values[name] == 0
                continue
            z = abs((pref * r.value).real - values[name].real) / sigma
            worst = max(worst, z)
            checked += 1
            if z > 3:
                failures.append(f"{name}@{k}: {z:.2f} sigma")
    criterion_note(f"{checked} component comparisons, worst deviation {worst:.2f} sigma"
                   + (f"; outside 3 sigma: {', '.join(failures)}" if failures else ""))
    assert not failures


# ------------------------------------------------------------------ 10

@pytest.mark.criterion(10)
def test_equilibrium_module(criterion_note):
    t0 = time.perf_counter()
    slopes = {name: fn(EqState(0.0, 1e-5))[2] / 1e-5 / (4 * np.pi ** 2)
              for name, fn in SYSTEMS.items()}
    roots = {name: eq_fixed_points(name, n=50) for name in SYSTEMS}
    resid = max(eq_beta_constrained(EqState(m, l))[3]
                for m in np.linspace(-0.9, 2.0, 50) for l in np.linspace(0.0, 0.2, 50))
    elapsed = time.perf_counter() - t0
    criterion_note("eta/(4 pi^2 lam) at lam=1e-5: "
                   + ", ".join(f"{k} {v:.5f}" for k, v in slopes.items())
                   + f"; non-trivial roots: {sum(map(len, roots.values()))}; "
                   f"max constraint residual {resid:.1e}; {elapsed:.1f} s")
    assert all(abs(v - 1) <= 1e-2 for v in slopes.values())
    assert not any(roots.values())
    assert resid < 1e-12
    assert elapsed < 60


# ------------------------------------------------------------------ 11

@pytest.mark.criterion(11)
def test_schwinger_dyson(criterion_note):
    t0 = time.perf_counter()
    sol = sd_solve_sigma(1e-3, 20)
    z_inf, z_lam, res = sd_renormalization_factors(sol)
    cutoffs = [10, 20, 40, 80]
    A = [sd_solve_sigma(1e-3, c).a_infty for c in cutoffs]
    corr = np.corrcoef(np.log(cutoffs), A)[0, 1]
    elapsed = time.perf_counter() - t0
    criterion_note(f"Z_inf = {z_inf:.12f}, Z_lam = {z_lam:.12f}, residual {res:.1e}; "
                   f"A_inf vs ln cutoff correlation {corr:.6f}; {elapsed:.1f} s")
    assert res < 1e-8
    assert corr > 0.999
    assert elapsed < 600


# ------------------------------------------------------------------ 12

@pytest.mark.criterion(12)
@pytest.mark.parametrize("direction,sign", [(TOWARD_UV, -1), (TOWARD_IR, +1)])
def test_free_line_law(direction, sign, criterion_note):
    rec = integrate_trajectory(FlowState(0.4, 0.0), direction, RegulatorParams(3.0, 0.2),
                               t_max=1.0)
    dev = np.max(np.abs(rec.msq - 0.4 * np.exp(sign * 2 * rec.t)))
    criterion_note(f"free line toward {direction}: max deviation {dev:.1e} over t in [0, 1]")
    assert rec.t[-1] == pytest.approx(1.0) and dev < 1e-6


@pytest.mark.criterion(12)
def test_spiral_period(fixed_point_alpha7, flow_config, criterion_note):
    fp = fixed_point_alpha7
    assert fp is not None
    im = abs(fp.im_theta)
    if im == 0:
        criterion_note(f"theta = {_fmt_theta(fp.theta[0])}, {_fmt_theta(fp.theta[1])} is real: "
                       "trajectories near the alpha=7 fixed point do not spiral")
    assert im > 0, "real critical exponents: no spiral"
    period = 2 * np.pi / im
    x0 = fp.state.as_array() + np.array([1e-5, 1e-7])
    # toward the UV the fixed point is attractive for Re theta > 0
    rec = integrate_trajectory(FlowState(*x0), TOWARD_UV, RegulatorParams(7.0, 0.0), flow_config,
                               t_max=3 * period, max_step=period / 40)
    lin = linearized_trajectory(fp, x0, rec.t, TOWARD_UV)

    class _Lin:
        t, msq = rec.t, lin[:, 0]

    p_num, p_lin = oscillation_period(rec), oscillation_period(_Lin)
    criterion_note(f"period: numerical {p_num:.4g}, linearized {p_lin:.4g}, "
                   f"2 pi/|Im theta| = {period:.4g}")
    assert p_num == pytest.approx(period, rel=0.1)
    assert p_num == pytest.approx(p_lin, rel=0.1)
