import numpy as np
import pytest

from tgftflow.equilibrium import (CutoffTooSmall, EqState, IterationDiverged, SYSTEMS,
                                  brute_force_sums, eq_beta_constrained, eq_beta_truncation,
                                  eq_eta_constrained, eq_eta_truncation, eq_fixed_points,
                                  lattice_sums, melonic_sum, quadratic_fit_coefficient,
                                  sd_renormalization_factors, sd_solve_sigma, sd_summary)
from tgftflow.flow import SingularEta

PI2 = np.pi ** 2


@pytest.mark.parametrize("system", sorted(SYSTEMS))
def test_gaussian_point(system):
    vals = SYSTEMS[system](EqState(0.0, 0.0))
    assert vals[:3] == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("eta", [eq_eta_truncation, eq_eta_constrained])
def test_eta_slope_near_gaussian_point(eta):
    ratios = [eta(EqState(0.0, lam)) / lam for lam in (1e-3, 1e-4, 1e-5)]
    assert ratios[-1] == pytest.approx(4 * PI2, rel=1e-2)
    # the approach is monotone in lam
    assert abs(ratios[2] - 4 * PI2) < abs(ratios[1] - 4 * PI2) < abs(ratios[0] - 4 * PI2)


@pytest.mark.parametrize("system", sorted(SYSTEMS))
def test_coupling_is_asymptotically_free_at_small_lam(system):
    for m in (0.0, 0.5):
        assert SYSTEMS[system](EqState(m, 1e-4))[1] < 0


@pytest.mark.parametrize("system", sorted(SYSTEMS))
def test_no_nontrivial_fixed_point(system):
    assert eq_fixed_points(system, n=50) == []


def test_fixed_point_finder_sees_planted_root():
    def planted(state):
        return state.msq - 0.3, (state.lam - 0.05) * state.lam ** 2, 0.0

    roots = eq_fixed_points(planted, n=20)
    assert len(roots) == 1 and np.allclose(roots[0], [0.3, 0.05], atol=1e-10)


def test_constraint_residual():
    worst = max(eq_beta_constrained(EqState(m, l))[3]
                for m in np.linspace(-0.9, 2.0, 15) for l in np.linspace(0.0, 0.2, 15))
    assert worst < 1e-12


def test_singular_denominator_is_reported(monkeypatch):
    import tgftflow.equilibrium as eq

    # a floor above every denominator value marks the point singular
    monkeypatch.setattr(eq, "EQ_ETA_FLOOR", 1e6)
    for eta in (eq_eta_truncation, eq_eta_constrained):
        with pytest.raises(SingularEta):
            eta(EqState(0.0, 0.01))
    with pytest.raises(ValueError):
        EqState(-1.0, 0.1)


def test_truncation_returns_three_values():
    assert len(eq_beta_truncation(EqState(0.2, 0.01))) == 3


# ------------------------------------------------------------ Schwinger-Dyson

def test_lattice_sums_match_brute_force():
    rng = np.random.default_rng(0)
    e = np.arange(6) ** 2.0 + rng.uniform(0, 0.3, 6)
    S, A = lattice_sums(e, 1.3)
    Sb, Ab = brute_force_sums(e, 1.3)
    assert np.allclose(S, Sb, rtol=1e-10)
    assert A == pytest.approx(Ab, rel=1e-10)
    assert melonic_sum(1.3 + e[2], e, 1.3) == pytest.approx(Sb[2], rel=1e-10)


def test_zero_coupling_is_trivial():
    sol = sd_solve_sigma(0.0, 10)
    assert np.all(sol.sigma_r == 0)
    assert sol.z_lambda == 1 and sol.z_infty == pytest.approx(1.0, abs=1e-12)


@pytest.fixture(scope="module")
def sd20():
    return sd_solve_sigma(1e-3, 20)


def test_renormalization_conditions(sd20):
    assert sd20.sigma_r[0] == 0
    assert abs(quadratic_fit_coefficient(sd20.sigma_r)) < 1e-8


def test_z_identity(sd20):
    z_inf, z_lam, res = sd_renormalization_factors(sd20)
    assert res < 1e-8
    assert z_lam > 1
    assert sd_summary(sd20)["identity_residual"] == res


def test_self_consistency(sd20):
    S, A = lattice_sums(sd20.p2 + sd20.sigma_r, 1.0)
    z_lam = 1 / (1 - 2e-3 * A)
    raw = -2 * z_lam * 1e-3 * S
    a = raw[0]
    b = quadratic_fit_coefficient(raw)
    assert np.allclose(sd20.sigma_r, -(raw - a - b * sd20.p2), atol=1e-9)


def test_a_infty_grows_logarithmically():
    cutoffs = [10, 20, 40, 80]
    A = [sd_solve_sigma(1e-3, c).a_infty for c in cutoffs]
    assert np.all(np.diff(A) > 0)
    assert np.corrcoef(np.log(cutoffs), A)[0, 1] > 0.999


def test_input_validation():
    with pytest.raises(CutoffTooSmall):
        sd_solve_sigma(1e-3, 4)
    with pytest.raises(ValueError):
        sd_solve_sigma(1e-3, 10, damping=0.0)
    with pytest.raises(IterationDiverged):
        sd_solve_sigma(1e-2, 80)
