"""Regulator-dependence scans over ``(alpha, beta_hat)``.

Rows of constant ``beta_hat`` are independent units of work: the first cell
of a row is seeded by a coarse grid search, every further cell by Newton
continuation from its already solved neighbour.  Rows may run in a process
pool (size from ``TGFTFLOW_THREADS``); since no information crosses rows the
result does not depend on the number of workers.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fixedpoint import (FixedPointReport, LeftPhysicalRegion, NoConvergence,
                         find_fixed_point, locate_fixed_points)
from .flow import FlowConfig, SingularEta
from .kernels import RegulatorParams
from .quadrature import NonConvergence
from .thresholds import DomainError

CSV_COLUMNS = ("alpha", "beta_hat", "msq_star", "lam_star", "eta_star",
               "re_theta", "im_theta", "status")

OBSERVABLES = {
    "eta_star": lambda fp: fp.eta_star,
    "re_theta": lambda fp: fp.re_theta,
    "im_theta": lambda fp: fp.im_theta,
}


class EmptyResult(LookupError):
    """No stationary point on the physical part of the grid."""


@dataclass(frozen=True)
class SeedOptions:
    """How the first cell of each row is seeded.

    ``lam_range`` bounds the coupling axis of the sign-change grid.  Among the
    fixed points found, the one with the largest leading ``Re theta`` (the most
    UV-attractive) is followed.
    """

    msq_range: tuple = (-0.9, 1.0)
    lam_range: tuple = (0.0, 0.1)
    n: int = 20


@dataclass
class ScanCell:
    alpha: float
    beta_hat: float
    report: FixedPointReport = None
    status: str = "ok"


@dataclass
class ScanGrid:
    alphas: np.ndarray
    betas: np.ndarray
    cells: list = field(repr=False)  # cells[j][i] for beta index j, alpha index i

    @property
    def shape(self):
        return (len(self.betas), len(self.alphas))

    def cell(self, i_alpha, j_beta):
        return self.cells[j_beta][i_alpha]

    def values(self, observable):
        """Array ``[j_beta, i_alpha]`` of an observable, NaN on holes."""
        fn = OBSERVABLES[observable] if isinstance(observable, str) else observable
        out = np.full(self.shape, np.nan)
        for j, row in enumerate(self.cells):
            for i, c in enumerate(row):
                if c.report is not None:
                    out[j, i] = fn(c.report)
        return out

    def rows(self):
        """Flat records in grid order (beta outer, alpha inner)."""
        recs = []
        for row in self.cells:
            for c in row:
                r = c.report
                recs.append({
                    "alpha": c.alpha, "beta_hat": c.beta_hat,
                    "msq_star": r.state.msq if r else float("nan"),
                    "lam_star": r.state.lam if r else float("nan"),
                    "eta_star": r.eta_star if r else float("nan"),
                    "re_theta": r.re_theta if r else float("nan"),
                    "im_theta": r.im_theta if r else float("nan"),
                    "status": c.status,
                })
        return recs


_FAILURES = (NoConvergence, LeftPhysicalRegion, SingularEta, DomainError, NonConvergence)


def _status(exc):
    return {NoConvergence: "no-convergence", LeftPhysicalRegion: "left-physical-region",
            SingularEta: "singular-eta", DomainError: "domain", NonConvergence: "quadrature"
            }.get(type(exc), "error")


def _seed_search(params, config, seed):
    fps = locate_fixed_points(params, config, seed.msq_range, seed.lam_range, seed.n)
    if not fps:
        return None
    return max(fps, key=lambda f: (f.re_theta, -f.state.msq))


def scan_row(alphas, beta_hat, config=None, seed=None, reverse=False):
    """Solve one row of constant ``beta_hat`` by continuation in ``alpha``."""
    config = config or FlowConfig()
    seed = seed or SeedOptions()
    order = list(range(len(alphas)))
    if reverse:
        order.reverse()
    cells = [None] * len(alphas)
    prev = None
    for i in order:
        a = float(alphas[i])
        params = RegulatorParams(a, float(beta_hat))
        cell = ScanCell(a, float(beta_hat))
        rep = None
        if prev is not None:
            try:
                rep = find_fixed_point(params, prev.state, config)
                if rep.is_gaussian(1e-6):
                    rep = None
            except _FAILURES as exc:
                cell.status = _status(exc)
        if rep is None:
            try:
                rep = _seed_search(params, config, seed)
                cell.status = "ok" if rep is not None else "no-fixed-point"
            except _FAILURES as exc:
                cell.status = _status(exc)
        else:
            cell.status = "ok"
        cell.report = rep
        cells[i] = cell
        if rep is not None:
            prev = rep
    return cells


def _row_job(args):
    return scan_row(*args)


def worker_count():
    try:
        return max(1, int(os.environ.get("TGFTFLOW_THREADS", "1")))
    except ValueError:
        return 1


def msp_scan(alphas, betas, config=None, seed=None, workers=None):
    """Fixed-point observables on the rectangular grid ``alphas x betas``.

    Parameters
    ----------
    alphas, betas : sequence of float
        Grid axes; ``alpha`` in ``(0, 10]`` and ``beta_hat`` in ``[0, 2]``.
    config : FlowConfig, optional
    seed : SeedOptions, optional
    workers : int, optional
        Process-pool size; defaults to ``TGFTFLOW_THREADS`` (or 1).

    Returns
    -------
    ScanGrid
        Every cell carries a report or a failure status; failures never abort
        the scan.
    """
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if alphas.size == 0 or betas.size == 0:
        raise ValueError("empty scan axis")
    if alphas.min() <= 0 or alphas.max() > 10:
        raise ValueError("alpha must lie in (0, 10]")
    if betas.min() < 0 or betas.max() > 2:
        raise ValueError("beta_hat must lie in [0, 2]")
    config = config or FlowConfig()
    seed = seed or SeedOptions()
    workers = workers or worker_count()
    jobs = [(alphas, b, config, seed) for b in betas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    return ScanGrid(alphas, betas, rows)


def stationary_points(grid, observable, rel_tol=1e-2):
    """Interior grid points where the observable is stationary.

    A direction counts as stationary when the one-sided differences on either
    side change sign, or when the centred change per cell is below
    ``rel_tol`` times the grid RMS of the observable.  Axes with fewer than
    three points are ignored.  Stencils touching a hole are skipped.

    Returns
    -------
    list of (alpha, beta_hat, value, kind)
        ``kind`` is one of ``"min"``, ``"max"``, ``"saddle"``, ``"flat"``.

    Raises
    ------
    EmptyResult
    """
    V = grid.values(observable) if not isinstance(grid, np.ndarray) else grid
    alphas = grid.alphas if not isinstance(grid, np.ndarray) else np.arange(V.shape[1])
    betas = grid.betas if not isinstance(grid, np.ndarray) else np.arange(V.shape[0])
    finite = V[np.isfinite(V)]
    if finite.size == 0:
        raise EmptyResult("grid has no physical cells")
    tol = rel_tol * float(np.sqrt(np.mean(finite ** 2)))
    nb, na = V.shape
    use_a = na >= 3
    use_b = nb >= 3
    if not (use_a or use_b):
        raise EmptyResult("grid too small for interior points")
    out = []
    for j in range(1 if use_b else 0, nb - 1 if use_b else nb):
        for i in range(1 if use_a else 0, na - 1 if use_a else na):
            js = slice(j - 1, j + 2) if use_b else slice(j, j + 1)
            is_ = slice(i - 1, i + 2) if use_a else slice(i, i + 1)
            if not np.all(np.isfinite(V[js, is_])):
                continue
            ok = True
            hess = []
            for use, fw, bw in ((use_a, V[j, i + 1] if use_a else 0, V[j, i - 1] if use_a else 0),
                                (use_b, V[j + 1, i] if use_b else 0, V[j - 1, i] if use_b else 0)):
                if not use:
                    continue
                f0 = V[j, i]
                d_fwd, d_bwd = fw - f0, f0 - bw
                flat = abs(0.5 * (fw - bw)) <= tol
                if not (d_fwd * d_bwd <= 0 or flat):
                    ok = False
                hess.append(fw - 2 * f0 + bw)
            if not ok:
                continue
            if use_a and use_b:
                mixed = 0.25 * (V[j + 1, i + 1] - V[j + 1, i - 1] - V[j - 1, i + 1] + V[j - 1, i - 1])
                ev = np.linalg.eigvalsh(np.array([[hess[0], mixed], [mixed, hess[1]]]))
            else:
                ev = np.array(hess)
            if np.all(np.abs(ev) <= tol):
                kind = "flat"
            elif np.all(ev > 0):
                kind = "min"
            elif np.all(ev < 0):
                kind = "max"
            else:
                kind = "saddle"
            out.append((float(alphas[i]), float(betas[j]), float(V[j, i]), kind))
    if not out:
        raise EmptyResult("no stationary point on the physical sub-region")
    return out
