"""Desk-scale checks of the uniqueness machinery.

The blow-up limits behind uniqueness are replaced by their measurable
finite-r consequences: the roundness defect of each leaf (constant mean
curvature times corrected diameter approaching 2n), the scalar map from
a mean-curvature value back to its scale, the center-drift ratio
|tau|/r, the kernel integral inequality that bounds center drift, and
direct perturbation trials of the solver's uniqueness basin.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AdmissibilityError, DivergenceError, DomainError, RangeError
from .jacobi import unit_ball_volume
from .solver import solve_leaf, scaled_graph, R_MAX_SOLVER
from .sphere import get_plan, SpectralField


def roundness_defect(spec, leaf):
    """H_tilde * diam_g - 2n for a converged leaf.

    H_tilde is the leaf's unrescaled constant mean curvature
    r * target_H; diam_g the chord-corrected diameter carried by the
    curvature report.
    """
    h_tilde = leaf.r * leaf.target_H
    return h_tilde * leaf.curvature.diam_g - 2.0 * spec.n


def r_from_mean_curvature(h_tilde, spec, r_max=R_MAX_SOLVER):
    """Solve n r - sigma n^2/2 r^n = H_tilde for the small root.

    Safeguarded Newton on a bracket that excludes the large root of the
    positive-mass polynomial; raises RangeError when no root lies in
    (0, r_max].
    """
    n, sigma = spec.n, spec.sigma
    f = lambda r: n * r - 0.5 * sigma * n * n * r ** n - h_tilde
    df = lambda r: n - 0.5 * sigma * n ** 3 * r ** (n - 1)
    hi = r_max
    if sigma > 0.0:
        # the polynomial peaks at (2/(sigma n^2))^(1/(n-1)); stay left of it
        hi = min(hi, (2.0 / (sigma * n * n)) ** (1.0 / (n - 1)))
    lo = 0.0
    if h_tilde <= 0.0 or f(hi) < 0.0:
        raise RangeError(f"no scale in (0, {r_max}] attains H={h_tilde:.6g}")
    r = min(h_tilde / n, hi)
    for _ in range(100):
        fr = f(r)
        if fr < 0.0:
            lo = r
        else:
            hi = r
        dfr = df(r)
        r_new = r - fr / dfr if dfr != 0.0 else 0.5 * (lo + hi)
        if not lo < r_new < hi:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) <= 1e-16 * max(1.0, r):
            return r_new
        r = r_new
    return r


def center_drift_check(fol):
    """Per-leaf |tau|/r table with its maximum."""
    if len(fol.leaves) < 3:
        raise ValueError("center drift check needs at least three leaves")
    ratios = [leaf.tau_norm / leaf.r for leaf in fol.leaves]
    return {"ratios": ratios, "max": max(ratios)}


def kernel_bound_integral(ell, n=2, lmax=32):
    """Quadrature value and closed-form bound of the kernel integral.

    lhs = -int x^1 |1 + ell x^1|^(1-n) - (n-1) int x^1 |1 + ell x^1|^(-n)
    over the unit sphere, rhs = (n-1)(n+1) omega_{n+1} ell.  The
    quadrature machinery ships for n = 2 only.
    """
    if not 0.0 < ell < 1.0:
        raise DomainError("ell must lie in (0, 1)")
    if n != 2:
        raise DomainError("sphere quadrature is available for n = 2 only")
    plan = get_plan(lmax)
    x1 = plan.unit_vectors()[..., 0]
    base = np.abs(1.0 + ell * x1)
    integrand = -x1 * base ** (1 - n) - (n - 1) * x1 * base ** (-n)
    lhs = plan.integrate(integrand)
    rhs = (n - 1) * (n + 1) * unit_ball_volume(n + 1) * ell
    return lhs, rhs


@dataclass(frozen=True)
class BasinTrial:
    """One perturbation trial of the uniqueness basin."""

    index: int
    dtau_norm: float
    dphi_sup: float
    status: str            # returned | escaped | diverged | skipped
    distance: Optional[float] = None


def _random_field(plan, rng, sup_bound):
    coeffs = rng.standard_normal(plan.ncoef())
    f = SpectralField.from_coeffs(plan, coeffs)
    sup = f.sup()
    scale = sup_bound * rng.uniform(0.2, 1.0) / max(sup, 1e-300)
    return scale * f


def uniqueness_basin(spec, leaf, trials, dtau, dphi, seed, tol=1e-8,
                     threads=None):
    """Perturb a converged leaf and re-solve, recording returns.

    Each trial draws |delta tau| <= dtau uniformly in the ball and a
    random field with sup <= dphi, re-runs the solver from the perturbed
    warm start, and checks the coefficient distance to the original
    leaf.  Inadmissible draws are reported as skipped, not solved.
    """
    rng = np.random.default_rng(seed)
    plan = leaf.phi.plan
    draws = []
    for k in range(trials):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        dt = direction * dtau * rng.uniform(0.0, 1.0) ** (1.0 / 3.0)
        df = _random_field(plan, rng, dphi)
        draws.append((k, dt, df))

    def run(draw):
        k, dt, df = draw
        tau0 = leaf.tau + dt
        phi0 = leaf.phi + df
        try:
            scaled_graph(spec, leaf.r, tau0, phi0)
        except AdmissibilityError:
            return BasinTrial(k, float(np.linalg.norm(dt)), df.sup(), "skipped")
        try:
            out = solve_leaf(spec, leaf.r, warm=(tau0, phi0))
        except DivergenceError:
            return BasinTrial(k, float(np.linalg.norm(dt)), df.sup(), "diverged")
        dist = out.coefficient_distance(leaf)
        status = "returned" if dist < tol else "escaped"
        return BasinTrial(k, float(np.linalg.norm(dt)), df.sup(), status, dist)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, draws))
    else:
        outcomes = [run(d) for d in draws]
    solved = [t for t in outcomes if t.status != "skipped"]
    returned = sum(t.status == "returned" for t in solved)
    return {
        "trials": outcomes,
        "attempted": len(solved),
        "returned": returned,
        "success_fraction": returned / len(solved) if solved else float("nan"),
    }


@dataclass
class UniquenessReport:
    """Aggregate of the desk-scale uniqueness checks over a sweep."""

    roundness: list = field(default_factory=list)
    r_consistency: list = field(default_factory=list)
    center_ratios: dict = field(default_factory=dict)
    kernel_bound: list = field(default_factory=list)
    basin: Optional[dict] = None


def uniqueness_report(spec, fol, basin_cfg=None, seed=0, threads=None,
                      ell_grid=None):
    """Compose the uniqueness checks for a converged foliation record."""
    rep = UniquenessReport()
    for leaf in fol.leaves:
        rep.roundness.append(roundness_defect(spec, leaf))
        h_tilde = leaf.r * leaf.target_H
        rep.r_consistency.append(
            abs(r_from_mean_curvature(h_tilde, spec) - leaf.r)
        )
    rep.center_ratios = center_drift_check(fol)
    if ell_grid is None:
        ell_grid = np.linspace(0.05, 0.9, 17)
    for ell in ell_grid:
        lhs, rhs = kernel_bound_integral(float(ell), n=spec.n)
        rep.kernel_bound.append({"ell": float(ell), "lhs": lhs, "rhs": rhs})
    if basin_cfg is not None:
        idx = min(range(len(fol.leaves)),
                  key=lambda i: abs(fol.leaves[i].r - basin_cfg.get("r", 0.05)))
        rep.basin = uniqueness_basin(
            spec, fol.leaves[idx],
            trials=basin_cfg.get("trials", 20),
            dtau=basin_cfg.get("dtau", 0.1),
            dphi=basin_cfg.get("dphi", 0.05),
            seed=seed, threads=threads,
        )
        rep.basin["leaf_r"] = fol.leaves[idx].r
    return rep
