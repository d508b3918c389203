"""Leaf family construction and foliation diagnostics.

A sweep solves the leaf equation on a geometric schedule of scales,
warm-starting each solve from the previous leaf.  The family is
certified as a foliation by resampling every leaf as a Euclidean radial
graph and checking that the profiles strictly increase as r decreases;
the per-pair gap, normalized by the geometric-mean scale, measures the
-1/r^2 (1 + O(r)) descent rate of the profiles.

Per-leaf diagnostics follow the asymptotic foliation classes: balance
(distance/diameter ratio from a fixed point), weak balance (drift of the
geodesic center), regularity (sup|A| times diameter) and diameter
pinching.  All distances are chart-Euclidean; the ambient-metric
correction enters the limits only at relative O(r^(n-1)) and is reported
with the curvature data instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curvature import mean_curvature
from .errors import DivergenceError
from .graphs import radial_graph, round_sphere_graph, embed_grid
from .sphere import SpectralField
from .solver import LeafRecord, solve_leaf, scaled_graph, target_mean_curvature


@dataclass(frozen=True)
class SweepSchedule:
    """Geometric schedule of scales: r_start, r_start*ratio, ... >= r_end."""

    r_start: float
    r_end: float
    ratio: float

    def __post_init__(self):
        if not 0.5 < self.ratio < 0.95:
            raise ValueError("schedule ratio must lie in (0.5, 0.95)")
        if not 0.0 < self.r_end <= self.r_start:
            raise ValueError("need 0 < r_end <= r_start")

    def radii(self):
        out = []
        r = self.r_start
        while r >= self.r_end * (1.0 - 1e-12):
            out.append(r)
            r *= self.ratio
        return out


@dataclass(frozen=True)
class LeafDiagnostics:
    """Definition-style ratios of one leaf (chart-Euclidean distances)."""

    balance_ratio: float
    weak_balance_ratio: float
    regularity_product: float
    pinch_ratio: float
    geodesic_center: np.ndarray
    geodesic_center_score: float


@dataclass
class FoliationRecord:
    """Ordered sweep output plus nesting and diagnostic layers."""

    leaves: list
    radial_profiles: Optional[list] = None
    nesting_margin: Optional[float] = None
    normalized_gap_range: Optional[list] = None
    diagnostics: Optional[list] = None
    nested: Optional[bool] = None
    aborted_at: Optional[float] = None
    failure: Optional[str] = None

    @property
    def radii(self):
        return [leaf.r for leaf in self.leaves]


class SweepDivergence(DivergenceError):
    """A leaf solve diverged; carries the partial record."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def sweep(spec, schedule, plan, tol=1e-10, r_max=0.15):
    """Solve the leaf family over a schedule, warm-starting each scale.

    The warm start scales the previous (tau, phi) by the step ratio,
    matching their O(r) magnitudes.  Any divergence raises
    SweepDivergence with the partial record attached.
    """
    leaves = []
    warm = (np.zeros(3), SpectralField.constant(plan, 0.0))
    for r in schedule.radii():
        try:
            leaf = solve_leaf(spec, r, warm=warm, tol=tol, r_max=r_max)
        except DivergenceError as exc:
            partial = FoliationRecord(leaves=leaves, aborted_at=r,
                                      failure=str(exc))
            raise SweepDivergence(
                f"sweep aborted at r={r:.6g}: {exc}", partial
            ) from exc
        leaves.append(leaf)
        warm = (leaf.tau * schedule.ratio, schedule.ratio * leaf.phi)
    return FoliationRecord(leaves=leaves)


def leaf_radial_profile(spec, leaf):
    """Radial-graph profile of a converged leaf."""
    return radial_graph(scaled_graph(spec, leaf.r, leaf.tau, leaf.phi))


def nesting_check(spec, fol):
    """Certify nesting of adjacent leaves and measure the descent rate.

    margin = min over adjacent pairs (r_k > r_{k+1}) and nodes of
    profile(r_{k+1}) - profile(r_k); the normalized gap
    r_k r_{k+1} (profile(r_{k+1}) - profile(r_k)) / (r_k - r_{k+1})
    sits near 1 when the profiles descend like -1/r^2.
    """
    if len(fol.leaves) < 2:
        raise ValueError("nesting check needs at least two leaves")
    if fol.radial_profiles is None:
        fol.radial_profiles = [leaf_radial_profile(spec, leaf) for leaf in fol.leaves]
    margins = []
    gap_ranges = []
    for a, b, pa, pb in zip(fol.leaves, fol.leaves[1:],
                            fol.radial_profiles, fol.radial_profiles[1:]):
        gap = pb.values - pa.values
        margins.append(float(np.min(gap)))
        norm = a.r * b.r * gap / (a.r - b.r)
        gap_ranges.append((float(np.min(norm)), float(np.max(norm))))
    fol.nesting_margin = min(margins)
    fol.normalized_gap_range = gap_ranges
    fol.nested = fol.nesting_margin > 0.0
    return {
        "margin": fol.nesting_margin,
        "pair_margins": margins,
        "normalized_gap_range": gap_ranges,
        "nested": fol.nested,
    }


def _point_surface_stats(p, points):
    d = np.linalg.norm(points - p, axis=-1)
    return float(np.min(d)), float(np.max(d))


def geodesic_center_search(points, start, scale, rel_tol=1e-4):
    """Maximize dist(p, S)/diam(p, S) by lattice seeding + pattern search.

    points is the surface point cloud, start the initial interior guess
    and scale the initial search radius; the search refines until the
    step is below rel_tol * scale.
    """
    def score(p):
        dmin, dmax = _point_surface_stats(p, points)
        return dmin / dmax

    best_p = np.asarray(start, dtype=float)
    best_s = score(best_p)
    offsets = np.array([[i, j, k] for i in (-1, 0, 1)
                        for j in (-1, 0, 1) for k in (-1, 0, 1)], dtype=float)
    for cand in start + 0.25 * scale * offsets:
        s = score(cand)
        if s > best_s:
            best_p, best_s = cand, s
    step = 0.25 * scale
    axes = np.vstack([np.eye(3), -np.eye(3)])
    while step > rel_tol * scale:
        moved = False
        for ax in axes:
            cand = best_p + step * ax
            s = score(cand)
            if s > best_s:
                best_p, best_s = cand, s
                moved = True
        if not moved:
            step *= 0.5
    return best_p, best_s


def leaf_diagnostics(spec, leaf, p0):
    """Definition-style ratios of one leaf about the fixed point p0."""
    points = embed_grid(scaled_graph(spec, leaf.r, leaf.tau, leaf.phi)).reshape(-1, 3)
    p0 = np.asarray(p0, dtype=float)
    dmin0, dmax0 = _point_surface_stats(p0, points)
    centroid = points.mean(axis=0)
    d_c, _ = _point_surface_stats(centroid, points)
    center, score = geodesic_center_search(points, centroid, d_c)
    _, diam_from_center = _point_surface_stats(center, points)
    return LeafDiagnostics(
        balance_ratio=dmin0 / dmax0,
        weak_balance_ratio=float(np.linalg.norm(p0 - center)) / diam_from_center,
        regularity_product=leaf.curvature.sup_A * leaf.curvature.diam,
        pinch_ratio=dmax0 / dmin0,
        geodesic_center=center,
        geodesic_center_score=score,
    )


def diagnostics(spec, fol, p0=(0.0, 0.0, 0.0)):
    """Per-leaf diagnostic table for a foliation record.

    Computed regardless of nesting; the record's nested flag (when
    present) qualifies the interpretation.
    """
    fol.diagnostics = [leaf_diagnostics(spec, leaf, p0) for leaf in fol.leaves]
    return fol.diagnostics


def synthetic_round_leaf(spec, plan, r, center, radius):
    """A LeafRecord whose surface is the exact round chart sphere
    (center, radius); used by nesting/diagnostic checks and tests."""
    graph = round_sphere_graph(plan, r, center, radius)
    report = mean_curvature(spec, graph)
    phi = SpectralField.constant(plan, (1.0 - r * radius) / r ** (spec.n - 1))
    return LeafRecord(
        r=r, tau=graph.tau, phi=phi,
        target_H=target_mean_curvature(spec, r),
        residual_sup=0.0, iterations=0, curvature=report,
    )
