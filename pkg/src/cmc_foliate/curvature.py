"""Mean curvature of graph surfaces in an asymptotically flat metric.

The rescaled inward mean curvature of a leaf is computed from exact
spectral derivatives of the embedding: induced metric, inward unit
normal and second fundamental form are assembled pointwise on the
quadrature grid with the ambient metric and Christoffel symbols in
closed form.  The only discretization in the whole pipeline is the band
limit of the graph function itself, so round spheres in closed-form
metrics are reproduced to roundoff.  Orientation is pinned by the flat
unit sphere having mean curvature +n with respect to the inward normal.

A truncated expansion of the curvature of coordinate spheres (centered
off the chart origin) doubles as an independent oracle for tests and
for the cross-check mode of the command line tool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FoldError
from .metric import metric_at, christoffel_at, perturbation_at, MetricSpec, TranslatedCenter
from .graphs import SphereGraph, surface_jets
from .sphere import SpectralField


@dataclass(frozen=True)
class CurvatureReport:
    """Curvature data of one embedded leaf.

    H is the rescaled mean curvature field; sup_A the largest-magnitude
    shape-operator eigenvalue of the embedded (unrescaled) surface in g;
    diam the chart-Euclidean extrinsic diameter; diam_g_factor the
    relative correction of the straight-chord g-length of the diameter
    pair, so diam_g = diam * diam_g_factor.
    """

    H: SpectralField
    sup_A: float
    diam: float
    diam_g_factor: float
    area: float

    @property
    def diam_g(self):
        return self.diam * self.diam_g_factor


def _metric_form_unchecked(spec, x):
    """Metric tensor by its closed-form expression, without the chart
    validity check; used only for report-style chord integrals."""
    if isinstance(spec.perturbation, TranslatedCenter):
        z = x - spec.perturbation.center
    else:
        z = x
    rho = np.linalg.norm(z, axis=-1)
    rho = np.maximum(rho, 1e-12)
    psi = 1.0 + spec.sigma * rho ** (1.0 - spec.n)
    g = psi[..., None, None] * np.eye(spec.dim)
    if spec.perturbation is not None and not isinstance(spec.perturbation, TranslatedCenter):
        g = g + perturbation_at(spec, x)[0]
    return g


def chord_g_length(spec, p, q, nquad=64):
    """g-length of the straight chart segment from p to q.

    The closed-form metric expression is integrated along the chord; the
    quadratic form is clipped at zero where the formula leaves the
    positive-definite regime (negative mass near the center).  The chord
    parameter is split at the closest approach to the conformal center
    and squared on each side, which removes the integrable square-root
    singularity of chords through the center.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    center = (spec.perturbation.center
              if isinstance(spec.perturbation, TranslatedCenter)
              else np.zeros(3))
    dy = q - p
    span = float(dy @ dy)
    t0 = 0.0 if span == 0.0 else float(np.clip((center - p) @ dy / span, 0.0, 1.0))
    t, w = np.polynomial.legendre.leggauss(nquad)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    total = 0.0
    for a, b in ((t0, 0.0), (t0, 1.0)):
        length = abs(b - a)
        if length == 0.0:
            continue
        # substitution s = a + (b-a) v^2 regularizes sqrt singularities at a
        ts = a + (b - a) * t * t
        ws = w * 2.0 * t * length
        pts = p[None, :] + ts[:, None] * dy[None, :]
        g = _metric_form_unchecked(spec, pts)
        quad = np.einsum("tij,i,j->t", g, dy, dy)
        total += float(np.sum(ws * np.sqrt(np.maximum(quad, 0.0))))
    return total


def _diameter(points):
    """Extrinsic Euclidean diameter of a point cloud and its arg pair."""
    pts = points.reshape(-1, 3)
    if len(pts) > 1500:
        center = pts.mean(axis=0)
        order = np.argsort(-np.linalg.norm(pts - center, axis=1))
        pts = pts[order[:400]]
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    i, j = np.unravel_index(np.argmax(d2), d2.shape)
    return float(np.sqrt(d2[i, j])), pts[i], pts[j]


def mean_curvature(spec, graph):
    """Rescaled inward mean curvature report of a leaf.

    H(x) is 1/r times the mean curvature of the embedded surface at
    y(x) with respect to the inward g-unit normal; the flat unit sphere
    returns +n.
    """
    y, y_t, y_l, y_tt, y_tl, y_ll = surface_jets(graph, second=True)
    rad = np.linalg.norm(y, axis=-1)
    if np.min(rad) < spec.r_min * (1.0 - 1e-12):
        raise DomainError("embedded surface exits the chart validity region")

    g = metric_at(spec, y)
    gamma = christoffel_at(spec, y)

    # induced metric
    g11 = np.einsum("...ij,...i,...j->...", g, y_t, y_t)
    g12 = np.einsum("...ij,...i,...j->...", g, y_t, y_l)
    g22 = np.einsum("...ij,...i,...j->...", g, y_l, y_l)
    det = g11 * g22 - g12 * g12
    if np.min(det) <= 0.0:
        raise FoldError("induced metric degenerates on the grid")

    # inward g-unit normal from the Euclidean conormal
    conormal = np.cross(y_t, y_l)
    ginv = np.linalg.inv(g)
    N = np.einsum("...ij,...j->...i", ginv, conormal)
    norm = np.sqrt(np.einsum("...ij,...i,...j->...", g, N, N))
    N = N / norm[..., None]
    inward = np.sum(N * (y - graph.tau / graph.r), axis=-1)
    if np.max(inward) > 0.0 and np.min(inward) < 0.0:
        raise FoldError("normal orientation is not uniform over the grid")
    if np.max(inward) > 0.0:
        N = -N
    Ncov = np.einsum("...ij,...j->...i", g, N)

    # second fundamental form: A_ab = <N, dd_ab y + Gamma(dy, dy)>
    def second_form(dd, da, db):
        corr = np.einsum("...kij,...i,...j->...k", gamma, da, db)
        return np.einsum("...k,...k->...", Ncov, dd + corr)

    A11 = second_form(y_tt, y_t, y_t)
    A12 = second_form(y_tl, y_t, y_l)
    A22 = second_form(y_ll, y_l, y_l)

    iu11 = g22 / det
    iu12 = -g12 / det
    iu22 = g11 / det
    H_g = iu11 * A11 + 2.0 * iu12 * A12 + iu22 * A22
    H_values = H_g / graph.r

    # shape operator eigenvalues (unrescaled surface)
    s11 = iu11 * A11 + iu12 * A12
    s12 = iu11 * A12 + iu12 * A22
    s21 = iu12 * A11 + iu22 * A12
    s22 = iu12 * A12 + iu22 * A22
    tr = s11 + s22
    disc = np.maximum((s11 - s22) ** 2 + 4.0 * s12 * s21, 0.0)
    root = np.sqrt(disc)
    sup_A = float(np.max(np.maximum(np.abs(tr + root), np.abs(tr - root))) / 2.0)

    # area and diameters
    plan = graph.plan
    st = np.sin(plan.theta)[:, None]
    area = plan.integrate(np.sqrt(det) / st)
    diam, pi, pj = _diameter(y)
    diam_g = chord_g_length(spec, pi, pj)

    H = SpectralField.from_values(plan, H_values)
    return CurvatureReport(H=H, sup_A=sup_A, diam=diam,
                           diam_g_factor=diam_g / diam, area=area)


def schwarzschild_sphere_curvature(spec, r):
    """Closed-form rescaled mean curvature of the centered coordinate
    sphere of chart radius 1/r in the conformally flat profile:

        F(r) = n (1 + sigma r^(n-1))^(-1/2)
                 * (1 - (n-1) sigma r^(n-1) / (2 (1 + sigma r^(n-1)))) .
    """
    n, sigma = spec.n, spec.sigma
    psi = 1.0 + sigma * r ** (n - 1)
    if psi <= 0.0:
        raise DomainError("conformal factor vanishes at this radius")
    return n / np.sqrt(psi) * (1.0 - (n - 1) * sigma * r ** (n - 1) / (2.0 * psi))


def expansion_H0(spec, r, tau, nodes, linearized=False):
    """Truncated expansion of H(r, tau, 0) at unit vectors ``nodes``.

    The default keeps the full |x + tau| dependence (quadratic-in-tau
    accurate); ``linearized=True`` drops tau^2 terms as well, keeping
    only the kernel-generating linear term.  Remainders of relative
    size O(r^n) are dropped in both forms.
    """
    n, sigma = spec.n, spec.sigma
    nodes = np.asarray(nodes, dtype=float)
    tau = np.asarray(tau, dtype=float)
    rpow = r ** (n - 1)
    dot = nodes @ tau
    if linearized:
        return (n - 0.5 * sigma * n * n * rpow
                + 0.5 * sigma * n * (n - 1) * (n + 1) * rpow * dot)
    dist = np.linalg.norm(nodes + tau, axis=-1)
    return (n
            - 0.5 * n * sigma * rpow * dist ** (1 - n)
            - 0.5 * n * (n - 1) * sigma * rpow * dist ** (-n - 1)
            - 0.5 * n * (n - 1) * sigma * rpow * dot * dist ** (-n - 1))
