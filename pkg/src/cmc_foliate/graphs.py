"""Graph surfaces over the unit sphere and their chart embeddings.

A candidate leaf is the normal graph of a function phi over the unit
sphere (inward normal convention nu(x) = -x), translated by tau and
blown up by 1/r:

    y(x) = (tau + (1 - phi(x)) * x) / r .

Because phi is band-limited, the Cartesian components of y are too, so
all grid derivatives of the embedding are computed spectrally and are
exact to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, GraphFoldError
from .sphere import SpectralField

# embeddedness bound for the graph function, strictly below 1/4
EPS_EMBED = 0.249


@dataclass(frozen=True)
class SphereGraph:
    """One candidate leaf: scale r, center offset tau, graph function phi.

    phi is the geometric (unscaled) graph function; admissibility
    requires |tau| + r + sup|phi| <= 1 and sup|phi| below the embedding
    bound.
    """

    r: float
    tau: np.ndarray
    phi: SpectralField

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if tau.shape != (3,):
            raise AdmissibilityError("tau must be a 3-vector")
        object.__setattr__(self, "tau", tau)
        tau.flags.writeable = False
        if not 0.0 < self.r < 0.25:
            raise AdmissibilityError(f"scale r={self.r} outside (0, 1/4)")
        sup = self.phi.sup()
        if sup > EPS_EMBED:
            raise AdmissibilityError(f"sup|phi|={sup:.4g} exceeds embedding bound")
        if np.linalg.norm(tau) + self.r + sup > 1.0:
            raise AdmissibilityError("|tau| + r + sup|phi| exceeds 1")

    @property
    def plan(self):
        return self.phi.plan


def embed(graph, node):
    """Chart position of the graph surface over one or more unit vectors."""
    node = np.asarray(node, dtype=float)
    theta = np.arccos(np.clip(node[..., 2], -1.0, 1.0))
    lam = np.arctan2(node[..., 1], node[..., 0])
    phi_val = graph.plan.eval_at(graph.phi.coeffs, theta, lam)
    return (graph.tau + (1.0 - phi_val)[..., None] * node) / graph.r


def embed_grid(graph):
    """Surface positions over all quadrature nodes, shape (nlat, nlon, 3)."""
    x = graph.plan.unit_vectors()
    return (graph.tau + (1.0 - graph.phi.values)[..., None] * x) / graph.r


def surface_jets(graph, second=False):
    """Embedding and its exact grid derivatives.

    Returns (y, y_t, y_l) or (y, y_t, y_l, y_tt, y_tl, y_ll) with arrays
    of shape (nlat, nlon, 3); t denotes theta, l longitude.  The
    components of (1 - phi) * x are band-limited one degree above phi,
    so the plan's extended tables differentiate them exactly.
    """
    plan = graph.plan
    x = plan.unit_vectors()
    w = (1.0 - graph.phi.values)[..., None] * x
    lw = min(graph.phi.lmax + 1, plan.ltab)
    jets = [np.empty_like(w) for _ in range(6 if second else 3)]
    for k in range(3):
        coeffs = plan.analyze(w[..., k], lmax=lw)
        ders = plan.synthesize_derivatives(coeffs)
        for j, arr in enumerate(jets):
            arr[..., k] = ders[j]
    scale = 1.0 / graph.r
    out = [jets[0] * scale + graph.tau * scale] + [a * scale for a in jets[1:]]
    return tuple(out)


def _tangent_frames(x):
    """Orthonormal tangent bases at unit vectors x, robust at all latitudes."""
    x = np.asarray(x, dtype=float)
    pick = np.argmin(np.abs(x), axis=-1)
    e = np.zeros_like(x)
    np.put_along_axis(e, pick[..., None], 1.0, axis=-1)
    t1 = np.cross(e, x)
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.cross(x, t1)
    return t1, t2


def _direction_jacobian_ok(graph, y, y_t, y_l):
    """True when the direction map v = y/|y| is orientation-preserving."""
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    v = y / norm
    proj = lambda d: (d - np.sum(d * v, axis=-1, keepdims=True) * v) / norm
    jac = np.sum(v * np.cross(proj(y_t), proj(y_l)), axis=-1)
    st = np.sin(graph.plan.theta)[:, None]
    rel = jac / st
    return bool(np.all(rel > 0.05 * np.median(rel)) and np.all(rel > 0.0))


def radial_graph(graph, tol=1e-12, max_iter=50):
    """Resample the leaf as a Euclidean radial graph over the unit sphere.

    Returns the field phi_tilde with leaf = {phi_tilde(u) * u}: the
    direction map v(x) = y(x)/|y(x)| is inverted at every quadrature
    node by Newton iteration on the sphere.
    """
    plan = graph.plan
    y, y_t, y_l = surface_jets(graph)
    if not _direction_jacobian_ok(graph, y, y_t, y_l):
        raise GraphFoldError("direction map of the graph degenerates on the grid")

    u = plan.unit_vectors().reshape(-1, 3)
    x = u.copy()
    coeffs = graph.phi.coeffs
    tau, r = graph.tau, graph.r
    active = np.ones(len(u), dtype=bool)
    radius = np.empty(len(u))
    for _ in range(max_iter):
        xa = x[active]
        theta = np.arccos(np.clip(xa[:, 2], -1.0, 1.0))
        lam = np.arctan2(xa[:, 1], xa[:, 0])
        f, ft, fl = plan.eval_at(coeffs, theta, lam, derivatives=True)
        ya = (tau + (1.0 - f)[:, None] * xa) / r
        na = np.linalg.norm(ya, axis=-1)
        va = ya / na[:, None]
        res = u[active] - va
        done = np.linalg.norm(res, axis=-1) <= tol
        if np.any(done):
            idx = np.nonzero(active)[0][done]
            radius[idx] = na[done]
            active[idx] = False
            if not np.any(active):
                break
            keep = ~done
            xa, ya, na, va, res = xa[keep], ya[keep], na[keep], va[keep], res[keep]
            f, ft, fl = f[keep], ft[keep], fl[keep]
            theta, lam = theta[keep], lam[keep]
        # tangent frame and surface gradient of phi at the iterates
        st = np.sin(theta)
        ct = np.cos(theta)
        cl, sl = np.cos(lam), np.sin(lam)
        that = np.stack([ct * cl, ct * sl, -st], axis=-1)
        lhat = np.stack([-sl, cl, np.zeros_like(sl)], axis=-1)
        dy1 = (-ft[:, None] * xa + (1.0 - f)[:, None] * that) / r
        dy2 = (-(fl / st)[:, None] * xa + (1.0 - f)[:, None] * lhat) / r
        proj = lambda d: (d - np.sum(d * va, axis=-1, keepdims=True) * va) / na[:, None]
        j1, j2 = proj(dy1), proj(dy2)
        # least-squares step in the (that, lhat) tangent coordinates
        a11 = np.sum(j1 * j1, axis=-1)
        a12 = np.sum(j1 * j2, axis=-1)
        a22 = np.sum(j2 * j2, axis=-1)
        b1 = np.sum(j1 * res, axis=-1)
        b2 = np.sum(j2 * res, axis=-1)
        det = a11 * a22 - a12 * a12
        if np.any(det <= 0):
            raise GraphFoldError("direction map not invertible at a grid node")
        s1 = (a22 * b1 - a12 * b2) / det
        s2 = (a11 * b2 - a12 * b1) / det
        xa = xa + s1[:, None] * that + s2[:, None] * lhat
        xa /= np.linalg.norm(xa, axis=-1, keepdims=True)
        x[active] = xa
    else:
        raise GraphFoldError("radial-graph inversion did not converge")
    return SpectralField.from_values(plan, radius.reshape(plan.grid_shape))


def round_sphere_graph(plan, r, center, radius):
    """The leaf (r, tau, phi) whose embedding is the round chart sphere
    of the given center and radius: tau = r*center, phi = 1 - r*radius."""
    tau = r * np.asarray(center, dtype=float)
    phi = SpectralField.constant(plan, 1.0 - r * radius)
    return SphereGraph(r=r, tau=tau, phi=phi)


def shifted_sphere_radial_profile(center, radius, nodes):
    """Closed-form radial graph of a round sphere: |f(u)u - c| = radius."""
    c = np.asarray(center, dtype=float)
    dot = nodes @ c
    disc = dot * dot + radius * radius - float(c @ c)
    return dot + np.sqrt(disc)
