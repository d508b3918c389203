"""Two-tier solver for the constant mean curvature leaf equation.

At scale r the leaf equation fixes the rescaled mean curvature to the
constant n - sigma n^2/2 r^(n-1).  The unknown splits into a center
offset tau (kernel direction, solved by damped Newton on the projected
equation) and a kernel-free graph unknown phi (complement direction,
solved by Newton steps with the flat-limit operator L as Jacobian).
phi is the rescaled unknown: the geometric graph function of the leaf
is r^(n-1) * phi, and residuals are measured on the equation divided by
r^(n-1), where the problem stays uniformly conditioned as r -> 0.

The alternation converges linearly with an O(r) rate; the degree-0 mode
is the slowest, so its diagonal Jacobian entry is probed by a cheap
finite difference each sweep instead of using the flat value n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import mean_curvature, CurvatureReport
from .errors import AdmissibilityError, DegenerateMassError, DivergenceError
from .graphs import SphereGraph
from .jacobi import project_kernel, solve_complement, kernel_vector
from .sphere import SpectralField, get_plan

R_MAX_SOLVER = 0.15
CENTER_TOL = 1e-10
GRAPH_TOL = 1e-10
MAX_CENTER_ITER = 50
MAX_OUTER_ITER = 60
FD_STEP_TAU = 1e-6
FD_STEP_PHI = 1e-5


@dataclass(frozen=True)
class LeafRecord:
    """A converged leaf.

    phi is the rescaled graph unknown (geometric graph = r^(n-1) phi)
    with exactly zero degree-1 coefficients; residual_sup is the sup of
    the rescaled equation residual, i.e. the unrescaled mean-curvature
    defect is residual_sup * r^(n-1).
    """

    r: float
    tau: np.ndarray
    phi: SpectralField
    target_H: float
    residual_sup: float
    iterations: int
    curvature: CurvatureReport

    @property
    def phi_const(self):
        return float(self.phi.coeffs[0]) / np.sqrt(4.0 * np.pi)

    @property
    def phi_sup(self):
        return self.phi.sup()

    @property
    def tau_norm(self):
        return float(np.linalg.norm(self.tau))

    def coefficient_distance(self, other):
        """Solver-space distance |dtau| + ||dphi|| used for basin tests."""
        return (float(np.linalg.norm(self.tau - other.tau))
                + float(np.linalg.norm(self.phi.coeffs - other.phi.coeffs)))


def target_mean_curvature(spec, r):
    """The prescribed rescaled constant: n - sigma n^2/2 r^(n-1)."""
    return spec.n - 0.5 * spec.sigma * spec.n ** 2 * r ** (spec.n - 1)


def scaled_graph(spec, r, tau, phi):
    """The geometric leaf of the rescaled unknown phi."""
    return SphereGraph(r=r, tau=np.asarray(tau, dtype=float),
                       phi=(r ** (spec.n - 1)) * phi)


def residual_field(spec, r, tau, phi):
    """Rescaled residual field and the curvature report it came from."""
    report = mean_curvature(spec, scaled_graph(spec, r, tau, phi))
    scale = r ** (1 - spec.n)
    resid = scale * report.H.shift(-target_mean_curvature(spec, r))
    return resid, report


def center_residual(spec, r, tau, phi):
    """Kernel projection of the rescaled leaf equation at (tau, phi).

    Leading term (Eq. of the center): n(n-1)(n+1)/2 sigma omega_{n+1}
    tau, i.e. 4 pi sigma tau for n = 2.
    """
    resid, _ = residual_field(spec, r, tau, phi)
    return kernel_vector(resid)


def solve_center(spec, r, phi, tau0=None, tol=None, r_max=R_MAX_SOLVER):
    """Damped Newton on the projected center equation Q(tau) = 0.

    Requires nonzero mass (the equation loses its leading term at
    sigma = 0) and r <= r_max.  The Jacobian is a finite-difference
    (n+1)x(n+1) matrix, nearly 4 pi sigma times the identity.
    """
    if spec.sigma == 0.0:
        raise DegenerateMassError("center equation requires nonzero mass")
    if r > r_max:
        raise DivergenceError(f"r={r} above solver range {r_max}")
    tau = np.zeros(3) if tau0 is None else np.asarray(tau0, dtype=float).copy()
    if np.linalg.norm(tau) > 0.5:
        raise AdmissibilityError("initial center offset too large")
    tol = tol if tol is not None else CENTER_TOL * max(1.0, abs(spec.sigma))
    q = center_residual(spec, r, tau, phi)
    jac = None
    fresh = False
    for _ in range(MAX_CENTER_ITER):
        qn = np.linalg.norm(q)
        if qn <= tol:
            return tau
        if jac is None:
            # the Jacobian is nearly 4 pi sigma I and drifts slowly, so
            # it is frozen until a step fails to reduce the residual
            jac = np.empty((3, 3))
            for k in range(3):
                dt = np.zeros(3)
                dt[k] = FD_STEP_TAU
                jac[:, k] = (center_residual(spec, r, tau + dt, phi) - q) / FD_STEP_TAU
            fresh = True
        step = np.linalg.solve(jac, -q)
        reduced = False
        for _ in range(10):
            trial = tau + step
            try:
                q_trial = center_residual(spec, r, trial, phi)
            except AdmissibilityError:
                step *= 0.5
                continue
            if np.linalg.norm(q_trial) < qn:
                tau, q = trial, q_trial
                reduced = True
                break
            step *= 0.5
        if reduced:
            fresh = False
            continue
        if fresh:
            raise DivergenceError("center Newton cannot reduce the residual")
        jac = None
    raise DivergenceError("center equation did not converge")


def _probe_deg0_jacobian(spec, r, tau, phi, resid):
    """Diagonal Jacobian entry of the degree-0 mode by finite difference."""
    shifted, _ = residual_field(spec, r, tau, phi.shift(FD_STEP_PHI))
    base = resid.coeffs[0]
    return (shifted.coeffs[0] - base) / (FD_STEP_PHI * np.sqrt(4.0 * np.pi))


def solve_leaf(spec, r, warm=None, tol=GRAPH_TOL, r_max=R_MAX_SOLVER,
               max_iter=MAX_OUTER_ITER):
    """Solve the leaf equation at scale r.

    warm is an optional (tau, phi) pair used as the starting point
    (phi rescaled, kernel-free).  Alternates the center solve and one
    graph Newton step with the flat Jacobian until the rescaled
    residual sup drops below tol.
    """
    if spec.sigma == 0.0:
        raise DegenerateMassError("leaf equation requires nonzero mass")
    if r > r_max:
        raise DivergenceError(f"r={r} above solver range {r_max}")
    if warm is not None:
        tau = np.asarray(warm[0], dtype=float).copy()
        # the leaf representation carries the kernel in tau only; any
        # degree-1 content of the warm start is dropped here and found
        # again through the center equation
        phi = project_kernel(warm[1]).remainder
    else:
        tau = np.zeros(3)
        phi = SpectralField.constant(get_plan(16), 0.0)
    plan = phi.plan

    for outer in range(1, max_iter + 1):
        tau = solve_center(spec, r, phi, tau0=tau, r_max=r_max)
        resid, report = residual_field(spec, r, tau, phi)
        sup = resid.sup()
        if sup <= tol:
            kp = project_kernel(phi)  # enforce exact zeros (already zero)
            return LeafRecord(r=r, tau=tau, phi=kp.remainder,
                              target_H=target_mean_curvature(spec, r),
                              residual_sup=sup, iterations=outer,
                              curvature=report)
        kp = project_kernel(resid)
        step = solve_complement(kp.remainder)
        j0 = _probe_deg0_jacobian(spec, r, tau, phi, resid)
        coeffs = step.coeffs.copy()
        if abs(j0) > 1e-6:
            coeffs[0] = resid.coeffs[0] / j0
        update = SpectralField.from_coeffs(plan, coeffs)
        for _ in range(10):
            try:
                scaled_graph(spec, r, tau, phi - update)
                break
            except AdmissibilityError:
                update = 0.5 * update
        else:
            raise DivergenceError("graph update leaves the admissible set")
        phi = phi - update
    raise DivergenceError(
        f"leaf equation did not converge in {max_iter} iterations at r={r}"
    )


def solve_leaf_on_plan(spec, r, plan, **kwargs):
    """solve_leaf starting from rest on a caller-chosen resolution."""
    phi0 = SpectralField.constant(plan, 0.0)
    return solve_leaf(spec, r, warm=(np.zeros(3), phi0), **kwargs)
