"""Admissible transformations and the reduction steps toward normal form.

Three commuting families of transformations preserve the intersection
taxonomy:

  * left-equivalence: conjugation of H_f by a fixed planar rotation/reflexion
    P(theta, zeta), acting on components as
        f1 -> cos(2 theta) f1 - zeta sin(2 theta) f2,
        f2 -> sin(2 theta) f1 + zeta cos(2 theta) f2;
  * right-equivalence: precomposition with a diffeomorphism of the control
    plane (decoupled from the parameter z).  Only linear right-equivalences
    (rotations on (u, v), rescaling of z) are generated here -- they keep
    polynomial fields polynomial and are all the algorithm needs;
  * time-equivalence: multiplication of f by a nonvanishing scalar function,
    here a constant xi.

The reduction itself: STEP 1 rotates the components so both gradients at the
base point coincide; STEP 2 rotates the control plane so the non-conical
direction is span(e2).  The further factorization into the model form is not
carried out symbolically; instead its observable consequences are checked --
conditions (SC) / (SCP) and the numeric invariants beta = d3 f1 / d3 f2 and
m0 = -d1 f1 / d1 f2.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .field import ControlField, FieldError, Polynomial


class TransformError(ValueError):
    pass


def left_transform(field: ControlField, theta: float, zeta: int = 1) -> ControlField:
    """Apply the left-equivalence associated with (theta, zeta)."""
    if zeta not in (1, -1):
        raise TransformError("zeta must be +-1")
    f1, f2 = field.components
    c, s = np.cos(2.0 * theta), np.sin(2.0 * theta)
    g1 = f1.scale(c) + f2.scale(-zeta * s)
    g2 = f1.scale(s) + f2.scale(zeta * c)
    return ControlField(g1, g2)


def right_transform(field: ControlField, rotation: np.ndarray,
                    z_scale: float = 1.0) -> ControlField:
    """Precompose with (u, v) -> R (u, v) (and z -> z_scale * z for families)."""
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (2, 2):
        raise TransformError("rotation must be 2x2")
    if np.max(np.abs(rotation.T @ rotation - np.eye(2))) > 1e-12:
        raise TransformError("right-equivalence matrix must be orthogonal")
    if z_scale == 0.0:
        raise TransformError("z_scale must be nonzero")
    if field.arity == 2:
        m = rotation
    else:
        m = np.eye(3)
        m[:2, :2] = rotation
        m[2, 2] = z_scale
    f1, f2 = field.components
    return ControlField(f1.compose_linear(m), f2.compose_linear(m))


def time_transform(field: ControlField, xi: float) -> ControlField:
    """Multiply both components by the nonzero constant xi."""
    if xi == 0.0:
        raise TransformError("xi must be nonzero")
    f1, f2 = field.components
    return ControlField(f1.scale(xi), f2.scale(xi))


@dataclass(frozen=True)
class EquivalenceTransform:
    """Composite admissible transformation: right, then left, then time."""

    theta: float = 0.0
    zeta: int = 1
    rotation: np.ndarray = dc_field(default_factory=lambda: np.eye(2))
    z_scale: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if np.max(np.abs(r.T @ r - np.eye(2))) > 1e-12:
            raise TransformError("rotation must be orthogonal to 1e-12")

    def apply(self, field: ControlField) -> ControlField:
        out = right_transform(field, self.rotation, self.z_scale)
        out = left_transform(out, self.theta, self.zeta)
        return time_transform(out, self.xi)

    def inverse(self) -> "EquivalenceTransform":
        if self.zeta == 1:
            th = -self.theta
        else:
            # reflection part is involutive together with the same theta
            th = self.theta
        return EquivalenceTransform(
            theta=th, zeta=self.zeta,
            rotation=np.asarray(self.rotation).T,
            z_scale=1.0 / self.z_scale,
            xi=1.0 / self.xi,
        )

    def map_point(self, x: np.ndarray) -> np.ndarray:
        """Point of the transformed field corresponding to x of the original:
        (f o phi) evaluated at phi^{-1}(x) equals f at x."""
        x = np.asarray(x, dtype=float)
        y = x.copy()
        y[:2] = np.asarray(self.rotation).T @ x[:2]
        if x.shape[0] == 3:
            y[2] = x[2] / self.z_scale
        return y


def inverse_apply_check(field: ControlField, tr: EquivalenceTransform,
                        points: np.ndarray) -> float:
    """Max deviation of (tr^{-1} o tr)(field) from field over sample points.

    Left-, right- and time-equivalences commute (they act on the codomain,
    the domain, and by a scalar), so the inverse composite applies its parts
    in the same structural order.
    """
    fwd = tr.apply(field)
    back = tr.inverse().apply(fwd)
    pts = np.asarray(points, dtype=float)
    return float(np.max(np.abs(back.evaluate_batch(pts) - field.evaluate_batch(pts))))


# ---------------------------------------------------------------------------
# STEP 1: equalize the gradients by a left-equivalence
# ---------------------------------------------------------------------------

def left_equalize_gradients(field: ControlField, x,
                            tol: Tolerances = DEFAULT_TOL
                            ) -> tuple[float, ControlField]:
    """Rotation angle theta (zeta = 1) with grad f1 = grad f2 != 0 at x.

    Requires collinear gradients, not both zero, at x (the semi-conical
    situation).  Writing grad f1 = a g, grad f2 = b g for a unit vector g
    along the larger gradient, the condition reads
        cos(2 theta) (a - b) = sin(2 theta) (a + b),
    solved by 2 theta = atan2(a - b, a + b); the common transformed gradient
    has length (a^2 + b^2) / hypot(a - b, a + b) > 0 automatically.
    """
    x = np.asarray(x, dtype=float)
    jac = field.jacobian(x)
    g1, g2 = jac[0, :2], jac[1, :2]
    scale = max(np.max(np.abs(jac)), 1e-300)
    sv = np.linalg.svd(jac[:, :2], compute_uv=False)
    if sv[0] <= tol.rank * scale or sv[1] > tol.rank * sv[0]:
        raise TransformError("gradients not collinear-nonzero at x; "
                             "point is not semi-conical")
    g = g1 if np.linalg.norm(g1) >= np.linalg.norm(g2) else g2
    g = g / np.linalg.norm(g)
    a, b = float(g1 @ g), float(g2 @ g)
    two_theta = np.arctan2(a - b, a + b)
    theta = 0.5 * two_theta
    if theta < 0.0:
        theta += np.pi  # smallest representative in [0, pi)
    out = left_transform(field, theta, 1)
    njac = out.jacobian(x)
    resid = float(np.linalg.norm(njac[0, :2] - njac[1, :2]))
    if resid > 1e-10 * max(1.0, scale) or np.linalg.norm(njac[0, :2]) <= tol.rank * scale:
        raise TransformError(f"STEP 1 postcondition failed (residual {resid:.2e})")
    return theta, out


# ---------------------------------------------------------------------------
# STEP 2: align the non-conical direction with span(e2)
# ---------------------------------------------------------------------------

def align_nonconical(field: ControlField, x,
                     tol: Tolerances = DEFAULT_TOL
                     ) -> tuple[np.ndarray, ControlField]:
    """Planar rotation making d2 f(x) = 0 with d1 f1, d1 f2 nonzero.

    Expects STEP-1 output (equal nonzero gradients at x).  With
    beta1 = atan2(d1 f1, d2 f1) the substitution matrix is
    [[-sin b, cos b], [-cos b, -sin b]], after which Df(x) = [[-r1, 0],
    [-r2, 0]].
    """
    x = np.asarray(x, dtype=float)
    jac = field.jacobian(x)
    g1, g2 = jac[0, :2], jac[1, :2]
    scale = max(np.max(np.abs(jac)), 1e-300)
    if np.linalg.norm(g1 - g2) > 1e-8 * max(1.0, scale) or \
            np.linalg.norm(g1) <= tol.rank * scale:
        raise TransformError("STEP 2 requires equal nonzero gradients (run STEP 1)")
    beta1 = np.arctan2(jac[0, 0], jac[0, 1])
    sb, cb = np.sin(beta1), np.cos(beta1)
    rot = np.array([[-sb, cb], [-cb, -sb]])
    out = right_transform(field, rot)
    y = EquivalenceTransform(rotation=rot).map_point(x)
    njac = out.jacobian(y)
    if np.max(np.abs(njac[:, 1])) > 1e-10 * max(1.0, scale):
        raise TransformError("STEP 2 postcondition failed: d2 f != 0 after rotation")
    if min(abs(njac[0, 0]), abs(njac[1, 0])) <= tol.rank * scale:
        raise TransformError("STEP 2 postcondition failed: d1 f vanished")
    return rot, out


# ---------------------------------------------------------------------------
# condition reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Clause:
    name: str
    value: float
    passed: bool


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    clauses: tuple[Clause, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "passed": self.passed,
            "clauses": [{"name": c.name, "value": c.value, "passed": c.passed}
                        for c in self.clauses],
        }


def check_SC(field: ControlField, x, tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """(SC): f(x)=0, d2 f(x)=0, d1 f1(x)=d1 f2(x)!=0, d2 chi(f)(x)!=0."""
    if field.arity != 2:
        raise FieldError("check_SC expects an arity-2 field")
    x = np.asarray(x, dtype=float)
    f = field.evaluate(x)
    jac = field.jacobian(x)
    scale = max(np.max(np.abs(jac)), 1.0)
    d2chi = float(field.chi_gradient(x, (1, 2))[1])
    clauses = (
        Clause("f_zero", float(np.linalg.norm(f)),
               float(np.linalg.norm(f)) <= tol.zero * (1 + np.linalg.norm(x))),
        Clause("d2f_zero", float(np.max(np.abs(jac[:, 1]))),
               float(np.max(np.abs(jac[:, 1]))) <= tol.rank * scale),
        Clause("d1f_equal", float(abs(jac[0, 0] - jac[1, 0])),
               abs(jac[0, 0] - jac[1, 0]) <= tol.rank * scale),
        Clause("d1f1_nonzero", float(jac[0, 0]), abs(jac[0, 0]) > tol.rank * scale),
        Clause("d2chi_nonzero", d2chi, abs(d2chi) > tol.rank * scale),
    )
    return ConditionReport("SC", clauses)


def check_SCP(field: ControlField, x, tol: Tolerances = DEFAULT_TOL) -> ConditionReport:
    """(SCP): f=0, d2 f=0, d1 f1, d1 f2 != 0, d3 f1 = d3 f2 != 0,
    chi_13(f) != 0, d2 chi(f) != 0, all at x."""
    if field.arity != 3:
        raise FieldError("check_SCP expects an arity-3 field")
    x = np.asarray(x, dtype=float)
    f = field.evaluate(x)
    jac = field.jacobian(x)
    scale = max(np.max(np.abs(jac)), 1.0)
    chi13 = float(field.chi(x, (1, 3)))
    d2chi = float(field.chi_gradient(x, (1, 2))[1])
    clauses = (
        Clause("f_zero", float(np.linalg.norm(f)),
               float(np.linalg.norm(f)) <= tol.zero * (1 + np.linalg.norm(x))),
        Clause("d2f_zero", float(np.max(np.abs(jac[:, 1]))),
               float(np.max(np.abs(jac[:, 1]))) <= tol.rank * scale),
        Clause("d1f1_nonzero", float(jac[0, 0]), abs(jac[0, 0]) > tol.rank * scale),
        Clause("d1f2_nonzero", float(jac[1, 0]), abs(jac[1, 0]) > tol.rank * scale),
        Clause("d3f_equal", float(abs(jac[0, 2] - jac[1, 2])),
               abs(jac[0, 2] - jac[1, 2]) <= tol.rank * scale),
        Clause("d3f1_nonzero", float(jac[0, 2]), abs(jac[0, 2]) > tol.rank * scale),
        Clause("chi13_nonzero", chi13, abs(chi13) > tol.rank * scale),
        Clause("d2chi_nonzero", d2chi, abs(d2chi) > tol.rank * scale),
    )
    return ConditionReport("SCP", clauses)


# ---------------------------------------------------------------------------
# numeric equivalence invariants
# ---------------------------------------------------------------------------

def invariant_beta(field: ControlField, x, tol: Tolerances = DEFAULT_TOL) -> float:
    """beta(f) = d3 f1 / d3 f2 at x (right-equivalence invariant)."""
    if field.arity != 3:
        raise FieldError("invariant_beta expects an arity-3 field")
    jac = field.jacobian(np.asarray(x, dtype=float))
    scale = max(np.max(np.abs(jac)), 1.0)
    if abs(jac[1, 2]) <= tol.rank * scale:
        raise TransformError("beta undefined: d3 f2 vanishes at x")
    return float(jac[0, 2] / jac[1, 2])


def invariant_m0(field: ControlField, x, tol: Tolerances = DEFAULT_TOL) -> float:
    """m(0) = -d1 f1 / d1 f2 at x (invariant of the aligned family form)."""
    if field.arity != 3:
        raise FieldError("invariant_m0 expects an arity-3 field")
    jac = field.jacobian(np.asarray(x, dtype=float))
    scale = max(np.max(np.abs(jac)), 1.0)
    if abs(jac[1, 0]) <= tol.rank * scale:
        raise TransformError("m0 undefined: d1 f2 vanishes at x")
    return float(-jac[0, 0] / jac[1, 0])


def second_order_jet(field: ControlField, x) -> dict:
    """Partial derivatives up to order 2 at x, for report emission."""
    x = np.asarray(x, dtype=float)
    jet = {"f": [float(v) for v in field.evaluate(x)]}
    n = field.arity
    for i in range(n):
        mi = [0] * n
        mi[i] = 1
        jet[f"d{i + 1}f"] = [float(v) for v in field.partial(x, mi)]
    for i in range(n):
        for j in range(i, n):
            mi = [0] * n
            mi[i] += 1
            mi[j] += 1
            jet[f"d{i + 1}{j + 1}f"] = [float(v) for v in field.partial(x, mi)]
    return jet
