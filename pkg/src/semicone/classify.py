"""Classification of eigenvalue intersections.

A zero of f is *conical* when the Jacobian determinant chi(f) = det(grad f1,
grad f2) is nonzero there (linear gap growth in every direction), and
*semi-conical* when the gradients are collinear but not both zero and chi(f)
has nonzero derivative along the distinguished direction

    eta = (-d2 f_j, d1 f_j),   j = component with the larger gradient,

in which case the gap grows quadratically along eta and linearly
transversally.  The parametrized (arity-3) versions additionally require
d3 f != 0 (F-conical) or f submersive (F-semi-conical).

All decisions are made against explicit, scale-aware tolerances; anything
the generic taxonomy excludes is reported as Degenerate, never silently
reclassified.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .field import ControlField, FieldError


class Verdict(enum.Enum):
    NOT_INTERSECTION = "NotIntersection"
    CONICAL = "Conical"
    SEMI_CONICAL = "SemiConical"
    F_CONICAL = "FConical"
    F_SEMI_CONICAL = "FSemiConical"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    eta: np.ndarray | None  # unit non-conical direction, iff (F)SemiConical
    diagnostics: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        has_eta = self.eta is not None
        wants_eta = self.verdict in (Verdict.SEMI_CONICAL, Verdict.F_SEMI_CONICAL)
        if has_eta != wants_eta:
            raise ValueError("eta present iff verdict is (F)SemiConical")
        if has_eta:
            assert abs(np.linalg.norm(self.eta) - 1.0) < 1e-12

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict.value,
             "eta": None if self.eta is None else [float(c) for c in self.eta]}
        d.update({k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                  for k, v in self.diagnostics.items()})
        return d


def _canonical_direction(v: np.ndarray) -> np.ndarray:
    """Unit vector with its first nonzero component positive."""
    v = v / np.linalg.norm(v)
    for c in v:
        if abs(c) > 1e-14:
            return v if c > 0 else -v
    return v


def _slice_data(field: ControlField, x, tol: Tolerances):
    """Shared 2x2 slice analysis.  Returns None when x is not a zero of f."""
    f = field.evaluate(x)
    fnorm = float(np.linalg.norm(f))
    if fnorm > tol.zero * (1.0 + float(np.linalg.norm(x))):
        return None
    jac = field.jacobian(x)
    j2 = jac[:, :2]
    scale = max(np.max(np.abs(jac)), 0.0)
    if scale == 0.0:
        scale = 1.0
    sv = np.linalg.svd(j2, compute_uv=False)
    chi = float(field.chi(x, (1, 2)))
    diag = {
        "f_norm": fnorm,
        "chi": chi,
        "scale": float(scale),
        "collinearity_residual": float(sv[1] / sv[0]) if sv[0] > 0 else 0.0,
    }
    return f, jac, j2, scale, sv, chi, diag


def classify_point(field: ControlField, x, tol: Tolerances = DEFAULT_TOL) -> Classification:
    """Classify a candidate intersection of an arity-2 field."""
    if field.arity != 2:
        raise FieldError("classify_point expects an arity-2 field; "
                         "use classify_family_point for families")
    return _classify_slice(field, x, tol, family=None)


def _classify_slice(field2: ControlField, x2, tol: Tolerances,
                    family: tuple[ControlField, np.ndarray] | None) -> Classification:
    """Classify the 2d slice; if `family` is given, lift the verdict to the
    F-conical / F-semi-conical taxonomy using the full arity-3 Jacobian."""
    data = _slice_data(field2, x2, tol)
    if data is None:
        return Classification(Verdict.NOT_INTERSECTION, None,
                              {"f_norm": float(np.linalg.norm(field2.evaluate(x2)))})
    f, jac, j2, scale, sv, chi, diag = data

    if family is not None:
        field3, x3 = family
        jac3 = field3.jacobian(x3)
        scale3 = max(np.max(np.abs(jac3)), 1e-300)
        d3f = jac3[:, 2]
        sv3 = np.linalg.svd(jac3, compute_uv=False)
        diag["d3f_norm"] = float(np.linalg.norm(d3f))
        diag["submersion_sv"] = float(sv3[-1])

    # conical: |chi| above the scale-aware rank threshold
    if abs(chi) > tol.rank * scale:
        if family is None:
            return Classification(Verdict.CONICAL, None, diag)
        if np.linalg.norm(d3f) > tol.rank * scale3:
            return Classification(Verdict.F_CONICAL, None, diag)
        return Classification(Verdict.DEGENERATE, None, diag)

    # gradients collinear (relative smallest singular value) and not both zero
    collinear = sv[0] > 0 and sv[1] <= tol.rank * sv[0]
    nonzero = sv[0] > tol.rank * scale
    if collinear and nonzero:
        g1, g2 = j2[0], j2[1]
        j = 0 if np.linalg.norm(g1) >= np.linalg.norm(g2) else 1
        g = j2[j]
        eta = np.array([-g[1], g[0]])
        eta = _canonical_direction(eta)
        d_eta_chi = float(field2.chi_gradient(x2, (1, 2)) @ eta)
        diag["d_eta_chi"] = d_eta_chi
        diag["eta_component"] = j + 1
        if abs(d_eta_chi) > tol.rank * scale:
            if family is None:
                return Classification(Verdict.SEMI_CONICAL, eta, diag)
            if sv3[-1] > tol.rank * scale3:
                return Classification(Verdict.F_SEMI_CONICAL, eta, diag)
            return Classification(Verdict.DEGENERATE, None, diag)
    return Classification(Verdict.DEGENERATE, None, diag)


def classify_family_point(field: ControlField, x,
                          tol: Tolerances = DEFAULT_TOL) -> Classification:
    """Classify a candidate intersection of an arity-3 family at x = (u,v,z)."""
    if field.arity != 3:
        raise FieldError("classify_family_point expects an arity-3 field")
    x = np.asarray(x, dtype=float)
    slice2 = field.frozen_z(x[2])
    return _classify_slice(slice2, x[:2], tol, family=(field, x))


# ---------------------------------------------------------------------------
# empirical gap-growth law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapGrowthFit:
    slope: float
    const_lo: float   # min of Gap(t) / t^slope over the probed radii
    const_hi: float   # max of the same ratio
    degenerate: bool = False
    radii: np.ndarray | None = None
    gaps: np.ndarray | None = None


def gap_growth_probe(field: ControlField, x, direction, radii,
                     tol: Tolerances = DEFAULT_TOL) -> GapGrowthFit:
    """Fit Gap((x) + t*direction) ~ C t^p along a ray by log-log least squares.

    Radii must span at least two decades.  A ray along which the gap stays
    below the zero tolerance is reported as degenerate rather than fitted.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii[0] <= 0:
        raise ValueError("radii must be positive")
    if radii[-1] / radii[0] < 99.0:
        raise ValueError("radii must span at least two decades")
    pts = x[None, :] + radii[:, None] * d[None, :]
    fv = field.evaluate_batch(pts)
    gaps = 2.0 * np.hypot(fv[:, 0], fv[:, 1])
    if np.all(gaps < tol.zero):
        return GapGrowthFit(float("nan"), float("nan"), float("nan"),
                            degenerate=True, radii=radii, gaps=gaps)
    lt, lg = np.log(radii), np.log(np.maximum(gaps, 1e-300))
    slope, intercept = np.polyfit(lt, lg, 1)
    ratio = gaps / radii ** slope
    return GapGrowthFit(float(slope), float(ratio.min()), float(ratio.max()),
                        radii=radii, gaps=gaps)
