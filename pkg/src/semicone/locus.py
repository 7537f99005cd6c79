"""Tracing the singular locus Z(f) = {f = 0} in (u, v, z) space.

For a generic family the locus is a smooth curve; where its tangent turns in
z (the folds) the intersection degenerates from F-conical to F-semi-conical,
so z-parametrized continuation would fail exactly at the interesting points.
The tracer therefore uses pseudo-arclength continuation: an Euler predictor
along ker Df followed by Newton corrections constrained orthogonal to the
tangent.

The planar projection of a traced curve is analyzed for self-intersections
(segment-pair predicates with a small epsilon fattening) and the absence of
cusps; at a fold, the projected tangent is compared against the non-conical
direction eta reported by the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import Classification, Verdict, classify_family_point
from .config import DEFAULT_TOL, Tolerances
from .field import ControlField, FieldError


class LocusError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# root polishing
# ---------------------------------------------------------------------------

def find_intersection(field, seed, tol: Tolerances = DEFAULT_TOL,
                      max_iter: int = 50) -> np.ndarray:
    """Gauss-Newton solve of f(x) = 0 from a seed.

    Works for arity 2 (square Newton) and arity 3 (least-norm step onto the
    curve).  Fails on non-convergence or rank collapse of the Jacobian.
    """
    x = np.asarray(seed, dtype=float).copy()
    for _ in range(max_iter):
        f = np.asarray(field.evaluate(x), dtype=float)
        if np.linalg.norm(f) <= 0.1 * tol.zero * (1.0 + np.linalg.norm(x)):
            return x
        jac = np.asarray(field.jacobian(x), dtype=float)
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[1] <= 1e-13 * max(sv[0], 1e-300):
            raise LocusError(f"Jacobian rank collapse near {x.tolist()}")
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        x = x + step
    f = np.asarray(field.evaluate(x), dtype=float)
    if np.linalg.norm(f) <= tol.zero * (1.0 + np.linalg.norm(x)):
        return x
    raise LocusError(f"no convergence from seed {np.asarray(seed).tolist()} "
                     f"(residual {np.linalg.norm(f):.2e})")


def _tangent(field, x) -> np.ndarray:
    """Unit kernel vector of the (2 x 3) Jacobian (via SVD)."""
    jac = np.asarray(field.jacobian(x), dtype=float)
    _, s, vt = np.linalg.svd(jac)
    if s[1] <= 1e-12 * max(s[0], 1e-300):
        raise LocusError(f"rank collapse at {np.asarray(x).tolist()}")
    return vt[-1]


def _correct(field, x, tangent, tol: Tolerances, max_iter: int = 12) -> np.ndarray:
    """Newton correction onto the curve, constrained orthogonal to `tangent`."""
    x = np.asarray(x, dtype=float).copy()
    for _ in range(max_iter):
        f = np.asarray(field.evaluate(x), dtype=float)
        if np.linalg.norm(f) <= tol.trace:
            return x
        jac = np.asarray(field.jacobian(x), dtype=float)
        a = np.vstack([jac, tangent[None, :]])
        rhs = np.array([-f[0], -f[1], 0.0])
        try:
            step = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError as exc:
            raise LocusError("singular corrector system") from exc
        x = x + step
    raise LocusError("corrector did not converge")


# ---------------------------------------------------------------------------
# curve container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TurningPoint:
    point: np.ndarray
    zdd: float              # second derivative of z along arclength
    segment_index: int      # fold lies between vertices k and k+1
    degenerate: bool        # |zdd| below the rank tolerance


@dataclass(frozen=True)
class LocusCurve:
    field: object
    vertices: np.ndarray          # (N, 3)
    tangents: np.ndarray          # (N, 3), unit, consistently oriented
    markers: tuple                # per-vertex Classification
    step: float
    rank_collapse: bool = False   # tracing stopped on rank loss

    def __len__(self) -> int:
        return len(self.vertices)

    def arclength(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)))


def _trace_one_direction(field, x0, t0, step, max_len, tol, domain_radius):
    pts = [x0]
    tans = [t0]
    length = 0.0
    x, t = x0, t0
    h = step
    collapsed = False
    while length < max_len:
        ok = False
        while h >= step / 64.0:
            try:
                xp = x + h * t
                xn = _correct(field, xp, t, tol)
                ok = True
                break
            except LocusError:
                h *= 0.5
        if not ok:
            collapsed = True
            break
        try:
            tn = _tangent(field, xn)
        except LocusError:
            collapsed = True
            break
        if tn @ t < 0:
            tn = -tn
        pts.append(xn)
        tans.append(tn)
        length += float(np.linalg.norm(xn - x))
        x, t = xn, tn
        if np.max(np.abs(x)) > domain_radius:
            break
        if h < step:
            h = min(step, 2.0 * h)
    return pts, tans, collapsed


def trace_locus(field, seed, step: float = 1e-3, max_len: float = 4.0,
                tol: Tolerances = DEFAULT_TOL, domain_radius: float = 10.0,
                classify: bool = True, bidirectional: bool = True) -> LocusCurve:
    """Predictor-corrector polyline through the seed, traced both ways.

    Every vertex satisfies ||f|| <= tol.trace; the step is halved (down to
    step/64) whenever the corrector struggles.  Orientation: the seed tangent
    has its first nonzero component positive, and consecutive tangents keep
    positive inner products.
    """
    if getattr(field, "arity", None) != 3:
        raise FieldError("trace_locus expects an arity-3 field")
    x0 = find_intersection(field, seed, tol)
    t0 = _tangent(field, x0)
    for c in t0:
        if abs(c) > 1e-12:
            if c < 0:
                t0 = -t0
            break

    fwd_pts, fwd_tans, fwd_collapsed = _trace_one_direction(
        field, x0, t0, step, max_len / 2.0 if bidirectional else max_len,
        tol, domain_radius)
    if bidirectional:
        bwd_pts, bwd_tans, bwd_collapsed = _trace_one_direction(
            field, x0, -t0, step, max_len / 2.0, tol, domain_radius)
        # reverse the backward half; flip its tangents to the traversal sense
        pts = bwd_pts[::-1][:-1] + fwd_pts
        tans = [-t for t in bwd_tans[::-1][:-1]] + fwd_tans
        collapsed = fwd_collapsed or bwd_collapsed
    else:
        pts, tans, collapsed = fwd_pts, fwd_tans, fwd_collapsed

    vertices = np.asarray(pts)
    tangents = np.asarray(tans)
    markers = tuple(classify_family_point(field, p, tol) for p in vertices) \
        if (classify and isinstance(field, ControlField)) else tuple()
    return LocusCurve(field=field, vertices=vertices, tangents=tangents,
                      markers=markers, step=step, rank_collapse=collapsed)


# ---------------------------------------------------------------------------
# turning points (folds in z)
# ---------------------------------------------------------------------------

def _point_between(field, a, b, s, tol):
    """Corrected curve point at fraction s of the chord a -> b."""
    chord = b - a
    guess = a + s * chord
    direction = chord / np.linalg.norm(chord)
    return _correct(field, guess, direction, tol)


def turning_points(curve: LocusCurve, tol: Tolerances = DEFAULT_TOL
                   ) -> list[TurningPoint]:
    """Refine every sign change of the tangent z-component by bisection.

    At the returned points |dz/ds| <= tol.turn; the second difference of z
    along arclength is reported and must be nonzero for a generic fold (the
    F-semi-conical signature), otherwise the point is flagged degenerate.
    """
    field = curve.field
    tz = curve.tangents[:, 2]
    out: list[TurningPoint] = []
    for k in range(len(tz) - 1):
        if tz[k] == 0.0:
            continue
        if tz[k] * tz[k + 1] < 0.0:
            a, b = curve.vertices[k], curve.vertices[k + 1]
            chord = b - a
            chord_dir = chord / np.linalg.norm(chord)
            lo, hi = 0.0, 1.0
            s_lo = tz[k]
            x_mid = None
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                x_mid = _point_between(field, a, b, mid, tol)
                t_mid = _tangent(field, x_mid)
                if t_mid @ chord_dir < 0:
                    t_mid = -t_mid
                if abs(t_mid[2]) <= tol.turn:
                    break
                if t_mid[2] * s_lo < 0:
                    hi = mid
                else:
                    lo = mid
            # second difference of z along arclength
            delta = max(np.linalg.norm(chord) / 4.0, 1e-5)
            t_here = _tangent(field, x_mid)
            xp = _correct(field, x_mid + delta * t_here, t_here, tol)
            xm = _correct(field, x_mid - delta * t_here, t_here, tol)
            zdd = float((xp[2] - 2.0 * x_mid[2] + xm[2]) / delta ** 2)
            out.append(TurningPoint(point=x_mid, zdd=zdd, segment_index=k,
                                    degenerate=abs(zdd) <= tol.rank))
    return out


# ---------------------------------------------------------------------------
# planar projection analysis
# ---------------------------------------------------------------------------

def project(curve: LocusCurve) -> np.ndarray:
    """Planar polyline: drop the z coordinate."""
    return curve.vertices[:, :2].copy()


@dataclass(frozen=True)
class DoublePoint:
    point: np.ndarray          # planar crossing location
    z_values: tuple[float, float]
    segments: tuple[int, int]


def detect_self_intersections(curve_or_polyline, z_values=None,
                              tol: Tolerances = DEFAULT_TOL) -> list[DoublePoint]:
    """Crossings between non-adjacent segments of the projected polyline.

    Uses orientation predicates on doubles with an epsilon fattening; the two
    z values at a crossing are linearly interpolated along each segment.
    Nearby duplicate hits (within one step) are merged.
    """
    if isinstance(curve_or_polyline, LocusCurve):
        poly = curve_or_polyline.vertices[:, :2]
        zs = curve_or_polyline.vertices[:, 2]
        merge_radius = 4.0 * curve_or_polyline.step
    else:
        poly = np.asarray(curve_or_polyline, dtype=float)
        zs = np.asarray(z_values, dtype=float) if z_values is not None \
            else np.zeros(len(poly))
        merge_radius = 4.0 * float(np.median(
            np.linalg.norm(np.diff(poly, axis=0), axis=1)))
    n = len(poly) - 1
    if n < 3:
        return []
    eps = tol.segment

    a = poly[:-1]          # (n, 2) segment starts
    d = poly[1:] - a       # directions
    hits: list[DoublePoint] = []
    # vectorized sweep: segment i against all j >= i + 2
    for i in range(n - 2):
        j0 = i + 2
        aj = a[j0:]
        dj = d[j0:]
        rhs = aj - a[i]
        det = d[i, 0] * dj[:, 1] - d[i, 1] * dj[:, 0]
        ok = np.abs(det) > eps
        if not np.any(ok):
            continue
        det_safe = np.where(ok, det, 1.0)
        s = (rhs[:, 0] * dj[:, 1] - rhs[:, 1] * dj[:, 0]) / det_safe
        t = (rhs[:, 0] * d[i, 1] - rhs[:, 1] * d[i, 0]) / det_safe
        inside = ok & (s >= -eps) & (s <= 1 + eps) & (t >= -eps) & (t <= 1 + eps)
        for rel in np.nonzero(inside)[0]:
            j = j0 + rel
            si, tj = float(s[rel]), float(t[rel])
            p = a[i] + si * d[i]
            z1 = zs[i] + si * (zs[i + 1] - zs[i])
            z2 = zs[j] + tj * (zs[j + 1] - zs[j])
            hits.append(DoublePoint(point=p, z_values=(float(z1), float(z2)),
                                    segments=(i, j)))
    # merge near-duplicates produced by consecutive segment pairs
    merged: list[DoublePoint] = []
    for h in hits:
        if any(np.linalg.norm(h.point - m.point) < merge_radius for m in merged):
            continue
        merged.append(h)
    return merged


def check_no_cusp(curve: LocusCurve, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when the planar tangent never collapses along the curve."""
    planar = np.linalg.norm(curve.tangents[:, :2], axis=1)
    return bool(np.min(planar) > tol.cusp)


def tangency_vs_nonconical(field: ControlField, point, curve: LocusCurve,
                           tol: Tolerances = DEFAULT_TOL) -> float:
    """Angle (radians) between the projected curve tangent at a fold and the
    classifier's non-conical direction eta.

    The point must classify F-semi-conical and lie on the curve.  The curve
    tangent is recomputed from ker Df at the point (the locus tangent), so
    the residual genuinely tests the tangency statement rather than an
    identity of the tracer.
    """
    point = np.asarray(point, dtype=float)
    cls = classify_family_point(field, point, tol)
    if cls.verdict is not Verdict.F_SEMI_CONICAL:
        raise LocusError(f"tangency check requires an F-semi-conical point, "
                         f"got {cls.verdict.value}")
    dist = np.min(np.linalg.norm(curve.vertices - point[None, :], axis=1))
    if dist > max(4.0 * curve.step, 1e-6):
        raise LocusError("point does not lie on the traced curve")
    tang = _tangent(field, point)
    planar = tang[:2]
    npl = np.linalg.norm(planar)
    if npl <= tol.cusp:
        raise LocusError("projected tangent vanishes at the point")
    planar = planar / npl
    cosang = abs(float(planar @ cls.eta))
    cosang = min(cosang, 1.0)
    return float(np.arccos(cosang))
