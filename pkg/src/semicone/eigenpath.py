"""Continuous eigenvalue/eigenvector branches along control paths.

For the two-level Hamiltonian H = [[f1, f2], [f2, -f1]] the eigenvalues are
+-lam with lam = hypot(f1, f2), and (for f2 != 0) the eigenvectors admit the
rational parametrization

    phi_minus ~ (-1, V) / sqrt(1 + V^2),   phi_plus ~ (V, 1) / sqrt(1 + V^2),
    V = (f1 + lam) / f2.

Across an eigenvalue crossing the smooth branches swap the +- labels: the
branch lam0 continues the one whose one-sided extrapolation matches (linear
crossings flip, quadratic touchings do not).  Branch vectors are kept sign-
continuous by overlap with the previous node.

Limit eigenvectors at a crossing of the semi-conical model field
(h(u) u, u + v^2):

  * conical passage (u'(t0) != 0): the limit depends only on sign(u'),
    with Vbar = -(1 + sign(u') sqrt(2));
  * non-conical passage (u'(t0) = 0): with beta = u''/2 + v'^2, the limit is
    Vbar = -(u''/2 - sqrt(u''^2/4 + beta^2)) / beta for beta != 0 and the
    canonical basis for beta = 0.

Note on component order: the source derivation writes the templates for the
basis in which the Hamiltonian appears as [[-f1, f2], [f2, f1]]; transcribed
verbatim they are not eigenvectors of H above.  The Vbar constants are kept
and the component layout is corrected, phi0 = (-Vbar, 1)/sqrt(1+Vbar^2),
phi1 = (1, Vbar)/sqrt(1+Vbar^2), which the residual checks and the tracked
branches confirm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .config import DEFAULT_TOL, Tolerances
from .field import ControlField, FieldError, TwoLevelHamiltonian
from .paths import ControlPath


# ---------------------------------------------------------------------------
# pointwise eigenpairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigPair:
    lam: float
    phi: np.ndarray
    degenerate: bool = False


def _phi_plus(f1, f2):
    """Unit lam_plus eigenvector, branch-stable: picks the better-conditioned
    of the two rational forms (lam+f1, f2) and (f2, lam-f1)."""
    lam = np.hypot(f1, f2)
    if f1 >= 0.0:
        vec = np.array([lam + f1, f2])
    else:
        vec = np.array([f2, lam - f1])
    n = np.linalg.norm(vec)
    if n == 0.0:
        return np.array([1.0, 0.0])
    return vec / n


def eigenpair_closed_form(ham: TwoLevelHamiltonian, branch: int = +1) -> EigPair:
    """Exact eigenpair of a two-level Hamiltonian value.

    branch = +1 for lam_plus, -1 for lam_minus.  H = 0 returns the canonical
    basis vector with lam = 0, flagged degenerate.
    """
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    f1, f2 = ham.f1, ham.f2
    lam = np.hypot(f1, f2)
    if lam == 0.0:
        phi = np.array([1.0, 0.0]) if branch < 0 else np.array([0.0, 1.0])
        return EigPair(0.0, phi, degenerate=True)
    plus = _phi_plus(f1, f2)
    if branch > 0:
        return EigPair(float(lam), plus)
    return EigPair(float(-lam), np.array([-plus[1], plus[0]]))


def v_parameter(f1: float, f2: float) -> float:
    """V with phi_minus ~ (-1, V), phi_plus ~ (V, 1); requires f2 != 0."""
    if f2 == 0.0:
        raise ZeroDivisionError("V-parametrization needs f2 != 0")
    return float((f1 + np.hypot(f1, f2)) / f2)


# ---------------------------------------------------------------------------
# limit eigenvectors at crossings of the semi-conical model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitEigenvectors:
    v_bar: float | None
    phi0: np.ndarray
    phi1: np.ndarray


def _from_vbar(v_bar: float) -> LimitEigenvectors:
    n = np.sqrt(1.0 + v_bar ** 2)
    phi0 = np.array([-v_bar, 1.0]) / n
    phi1 = np.array([1.0, v_bar]) / n
    return LimitEigenvectors(float(v_bar), phi0, phi1)


def limit_eigenvector_conical(sign_udot: int) -> LimitEigenvectors:
    """Crossing limit for a conical passage; depends only on sign(u'(t0))."""
    if sign_udot not in (+1, -1):
        raise ValueError("sign_udot must be +1 or -1")
    v_bar = -(1.0 + sign_udot * np.sqrt(2.0))
    return _from_vbar(v_bar)


def limit_eigenvector_nonconical(udd: float, vd: float) -> LimitEigenvectors:
    """Crossing limit for a non-conical passage (u'(t0) = 0).

    beta = u''/2 + v'^2; the beta = 0 case degenerates to the canonical
    basis.
    """
    beta = 0.5 * udd + vd ** 2
    scale = max(abs(udd), vd ** 2, 1.0)
    if abs(beta) <= 1e-14 * scale:
        return LimitEigenvectors(None, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    v_bar = -(0.5 * udd - np.sqrt(0.25 * udd ** 2 + beta ** 2)) / beta
    return _from_vbar(v_bar)


# ---------------------------------------------------------------------------
# branch tracking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenBranches:
    t: np.ndarray                  # grid, (N+1,)
    lam0: np.ndarray               # smooth branch through crossings
    lam1: np.ndarray
    phi0: np.ndarray               # (N+1, 2), sign-continuous
    phi1: np.ndarray
    crossing_times: tuple[float, ...]
    swap_parity: np.ndarray        # bool per node: True where lam0 = +lam
    theta: np.ndarray              # unwrapped angle of phi0
    v_values: np.ndarray           # V with phi0 ~ (-1, V); +-inf where phi0_x ~ 0
    t_z: float | None              # first crossing (ensemble convention)
    gap_warnings: tuple = ()

    @property
    def n(self) -> int:
        return len(self.t) - 1


def _field_on_path(field: ControlField, path: ControlPath, z, t: np.ndarray):
    uv = path.eval(t)
    if field.arity == 2:
        pts = uv
    else:
        if z is None:
            raise FieldError("arity-3 field requires a z value")
        pts = np.column_stack([uv, np.full(len(t), float(z))])
    return field.evaluate_batch(pts)


def track_branches(field: ControlField, path: ControlPath, z: float | None = None,
                   n: int = 2000, tol: Tolerances = DEFAULT_TOL) -> EigenBranches:
    """Continuous branches lam0/lam1, phi0/phi1 on a uniform grid.

    Every local minimum of the sampled gap is refined (root of the squared
    gap's derivative, brentq to ~1e-13 in t); a refined gap below 1e-9
    declares a crossing, while positive minima below 1e-6 * max gap are
    reported as near-miss warnings.  The +- labels swap at a crossing
    exactly when quadratic extrapolation of lam0 across the bracket says
    the smooth branch changes sign.
    """
    t = np.linspace(0.0, 1.0, n + 1)
    fv = _field_on_path(field, path, z, t)
    lam = np.hypot(fv[:, 0], fv[:, 1])
    gap = 2.0 * lam
    gmax = float(np.max(gap))
    if gmax == 0.0:
        raise FieldError("field vanishes identically along the path")

    def gap_sq(tt: float) -> float:
        f = _field_on_path(field, path, z, np.array([tt]))[0]
        return 4.0 * float(f[0] ** 2 + f[1] ** 2)

    def gap_sq_deriv(tt: float) -> float:
        # d/dt |f(path(t))|^2 = 2 f . (Df path'), analytic in both factors
        uv = path.eval(tt)
        x = uv if field.arity == 2 else np.array([uv[0], uv[1], z])
        f = field.evaluate(x)
        jac = field.jacobian(x)
        vel = path.eval(tt, 1)
        df_dt = jac[:, :2] @ vel
        return 2.0 * float(f @ df_dt)

    # every discrete local minimum of the gap is refined (a crossing between
    # nodes leaves a minimum of order slope * dt, far above any fixed
    # threshold); the refined value then separates true crossings from
    # near-misses, which are reported
    crossings: list[float] = []
    warnings: list[tuple[float, float]] = []
    near_miss = 1e-6 * gmax
    for k in range(1, n):
        if gap[k] < gap[k - 1] and gap[k] <= gap[k + 1]:
            # refine as a root of the derivative of the squared gap (the gap
            # itself is V-shaped at a crossing and the squared gap is too
            # flat for value-based minimization)
            d_lo = gap_sq_deriv(t[k - 1])
            d_hi = gap_sq_deriv(t[k + 1])
            if d_lo < 0.0 < d_hi:
                t_star = float(brentq(gap_sq_deriv, t[k - 1], t[k + 1],
                                      xtol=1e-15, rtol=8.9e-16))
            else:
                res = minimize_scalar(gap_sq, bounds=(t[k - 1], t[k + 1]),
                                      method="bounded",
                                      options={"xatol": 1e-13})
                t_star = float(res.x)
            g_star = float(np.sqrt(gap_sq(t_star)))
            if g_star < 1e-9 * max(1.0, gmax):
                crossings.append(t_star)
            elif g_star < near_miss:
                warnings.append((t_star, g_star))
    # boundary crossings (path starting or ending exactly on the locus)
    boundary = []
    if gap[0] < 1e-9 * max(1.0, gmax):
        boundary.append(0.0)
    if gap[-1] < 1e-9 * max(1.0, gmax):
        boundary.append(1.0)

    # smooth-branch parity: swap[k] True when lam0(t_k) = +lam(t_k)
    swap = np.zeros(n + 1, dtype=bool)
    parity = False
    tiny = 1e-9 * gmax
    for tc in crossings:
        k_after = int(np.searchsorted(t, tc))
        if k_after <= 2 or k_after >= n:
            continue
        # fit nodes strictly before the bracket, compare at the first node
        # past the crossing whose gap is resolvable (the crossing may sit
        # exactly on a node, where both labels coincide at zero)
        k_fit = k_after - 1
        while k_fit > 2 and lam[k_fit] <= tiny:
            k_fit -= 1
        ks = [k_fit - 2, k_fit - 1, k_fit]
        k_cmp = k_after
        while k_cmp < n and lam[k_cmp] <= tiny:
            k_cmp += 1
        signed = [(lam if parity else -lam)[kk] for kk in ks]
        coeffs = np.polyfit(t[ks], signed, 2)
        pred = np.polyval(coeffs, t[k_cmp])
        keep = (lam if parity else -lam)[k_cmp]
        flip = (-lam if parity else lam)[k_cmp]
        if abs(pred - flip) < abs(pred - keep):
            parity = not parity
        swap[k_after:] = parity
    lam0 = np.where(swap, lam, -lam)
    lam1 = -lam0

    # eigenvectors, relabeled with the same parity, sign-continuous.
    # Nodes sitting (numerically) on or next to a crossing have eigenvectors
    # dominated by evaluation noise (synthesized paths meet the singular set
    # only to ~1e-10); they are skipped by the sign chain and filled from
    # their neighbors.
    good = lam > 1e-7 * gmax
    cond = fv[:, 0] >= 0.0
    vx = np.where(cond, lam + fv[:, 0], fv[:, 1])
    vy = np.where(cond, fv[:, 1], lam - fv[:, 0])
    nrm = np.hypot(vx, vy)
    safe_n = np.where(good, np.where(nrm > 0, nrm, 1.0), 1.0)
    phi_plus = np.column_stack([vx, vy]) / safe_n[:, None]
    phi_plus[~good] = 0.0
    phi_minus = np.column_stack([-phi_plus[:, 1], phi_plus[:, 0]])
    phi0 = np.where(swap[:, None], phi_plus, phi_minus).copy()
    phi1 = np.where(swap[:, None], phi_minus, phi_plus).copy()

    last0 = last1 = None
    for k in range(n + 1):
        if not good[k]:
            continue
        if last0 is not None and phi0[k] @ last0 < 0.0:
            phi0[k] = -phi0[k]
        if last1 is not None and phi1[k] @ last1 < 0.0:
            phi1[k] = -phi1[k]
        last0, last1 = phi0[k], phi1[k]
    good_idx = np.nonzero(good)[0]

    def _extrapolate(arr, a, b, k):
        # angle-linear extrapolation from nodes a (nearer) and b keeps the
        # branch's first difference smooth across boundary-filled nodes
        base = np.arctan2(arr[a, 1], arr[a, 0])
        prev = np.arctan2(arr[b, 1], arr[b, 0])
        delta = np.arctan2(np.sin(base - prev), np.cos(base - prev))
        ang = base + delta * (k - a) / (a - b)
        return np.array([np.cos(ang), np.sin(ang)])

    for k in np.nonzero(~good)[0]:
        left = good_idx[good_idx < k]
        right = good_idx[good_idx > k]
        for arr in (phi0, phi1):
            if len(left) and len(right):
                cand = arr[left[-1]] + arr[right[0]]
                if np.linalg.norm(cand) < 1e-6:
                    cand = arr[left[-1]]
                arr[k] = cand / np.linalg.norm(cand)
            elif len(left) >= 2:
                arr[k] = _extrapolate(arr, left[-1], left[-2], k)
            elif len(right) >= 2:
                arr[k] = _extrapolate(arr, right[0], right[1], k)
            elif len(left):
                arr[k] = arr[left[-1]]
            elif len(right):
                arr[k] = arr[right[0]]
            else:
                arr[k] = np.array([1.0, 0.0])
    # first-node convention: first nonzero component of phi0 negative
    for c in phi0[0]:
        if abs(c) > 1e-14:
            if c > 0:
                phi0 *= -1.0
            break

    # unwrapped branch angle and V-parametrization
    raw = np.arctan2(phi0[:, 1], phi0[:, 0])
    theta = np.unwrap(raw)
    with np.errstate(divide="ignore", invalid="ignore"):
        v_values = np.where(np.abs(phi0[:, 0]) > 1e-300,
                            -phi0[:, 1] / phi0[:, 0],
                            np.inf)

    all_crossings = tuple(sorted(boundary + crossings))
    t_z = all_crossings[0] if all_crossings else None
    return EigenBranches(t=t, lam0=lam0, lam1=lam1, phi0=phi0, phi1=phi1,
                         crossing_times=tuple(sorted(crossings)),
                         swap_parity=swap, theta=theta, v_values=v_values,
                         t_z=t_z, gap_warnings=tuple(warnings))


def branch_residuals(field: ControlField, path: ControlPath, z,
                     br: EigenBranches) -> float:
    """Max over nodes of ||H phi_i - lam_i phi_i|| / max(||H||, tiny)."""
    fv = _field_on_path(field, path, z, br.t)
    worst = 0.0
    for k in range(len(br.t)):
        h = np.array([[fv[k, 0], fv[k, 1]], [fv[k, 1], -fv[k, 0]]])
        nh = max(np.linalg.norm(h), 1e-300)
        r0 = np.linalg.norm(h @ br.phi0[k] - br.lam0[k] * br.phi0[k]) / nh
        r1 = np.linalg.norm(h @ br.phi1[k] - br.lam1[k] * br.phi1[k]) / nh
        worst = max(worst, r0, r1)
    return float(worst)


def eigenvector_limit_from_tracking(br: EigenBranches, t_cross: float) -> np.ndarray:
    """Tracked phi0 at the grid node nearest to a crossing time."""
    k = int(np.argmin(np.abs(br.t - t_cross)))
    return br.phi0[k].copy()
