"""Schrodinger propagation in the adiabatic regime and spectral reduction.

The state after time 1/eps is produced by composing midpoint-frozen matrix
exponentials, which are exactly unitary: for the two-level zero-trace
generator the closed form

    exp(-i a H) = cos(a lam) I - i sin(a lam) H / lam,  lam = hypot(f1, f2),

is used; n-level steps go through the symmetric eigendecomposition of the
frozen Hamiltonian.  Step sizes are tied to the per-step phase
(dtau / eps) * max ||H|| <= theta_max, so accuracy is second order in the
step while unitarity is exact up to rounding -- the property that matters
over 1/eps-long horizons.

The ensemble variants propagate a whole z-grid simultaneously (the z axis is
vectorized; time stays sequential).

Spectral band reduction follows the two-level block of an n-level map: the
isometry onto the (j, j+1) eigenspace is computed by a full symmetric
eigensolve plus Procrustes alignment with the previous query (a deliberate,
mathematically identical substitute for the contour-integral projector on a
separated band), and the reduced 2x2 Hamiltonian is read off in that frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .field import ControlField, FieldError, NLevelHamiltonianMap
from .paths import ControlPath


class PropagationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# elementary steps
# ---------------------------------------------------------------------------

def step_2level(f1: float, f2: float, dt_over_eps: float, psi: np.ndarray) -> np.ndarray:
    """psi' = exp(-i (dt/eps) H) psi for H = [[f1, f2], [f2, -f1]]."""
    psi = np.asarray(psi, dtype=complex)
    lam = np.hypot(f1, f2)
    if lam == 0.0:
        return psi.copy()
    th = dt_over_eps * lam
    c, s = np.cos(th), np.sin(th)
    n1, n2 = f1 / lam, f2 / lam
    h_psi = np.array([n1 * psi[0] + n2 * psi[1],
                      n2 * psi[0] - n1 * psi[1]])
    return c * psi - 1j * s * h_psi


def transition_probability(psi: np.ndarray, target: np.ndarray) -> float:
    """|<psi, target>| for normalized inputs (modulus, not squared)."""
    psi = np.asarray(psi, dtype=complex)
    target = np.asarray(target, dtype=complex)
    return float(abs(np.vdot(target, psi)))


# ---------------------------------------------------------------------------
# two-level propagation (single system and ensembles)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropagationResult:
    psi: np.ndarray          # final state(s); (2,) or (nz, 2)
    n_steps: int
    norm_drift: float        # max | ||psi|| - 1 | observed at checkpoints


def _grid_size(max_h: float, eps: float, tol: Tolerances, n_min: int) -> int:
    n = int(np.ceil(max_h / (eps * tol.theta_max))) + 1
    n = max(n, n_min)
    if n > tol.step_cap:
        raise PropagationError(
            f"step budget exceeded: {n} > {tol.step_cap} (eps={eps})")
    return n


def propagate_ensemble(field: ControlField, path: ControlPath, z_values,
                       eps: float, psi0: np.ndarray,
                       tol: Tolerances = DEFAULT_TOL, n_min: int = 2000,
                       ) -> PropagationResult:
    """Propagate i psi' = H_f(u(eps t), v(eps t), z) psi to t = 1/eps for a
    whole grid of z values at once.

    psi0: (nz, 2) complex initial states (one per z), or (2,) shared.
    """
    if eps <= 0:
        raise PropagationError("eps must be positive")
    z_values = np.atleast_1d(np.asarray(z_values, dtype=float))
    nz = len(z_values)
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape == (2,):
        psi = np.tile(psi, (nz, 1))
    if psi.shape != (nz, 2):
        raise PropagationError(f"psi0 shape {psi.shape} incompatible with {nz} z values")
    psi = psi.copy()

    # probe max ||H|| over the path and the z grid
    tp = np.linspace(0.0, 1.0, 2049)
    uv = path.eval(tp)
    if field.arity == 2:
        f_probe = field.evaluate_batch(uv)
        max_h = float(np.max(np.hypot(f_probe[:, 0], f_probe[:, 1])))
    else:
        max_h = 0.0
        for z in z_values:
            pts = np.column_stack([uv, np.full(len(tp), z)])
            f_probe = field.evaluate_batch(pts)
            max_h = max(max_h, float(np.max(np.hypot(f_probe[:, 0], f_probe[:, 1]))))
    n = _grid_size(max_h, eps, tol, n_min)
    dtau = 1.0 / n
    a = dtau / eps

    mid = (np.arange(n) + 0.5) * dtau
    uv_mid = path.eval(mid)
    if field.arity == 2:
        fm = field.evaluate_batch(uv_mid)           # (n, 2)
        f1 = np.repeat(fm[:, :1], nz, axis=1)       # (n, nz)
        f2 = np.repeat(fm[:, 1:], nz, axis=1)
    else:
        f1 = np.empty((n, nz))
        f2 = np.empty((n, nz))
        for iz, z in enumerate(z_values):
            pts = np.column_stack([uv_mid, np.full(n, z)])
            fm = field.evaluate_batch(pts)
            f1[:, iz] = fm[:, 0]
            f2[:, iz] = fm[:, 1]

    lam = np.hypot(f1, f2)
    safe = np.where(lam > 0.0, lam, 1.0)
    n1 = np.where(lam > 0.0, f1 / safe, 0.0)
    n2 = np.where(lam > 0.0, f2 / safe, 0.0)
    c = np.cos(a * lam)
    s = np.where(lam > 0.0, np.sin(a * lam), 0.0)

    drift = 0.0
    check_every = max(n // 16, 1)
    for k in range(n):
        hp0 = n1[k] * psi[:, 0] + n2[k] * psi[:, 1]
        hp1 = n2[k] * psi[:, 0] - n1[k] * psi[:, 1]
        p0 = c[k] * psi[:, 0] - 1j * s[k] * hp0
        p1 = c[k] * psi[:, 1] - 1j * s[k] * hp1
        psi[:, 0] = p0
        psi[:, 1] = p1
        if k % check_every == 0:
            drift = max(drift, float(np.max(np.abs(
                np.linalg.norm(psi, axis=1) - 1.0))))
    drift = max(drift, float(np.max(np.abs(np.linalg.norm(psi, axis=1) - 1.0))))
    return PropagationResult(psi=psi, n_steps=n, norm_drift=drift)


def propagate_2level(field: ControlField, path: ControlPath, z: float | None,
                     eps: float, psi0: np.ndarray,
                     tol: Tolerances = DEFAULT_TOL, n_min: int = 2000,
                     ) -> PropagationResult:
    """Single-system wrapper around propagate_ensemble."""
    if field.arity == 3 and z is None:
        raise FieldError("arity-3 field requires z")
    zv = [0.0] if field.arity == 2 else [float(z)]
    field2 = field
    res = propagate_ensemble(field2, path, zv, eps, np.asarray(psi0), tol, n_min)
    return PropagationResult(psi=res.psi[0], n_steps=res.n_steps,
                             norm_drift=res.norm_drift)


# ---------------------------------------------------------------------------
# rotating frame (diagnostics)
# ---------------------------------------------------------------------------

def rotating_frame_states(branches, eps: float, psi_phys: np.ndarray,
                          tau: float = 1.0) -> np.ndarray:
    """Transport a physical-frame state into the rotating frame at time tau.

    Y = P^T psi with P = [phi0 | phi1] wherever the branches are defined;
    Ytilde applies the dynamical phases exp(+- i Lambda / eps),
    Lambda(tau) = int_0^tau lam0.
    """
    k = int(np.argmin(np.abs(branches.t - tau)))
    p = np.column_stack([branches.phi0[k], branches.phi1[k]])
    if k:
        dt = np.diff(branches.t[: k + 1])
        lam_int = float(np.sum(0.5 * (branches.lam0[1: k + 1]
                                      + branches.lam0[: k]) * dt))
    else:
        lam_int = 0.0
    y = p.T @ np.asarray(psi_phys, dtype=complex)
    phases = np.array([np.exp(1j * lam_int / eps), np.exp(-1j * lam_int / eps)])
    return phases * y


def propagate_rotating(branches, eps: float, y0: np.ndarray,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Integrate the rotating-frame coupling equation

        Ytilde' = [[0, td e^{2i Lam/eps}], [-td e^{-2i Lam/eps}, 0]] Ytilde,

    with td = dtheta/dtau and Lam = int lam0, both read off tracked branches
    (td by central differences).  Midpoint-frozen exponentials of the
    skew-Hermitian generator keep the step exactly unitary.
    """
    t = branches.t
    theta = branches.theta
    lam0 = branches.lam0
    lam_int = np.concatenate([[0.0], np.cumsum(
        0.5 * (lam0[1:] + lam0[:-1]) * np.diff(t))])
    td = np.gradient(theta, t)
    y = np.asarray(y0, dtype=complex).copy()
    for k in range(len(t) - 1):
        dt = t[k + 1] - t[k]
        tdm = 0.5 * (td[k] + td[k + 1])
        lm = 0.5 * (lam_int[k] + lam_int[k + 1])
        a = tdm * np.exp(2j * lm / eps)
        # generator [[0, a], [-conj(a), 0]] * dt, exponential in closed form
        mod = abs(a) * dt
        if mod == 0.0:
            continue
        ca, sa = np.cos(mod), np.sin(mod)
        u01 = a / abs(a)
        y0_, y1_ = y[0], y[1]
        y[0] = ca * y0_ + sa * u01 * y1_
        y[1] = ca * y1_ - sa * np.conj(u01) * y0_
    return y


# ---------------------------------------------------------------------------
# n-level propagation
# ---------------------------------------------------------------------------

def propagate_nlevel(hmap: NLevelHamiltonianMap, path: ControlPath,
                     z: float | None, eps: float, psi0: np.ndarray,
                     tol: Tolerances = DEFAULT_TOL, n_min: int = 2000,
                     ) -> PropagationResult:
    """Frozen-exponential propagation of the full n-level system."""
    if eps <= 0:
        raise PropagationError("eps must be positive")
    psi = np.asarray(psi0, dtype=complex).copy()
    if psi.shape != (hmap.n,):
        raise PropagationError(f"psi0 must have shape ({hmap.n},)")
    pts_probe = _map_points(hmap, path, z, np.linspace(0.0, 1.0, 513))
    h_probe = hmap.evaluate_batch(pts_probe)
    max_h = float(np.max(np.linalg.norm(h_probe, axis=(1, 2))))
    n = _grid_size(max_h, eps, tol, n_min)
    dtau = 1.0 / n
    a = dtau / eps
    mid = (np.arange(n) + 0.5) * dtau
    hs = hmap.evaluate_batch(_map_points(hmap, path, z, mid))
    w, v = np.linalg.eigh(hs)               # (n, dim), (n, dim, dim)
    phases = np.exp(-1j * a * w)
    drift = 0.0
    for k in range(n):
        psi = v[k] @ (phases[k] * (v[k].T @ psi))
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    return PropagationResult(psi=psi, n_steps=n, norm_drift=drift)


def _map_points(hmap, path, z, t):
    uv = path.eval(t)
    if hmap.arity == 2:
        return uv
    if z is None:
        raise FieldError("arity-3 map requires z")
    return np.column_stack([uv, np.full(len(np.atleast_1d(t)), float(z))])


# ---------------------------------------------------------------------------
# spectral band reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandReduction:
    j: int                      # 1-based lower band index
    columns: np.ndarray         # (n, 2) orthonormal, spans the (j, j+1) eigenspace
    f1: float                   # zero-trace reduced field entries
    f2: float
    mean: float                 # (lam_j + lam_{j+1}) / 2 (the removed trace part)
    band_gap: float             # separation of the band from the rest
    point: np.ndarray

    @property
    def reduced_matrix(self) -> np.ndarray:
        return np.array([[self.mean + self.f1, self.f2],
                         [self.f2, self.mean - self.f1]])


def _align_columns(w: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Rotate the basis w (n x 2) of a subspace to match ref by Procrustes."""
    m = w.T @ ref
    uu, _, vv = np.linalg.svd(m)
    return w @ (uu @ vv)


def band_reduce(hmap: NLevelHamiltonianMap, x, j: int,
                prev: BandReduction | None = None,
                tol: Tolerances = DEFAULT_TOL) -> BandReduction:
    """Reduced zero-trace two-level Hamiltonian of the (j, j+1) band at x.

    j is 1-based.  Fails when the band touches the rest of the spectrum
    (separation below tol.band * ||H||).  Column alignment: against `prev`
    when given, else against the two coordinate axes carrying the band.
    """
    x = np.asarray(x, dtype=float)
    h = hmap.evaluate(x)
    w, v = np.linalg.eigh(h)
    n = hmap.n
    if not (1 <= j <= n - 1):
        raise PropagationError(f"band index {j} out of range 1..{n - 1}")
    ji = j - 1
    norm_h = max(float(np.linalg.norm(h)), 1e-300)
    gap_lo = w[ji] - w[ji - 1] if ji > 0 else np.inf
    gap_hi = w[ji + 2] - w[ji + 1] if ji + 2 < n else np.inf
    band_gap = float(min(gap_lo, gap_hi))
    if band_gap <= tol.band * norm_h:
        raise PropagationError(
            f"band ({j},{j + 1}) touches the rest of the spectrum at "
            f"{x.tolist()} (separation {band_gap:.2e})")
    basis = v[:, ji:ji + 2]
    if prev is not None:
        ref = prev.columns
    else:
        weight = np.sum(basis ** 2, axis=1)
        axes = np.argsort(weight)[-2:]
        axes = np.sort(axes)
        ref = np.zeros((n, 2))
        ref[axes[0], 0] = 1.0
        ref[axes[1], 1] = 1.0
    q = _align_columns(basis, ref)
    hq = h @ q
    f1 = 0.5 * float(q[:, 0] @ hq[:, 0] - q[:, 1] @ hq[:, 1])
    f2 = float(q[:, 0] @ hq[:, 1])
    mean = 0.5 * float(q[:, 0] @ hq[:, 0] + q[:, 1] @ hq[:, 1])
    return BandReduction(j=j, columns=q, f1=f1, f2=f2, mean=mean,
                         band_gap=band_gap, point=x)


class ReducedField:
    """Duck-typed field view of a band reduction: evaluate / jacobian only.

    Continuity of the isometry across queries is maintained by aligning every
    reduction against a cached previous one; the Jacobian is central finite
    differences of the aligned reduced components (the underlying map is
    smooth even across intra-band crossings).  Not an exact-polynomial field:
    tracing tolerances should be relaxed accordingly.
    """

    def __init__(self, hmap: NLevelHamiltonianMap, j: int,
                 tol: Tolerances = DEFAULT_TOL, fd_step: float = 1e-5):
        self.hmap = hmap
        self.j = j
        self.arity = hmap.arity
        self.tol = tol
        self.fd_step = fd_step
        self._anchor: BandReduction | None = None

    def _reduce(self, x) -> BandReduction:
        red = band_reduce(self.hmap, x, self.j, prev=self._anchor, tol=self.tol)
        return red

    def evaluate(self, x) -> np.ndarray:
        red = self._reduce(x)
        self._anchor = red
        return np.array([red.f1, red.f2])

    def evaluate_batch(self, pts) -> np.ndarray:
        return np.array([self.evaluate(p) for p in np.asarray(pts, dtype=float)])

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        base = self._reduce(x)
        self._anchor = base
        h = self.fd_step
        jac = np.empty((2, self.arity))
        for i in range(self.arity):
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            rp = band_reduce(self.hmap, xp, self.j, prev=base, tol=self.tol)
            rm = band_reduce(self.hmap, xm, self.j, prev=base, tol=self.tol)
            jac[0, i] = (rp.f1 - rm.f1) / (2 * h)
            jac[1, i] = (rp.f2 - rm.f2) / (2 * h)
        return jac


def fit_local_field(reduced: ReducedField, center, half_width: float = 0.08,
                    degree: int = 3, n_side: int = 5) -> ControlField:
    """Least-squares polynomial surrogate of a reduced field near a point.

    Samples a tensor stencil (aligned to one anchored reduction, so the
    isometry is consistent across samples) and fits each component by total
    degree <= `degree`.  The surrogate feeds the exact-polynomial classifier.
    """
    from .field import Polynomial

    center = np.asarray(center, dtype=float)
    arity = reduced.arity
    anchor = band_reduce(reduced.hmap, center, reduced.j, prev=None, tol=reduced.tol)
    axes = [np.linspace(-half_width, half_width, n_side) for _ in range(arity)]
    grids = np.meshgrid(*axes, indexing="ij")
    offsets = np.column_stack([g.ravel() for g in grids])
    pts = center[None, :] + offsets
    vals = np.empty((len(pts), 2))
    for i, p in enumerate(pts):
        red = band_reduce(reduced.hmap, p, reduced.j, prev=anchor, tol=reduced.tol)
        vals[i] = (red.f1, red.f2)

    exps = [e for e in _monomials(arity, degree)]
    a = np.column_stack([np.prod(offsets ** np.array(e), axis=1) for e in exps])
    polys = []
    for comp in range(2):
        coef, *_ = np.linalg.lstsq(a, vals[:, comp], rcond=None)
        terms = {}
        for e, c in zip(exps, coef):
            terms[tuple(e)] = float(c)
        polys.append(Polynomial(arity, terms))
    # the surrogate lives in offset coordinates centered at `center`
    return ControlField(polys[0], polys[1])


def _monomials(arity: int, degree: int):
    if arity == 2:
        for i in range(degree + 1):
            for jj in range(degree + 1 - i):
                yield (i, jj)
    else:
        for i in range(degree + 1):
            for jj in range(degree + 1 - i):
                for k in range(degree + 1 - i - jj):
                    yield (i, jj, k)


# ---------------------------------------------------------------------------
# adiabatic decoupling comparison
# ---------------------------------------------------------------------------

def decoupling_error(hmap: NLevelHamiltonianMap, path: ControlPath,
                     z: float | None, j: int, eps: float,
                     psi0_reduced: np.ndarray,
                     tol: Tolerances = DEFAULT_TOL, n_min: int = 2000) -> float:
    """|| psi_full(1/eps) - I(H(end)) psi_red(1/eps) ||.

    psi_full solves the n-level equation from I(H(start)) psi0_reduced;
    psi_red solves the reduced two-level equation (trace included, so the
    relative phase of the comparison is meaningful).  The isometry I is the
    overlap-aligned band frame, carried continuously along the path.
    """
    if eps <= 0:
        raise PropagationError("eps must be positive")
    psi0_reduced = np.asarray(psi0_reduced, dtype=complex)
    pts_probe = _map_points(hmap, path, z, np.linspace(0.0, 1.0, 513))
    h_probe = hmap.evaluate_batch(pts_probe)
    max_h = float(np.max(np.linalg.norm(h_probe, axis=(1, 2))))
    n = _grid_size(max_h, eps, tol, n_min)
    dtau = 1.0 / n
    a = dtau / eps
    mid = (np.arange(n) + 0.5) * dtau
    hs = hmap.evaluate_batch(_map_points(hmap, path, z, mid))
    w, v = np.linalg.eigh(hs)

    # continuous band frame along the midpoint chain + at the two endpoints
    red0 = band_reduce(hmap, _map_points(hmap, path, z, np.array([0.0]))[0],
                       j, prev=None, tol=tol)
    prev = red0
    psi_full = red0.columns @ psi0_reduced
    psi_red = psi0_reduced.copy()
    ji = j - 1
    norm_h = max(float(np.max(np.linalg.norm(hs, axis=(1, 2)))), 1e-300)
    for k in range(n):
        gap_lo = w[k, ji] - w[k, ji - 1] if ji > 0 else np.inf
        gap_hi = w[k, ji + 2] - w[k, ji + 1] if ji + 2 < hmap.n else np.inf
        if min(gap_lo, gap_hi) <= tol.band * norm_h:
            raise PropagationError(
                f"band ({j},{j + 1}) separation lost along the path (step {k})")
        basis = v[k][:, ji:ji + 2]
        q = _align_columns(basis, prev.columns)
        hq = hs[k] @ q
        f1 = 0.5 * (q[:, 0] @ hq[:, 0] - q[:, 1] @ hq[:, 1])
        f2 = q[:, 0] @ hq[:, 1]
        mean = 0.5 * (q[:, 0] @ hq[:, 0] + q[:, 1] @ hq[:, 1])
        prev = BandReduction(j=j, columns=q, f1=float(f1), f2=float(f2),
                             mean=float(mean), band_gap=float(min(gap_lo, gap_hi)),
                             point=prev.point)
        # full step
        psi_full = v[k] @ (np.exp(-1j * a * w[k]) * (v[k].T @ psi_full))
        # reduced step: exp(-i a (mean I + f.sigma))
        lam = np.hypot(f1, f2)
        phase = np.exp(-1j * a * mean)
        if lam == 0.0:
            psi_red = phase * psi_red
        else:
            th = a * lam
            c, s = np.cos(th), np.sin(th)
            n1, n2 = f1 / lam, f2 / lam
            hp = np.array([n1 * psi_red[0] + n2 * psi_red[1],
                           n2 * psi_red[0] - n1 * psi_red[1]])
            psi_red = phase * (c * psi_red - 1j * s * hp)
    red1 = band_reduce(hmap, _map_points(hmap, path, z, np.array([1.0]))[0],
                       j, prev=prev, tol=tol)
    return float(np.linalg.norm(psi_full - red1.columns @ psi_red))
