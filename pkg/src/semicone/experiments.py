"""Experiment synthesis and (eps, z) sweeps.

Builds the two control-path families the transfer theory runs on:

  * locus-following paths ("condition C"): start at the projection of an
    F-conical point, follow the projected singular curve, end at the
    semi-conical projection with u(1) = u'(1) = 0, u''(1) != 0;
  * closed loops: approach the projected curve from a base point, follow it
    between two F-conical points (through the fold), exit transversally in
    z, return to base -- C^4 throughout, on the curve exactly on [t0, t1].

Sweeps fill T_eps(z) = |<psi_eps^z(1/eps), phi_plus^z(end)>| over (eps, z)
grids and fit log-log decay exponents of the defects.  Everything is
deterministic: no randomness, fixed evaluation order, repr-based float
formatting, so identical configurations produce bit-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .classify import Verdict, classify_family_point
from .config import DEFAULT_TOL, Tolerances
from .eigenpath import eigenpair_closed_form
from .field import ControlField, FieldError, TwoLevelHamiltonian
from .locus import LocusCurve, find_intersection, turning_points
from .paths import ControlPath, PolySegment
from .propagate import propagate_ensemble


class ExperimentError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# default grids
# ---------------------------------------------------------------------------

def default_eps_grid(n: int = 8, lo_exp: float = -3.5, hi_exp: float = -1.0
                     ) -> np.ndarray:
    return np.logspace(hi_exp, lo_exp, n)[::-1].copy()  # ascending


def default_z_grid(z0: float, z1: float, n: int = 9) -> np.ndarray:
    return np.linspace(z0, z1, n)


# ---------------------------------------------------------------------------
# locus-arc fitting helpers
# ---------------------------------------------------------------------------

def _solve_on_locus_at_v(field: ControlField, v: float, seed_uz: np.ndarray,
                         tol: Tolerances) -> np.ndarray:
    """Newton solve f(u, v, z) = 0 in (u, z) at frozen v."""
    u, z = float(seed_uz[0]), float(seed_uz[1])
    for _ in range(50):
        x = np.array([u, v, z])
        f = field.evaluate(x)
        if np.linalg.norm(f) <= 1e-13 * (1.0 + abs(u) + abs(v) + abs(z)):
            return np.array([u, z])
        jac = field.jacobian(x)
        a = jac[:, [0, 2]]
        try:
            du, dz = np.linalg.solve(a, -f)
        except np.linalg.LinAlgError as exc:
            raise ExperimentError(f"locus solve singular at v={v}") from exc
        u += du
        z += dz
    raise ExperimentError(f"locus solve did not converge at v={v}")


def _nearest_vertex(curve: LocusCurve, point3: np.ndarray) -> int:
    return int(np.argmin(np.linalg.norm(curve.vertices - point3[None, :], axis=1)))


def _require_on_curve(curve: LocusCurve, point3: np.ndarray, label: str) -> int:
    k = _nearest_vertex(curve, point3)
    if np.linalg.norm(curve.vertices[k] - point3) > max(8.0 * curve.step, 1e-5):
        raise ExperimentError(f"{label} point does not lie on the traced locus")
    return k


def _chebyshev_nodes(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n)
    x = np.cos((2 * k + 1) * np.pi / (2 * n))
    return 0.5 * (a + b) + 0.5 * (b - a) * x


def _fit_poly_graph(v_nodes: np.ndarray, u_nodes: np.ndarray, max_deg: int,
                    target: float) -> np.ndarray:
    """Least-squares power-basis fit u(v), degree escalated until `target`."""
    for deg in range(2, max_deg + 1):
        coeffs = np.polynomial.polynomial.polyfit(v_nodes, u_nodes, deg)
        resid = np.max(np.abs(
            np.polynomial.polynomial.polyval(v_nodes, coeffs) - u_nodes))
        if resid <= target:
            return coeffs
    raise ExperimentError(
        f"projected locus not polynomial-representable to {target} "
        f"with degree <= {max_deg}")


# ---------------------------------------------------------------------------
# condition-(C) paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CPathExperiment:
    path: ControlPath
    z0: float                      # parameter of the entry conical point
    entry: np.ndarray              # (u, v, z) on the locus
    sc_point: np.ndarray           # the semi-conical fold
    max_locus_residual: float      # verification of "lies on pi(C)"


def synthesize_C_path(field: ControlField, curve: LocusCurve, entry,
                      tol: Tolerances = DEFAULT_TOL,
                      residual_target: float = 1e-9) -> CPathExperiment:
    """Locus-following path from an F-conical entry to the semi-conical
    projection, parametrized by the v-coordinate of the projected curve.

    The projected arc must be a graph over v between the entry and the fold
    (true near a generic fold, where the non-conical direction is brought to
    the v-axis).  u(t) is fitted as (v(t) - v*)^2 * w(v(t)) so the end
    conditions u(1) = u'(1) = 0, u''(1) != 0 hold exactly.
    """
    entry_input = np.asarray(entry, dtype=float)
    entry = find_intersection(field, entry_input, tol)
    if np.linalg.norm(entry - entry_input) > 1e-3:
        raise ExperimentError("entry point is not on the locus")
    _require_on_curve(curve, entry, "entry")
    cls = classify_family_point(field, entry, tol)
    if cls.verdict is not Verdict.F_CONICAL:
        raise ExperimentError(f"entry must be F-conical, got {cls.verdict.value}")

    folds = [tp for tp in turning_points(curve, tol) if not tp.degenerate]
    k_entry = _nearest_vertex(curve, entry)
    usable = []
    for tp in folds:
        k_sc = _nearest_vertex(curve, tp.point)
        lo, hi = min(k_entry, k_sc), max(k_entry, k_sc)
        inner = [t for t in folds
                 if lo < _nearest_vertex(curve, t.point) < hi and t is not tp]
        if not inner:
            usable.append(tp)
    if not usable:
        raise ExperimentError("no semi-conical fold adjacent to the entry point")
    sc = min(usable, key=lambda tp: np.linalg.norm(tp.point - entry))
    sc_point = sc.point

    v_entry, v_star = float(entry[1]), float(sc_point[1])
    u_star = float(sc_point[0])
    if abs(v_entry - v_star) < 1e-9:
        raise ExperimentError("entry and fold share the same v coordinate")

    # sample u(v) on the arc; fit u - u* by even-vanishing powers of (v - v*),
    # which encodes the tangency of the projected curve at the fold exactly
    nodes = _chebyshev_nodes(v_star, v_entry, 24)
    u_nodes = np.empty_like(nodes)
    for i, v in enumerate(nodes):
        k = int(np.argmin(np.abs(curve.vertices[:, 1] - v)))
        seed = curve.vertices[k][[0, 2]]
        u_nodes[i], _ = _solve_on_locus_at_v(field, v, seed, tol)
    dv = nodes - v_star
    uscale = max(1.0, float(np.max(np.abs(u_nodes))))
    for deg in range(2, 13):
        a = np.column_stack([dv ** k for k in range(2, deg + 1)])
        coef, *_ = np.linalg.lstsq(a, u_nodes - u_star, rcond=None)
        resid = float(np.max(np.abs(a @ coef - (u_nodes - u_star))))
        if resid <= 1e-11 * uscale:
            break
    else:
        raise ExperimentError("projected arc not representable by a degree-12 "
                              "tangent polynomial at the fold")

    # v(t) = v* + (v_entry - v*) (1 - t);  u(t) = u* + sum_k a_k (v - v*)^k
    dv0 = v_entry - v_star
    v_coeffs = [v_star + dv0, -dv0]
    dpoly = np.polynomial.Polynomial([dv0, -dv0])        # v(t) - v*
    upoly = np.polynomial.Polynomial([u_star])
    for k, ck in enumerate(coef, start=2):
        upoly = upoly + ck * dpoly ** k
    path = ControlPath([PolySegment(0.0, 1.0, tuple(upoly.coef), tuple(v_coeffs))])

    # postcondition: the path lies under the locus (solvable z, small residual)
    worst = 0.0
    seed = entry[[0, 2]]
    for t in np.linspace(0.0, 1.0 - 1e-9, 200):
        uv = path.eval(t)
        u_sol, z_sol = _solve_on_locus_at_v(field, float(uv[1]), seed, tol)
        worst = max(worst, abs(u_sol - float(uv[0])))
        seed = np.array([u_sol, z_sol])
    if worst > residual_target:
        raise ExperimentError(f"synthesized path misses pi(C) by {worst:.2e}")
    if not path.is_regular(floor=1e-9):
        raise ExperimentError("synthesized path is not regular on [0, 1)")
    return CPathExperiment(path=path, z0=float(entry[2]), entry=entry,
                           sc_point=sc_point, max_locus_residual=worst)


# ---------------------------------------------------------------------------
# closed loops through the locus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoopExperiment:
    path: ControlPath
    t0: float
    t1: float
    z0: float
    z1: float
    base: np.ndarray
    min_offlocus_gap: float       # min over off-legs and ensemble z of ||f||


def _hermite_leg(t_a: float, t_b: float, data_a: np.ndarray, data_b: np.ndarray
                 ) -> PolySegment:
    """Degree-9 two-point Hermite segment matching value + 4 derivatives of
    each component at both ends (data_*: (5, 2) arrays, rows = orders 0..4)."""
    span = t_b - t_a
    rows = []
    rhs_u = []
    rhs_v = []
    for side, data in ((0.0, data_a), (1.0, data_b)):
        for order in range(5):
            row = np.zeros(10)
            for p in range(order, 10):
                fall = 1.0
                for q in range(order):
                    fall *= (p - q)
                row[p] = fall * side ** (p - order)   # 0**0 == 1
            rows.append(row)
            rhs_u.append(data[order, 0] * span ** order)
            rhs_v.append(data[order, 1] * span ** order)
    a = np.array(rows)
    cu = np.linalg.solve(a, np.array(rhs_u))
    cv = np.linalg.solve(a, np.array(rhs_v))
    # coefficients are in local s = (t - t_a)/span; convert to absolute t
    su = np.polynomial.Polynomial(cu)(np.polynomial.Polynomial(
        [-t_a / span, 1.0 / span]))
    sv = np.polynomial.Polynomial(cv)(np.polynomial.Polynomial(
        [-t_a / span, 1.0 / span]))
    return PolySegment(t_a, t_b, tuple(su.coef), tuple(sv.coef))


def _derivative_stack(path_seg: PolySegment, t: float) -> np.ndarray:
    out = np.empty((5, 2))
    for order in range(5):
        uu, vv = path_seg.eval(np.array([t]), order)
        out[order] = (uu[0], vv[0])
    return out


def synthesize_loop_path(field: ControlField, curve: LocusCurve, entry, exit_,
                         base, t0: float = 0.3, t1: float = 0.7,
                         tol: Tolerances = DEFAULT_TOL,
                         approach_speed: float = 2.0,
                         junction_buffer: float = 0.04) -> LoopExperiment:
    """Closed C^4 loop: base -> entry (t0) -> locus arc -> exit (t1) -> base.

    The on-locus arc is the projected curve between two F-conical points,
    parametrized affinely in v; the off-locus legs are degree-9 Hermite
    segments matching four derivatives at the junctions (so the loop is C^4
    and meets the curve tangentially from outside).  Verified afterwards:
    legs keep a positive distance from every ensemble intersection (sampled
    min over z in [z0, z1] of ||f|| outside small junction buffers) and every
    ensemble z has a crossing inside [t0, t1].
    """
    entry_in = np.asarray(entry, dtype=float)
    exit_in = np.asarray(exit_, dtype=float)
    entry = find_intersection(field, entry_in, tol)
    exit_ = find_intersection(field, exit_in, tol)
    base = np.asarray(base, dtype=float)
    if np.linalg.norm(entry - entry_in) > 1e-3 or np.linalg.norm(exit_ - exit_in) > 1e-3:
        raise ExperimentError("entry/exit points are not on the locus")
    for pt, label in ((entry, "entry"), (exit_, "exit")):
        _require_on_curve(curve, pt, label)
        cls = classify_family_point(field, pt, tol)
        if cls.verdict is not Verdict.F_CONICAL:
            raise ExperimentError(f"{label} must be F-conical, got {cls.verdict.value}")
    z0, z1 = float(entry[2]), float(exit_[2])
    if not z0 < z1:
        raise ExperimentError("need z(entry) < z(exit)")

    # base must be off the projected curve
    proj = curve.vertices[:, :2]
    base_dist = float(np.min(np.linalg.norm(proj - base[None, :], axis=1)))
    if base_dist < 10.0 * curve.step:
        raise ExperimentError("base point lies on the projected locus")

    # on-locus arc as a graph u = g(v)
    v_a, v_b = float(entry[1]), float(exit_[1])
    if abs(v_a - v_b) < 1e-9:
        raise ExperimentError("entry and exit share the same v coordinate")
    nodes = _chebyshev_nodes(min(v_a, v_b), max(v_a, v_b), 24)
    u_nodes = np.empty_like(nodes)
    for i, v in enumerate(nodes):
        k = int(np.argmin(np.abs(curve.vertices[:, 1] - v)))
        u_nodes[i], _ = _solve_on_locus_at_v(field, v, curve.vertices[k][[0, 2]], tol)
    g_coeffs = _fit_poly_graph(nodes, u_nodes, 12,
                               1e-10 * max(1.0, np.max(np.abs(u_nodes))))
    gpoly = np.polynomial.Polynomial(list(g_coeffs))

    span = t1 - t0
    v_loc = np.polynomial.Polynomial([v_a - (v_b - v_a) * t0 / span,
                                      (v_b - v_a) / span])
    u_loc = gpoly(v_loc)
    arc = PolySegment(t0, t1, tuple(u_loc.coef), tuple(v_loc.coef))

    # off-locus Hermite legs
    d_entry = _derivative_stack(arc, t0)
    d_exit = _derivative_stack(arc, t1)
    leg_speed = approach_speed * float(np.linalg.norm(d_entry[0] - base))
    dir_in = (d_entry[0] - base)
    dir_in = dir_in / np.linalg.norm(dir_in)
    data_base_out = np.zeros((5, 2))
    data_base_out[0] = base
    data_base_out[1] = leg_speed * dir_in
    leg_in = _hermite_leg(0.0, t0, data_base_out, d_entry)

    dir_back = (base - d_exit[0])
    dir_back = dir_back / np.linalg.norm(dir_back)
    data_base_in = np.zeros((5, 2))
    data_base_in[0] = base
    data_base_in[1] = approach_speed * float(np.linalg.norm(base - d_exit[0])) * dir_back
    leg_out = _hermite_leg(t1, 1.0, d_exit, data_base_in)

    path = ControlPath([leg_in, arc, leg_out])
    if not path.is_regular(floor=1e-6):
        raise ExperimentError("loop path is not regular; adjust approach_speed")

    # -- verification ---------------------------------------------------------
    z_samples = np.linspace(z0, z1, 33)
    min_gap = np.inf
    for t in np.concatenate([np.linspace(0.0, t0 - junction_buffer, 40),
                             np.linspace(t1 + junction_buffer, 1.0, 40)]):
        uv = path.eval(t)
        fv = field.evaluate_batch(
            np.column_stack([np.full(33, uv[0]), np.full(33, uv[1]), z_samples]))
        min_gap = min(min_gap, float(np.min(np.hypot(fv[:, 0], fv[:, 1]))))
    if min_gap < 1e-4:
        raise ExperimentError(
            f"off-locus legs approach the singular set (min ||f|| = {min_gap:.2e})")

    # every ensemble z crosses on the arc
    t_arc = np.linspace(t0, t1, 2001)
    uv_arc = path.eval(t_arc)
    for z in np.linspace(z0, z1, 17):
        fv = field.evaluate_batch(
            np.column_stack([uv_arc, np.full(len(t_arc), z)]))
        if float(np.min(np.hypot(fv[:, 0], fv[:, 1]))) > 1e-3:
            raise ExperimentError(f"parameter z={z} never crosses on the arc")
    return LoopExperiment(path=path, t0=t0, t1=t1, z0=z0, z1=z1, base=base,
                          min_offlocus_gap=float(min_gap))


# ---------------------------------------------------------------------------
# eigenvectors at path endpoints (with boundary-crossing limit convention)
# ---------------------------------------------------------------------------

def eigenvector_at(field: ControlField, path: ControlPath, z: float | None,
                   t: float, branch: int, limit_delta: float = 1e-7) -> np.ndarray:
    """Eigenvector of H_f at the path point; at a degenerate endpoint the
    one-sided limit is taken by stepping `limit_delta` into the interior."""
    def ham(tt: float) -> TwoLevelHamiltonian:
        uv = path.eval(tt)
        x = uv if field.arity == 2 else np.array([uv[0], uv[1], z])
        return field.hamiltonian(x)

    h = ham(t)
    if h.lam_plus < 1e-7:
        # one-sided limit: step inward until the gap clears the endpoint's
        # own residual (synthesized paths meet the locus only to ~1e-12, so
        # the on-point value is noise); quadratic closings need a larger
        # offset than conical ones, and the direction converges as the
        # offset shrinks, so take the smallest workable one.
        floor = 50.0 * h.lam_plus + 1e-9
        delta = limit_delta
        sign = 1.0 if t < 0.5 else -1.0
        while delta <= 1e-2:
            h = ham(t + sign * delta)
            if h.lam_plus > floor:
                break
            delta *= 4.0
        else:
            raise ExperimentError(f"degenerate eigenvector limit at t={t}")
    return eigenpair_closed_form(h, branch).phi


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferResult:
    z_grid: np.ndarray
    eps_grid: np.ndarray
    T: np.ndarray                 # (n_eps, n_z)
    status: list                  # per-eps row: "ok" or "failed: ..."
    metadata: dict = dc_field(default_factory=dict)

    def defects(self, transfer_mask) -> np.ndarray:
        """1 - T where transfer is expected, T where blocking is expected."""
        mask = np.asarray(transfer_mask, dtype=bool)
        return np.where(mask[None, :], 1.0 - self.T, self.T)

    # -- deterministic emission -----------------------------------------------

    def to_csv(self, path: str, transfer_mask=None) -> None:
        mask = (np.zeros(len(self.z_grid), dtype=bool)
                if transfer_mask is None else np.asarray(transfer_mask, dtype=bool))
        d = self.defects(mask)
        lines = ["z,eps,T,defect,status"]
        for iz, z in enumerate(self.z_grid):
            for ie, eps in enumerate(self.eps_grid):
                lines.append(f"{z!r},{eps!r},{self.T[ie, iz]!r},"
                             f"{d[ie, iz]!r},{self.status[ie]}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json(self, path: str, extra: dict | None = None) -> None:
        payload = {
            "z_grid": [repr(float(z)) for z in self.z_grid],
            "eps_grid": [repr(float(e)) for e in self.eps_grid],
            "T": [[repr(float(x)) for x in row] for row in self.T],
            "status": list(self.status),
            "metadata": self.metadata,
        }
        if extra:
            payload.update(extra)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")

    def to_dat(self, path: str) -> None:
        """gnuplot-friendly blocks: one block per eps, rows z T."""
        chunks = []
        for ie, eps in enumerate(self.eps_grid):
            rows = [f"# eps = {eps!r}"]
            rows += [f"{self.z_grid[iz]!r} {self.T[ie, iz]!r}"
                     for iz in range(len(self.z_grid))]
            chunks.append("\n".join(rows))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n\n".join(chunks) + "\n")


def _run_id(meta: dict) -> str:
    blob = json.dumps(meta, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def ensemble_sweep(field: ControlField, path: ControlPath, z_grid, eps_grid,
                   tol: Tolerances = DEFAULT_TOL, n_min: int = 2000,
                   metadata: dict | None = None) -> TransferResult:
    """Fill T_eps(z) for a parametrized field along one control path.

    Initial states are phi_minus^z at the path start (one-sided limit at a
    degenerate endpoint, the convention for the boundary parameter whose
    intersection sits exactly at the start); targets are phi_plus^z at the
    end, with the mirrored limit convention.  Rows that fail to propagate
    are recorded with the failure reason; the sweep continues.
    """
    if field.arity != 3:
        raise FieldError("ensemble_sweep expects an arity-3 field")
    z_grid = np.asarray(sorted(float(z) for z in z_grid))
    eps_grid = np.asarray(sorted(float(e) for e in eps_grid))
    nz = len(z_grid)
    psi0 = np.empty((nz, 2), dtype=complex)
    targets = np.empty((nz, 2))
    for iz, z in enumerate(z_grid):
        psi0[iz] = eigenvector_at(field, path, z, 0.0, -1)
        targets[iz] = eigenvector_at(field, path, z, 1.0, +1)

    T = np.full((len(eps_grid), nz), np.nan)
    status: list[str] = []
    for ie, eps in enumerate(eps_grid):
        try:
            res = propagate_ensemble(field, path, z_grid, eps, psi0, tol, n_min)
            overlaps = np.abs(np.einsum("ij,ij->i", res.psi.conj(), targets.astype(complex)))
            T[ie] = overlaps
            status.append("ok")
        except Exception as exc:  # per-row failure is data, not a crash
            status.append(f"failed: {exc}")
    meta = dict(metadata or {})
    meta.update({
        "field": field.to_dict() if hasattr(field, "to_dict") else repr(field),
        "path": path.to_dict(),
        "z_grid": [repr(float(z)) for z in z_grid],
        "eps_grid": [repr(float(e)) for e in eps_grid],
        "tolerances": {"zero": tol.zero, "rank": tol.rank, "theta_max": tol.theta_max},
    })
    meta["run_id"] = _run_id(meta)
    return TransferResult(z_grid=z_grid, eps_grid=eps_grid, T=T,
                          status=status, metadata=meta)


def single_system_defects(field: ControlField, path: ControlPath, eps_grid,
                          mode: str, z: float | None = None,
                          tol: Tolerances = DEFAULT_TOL, n_min: int = 2000
                          ) -> np.ndarray:
    """Adiabatic defect of one system against the eps grid.

    mode 'gapped' / 'nonconical': start phi_minus, defect = |<psi, phi_plus(end)>|
    (the branch does not relabel).  mode 'conical': the smooth branch
    relabels at the crossing, so the defect is |<psi, phi_minus(end)>|.
    """
    from .propagate import propagate_2level

    if mode not in ("gapped", "conical", "nonconical"):
        raise ValueError(f"unknown mode {mode!r}")
    eps_grid = np.asarray(sorted(float(e) for e in eps_grid))
    psi0 = eigenvector_at(field, path, z, 0.0, -1)
    target_branch = -1 if mode == "conical" else +1
    target = eigenvector_at(field, path, z, 1.0, target_branch)
    out = np.empty(len(eps_grid))
    for ie, eps in enumerate(eps_grid):
        res = propagate_2level(field, path, z, eps, psi0.astype(complex), tol, n_min)
        out[ie] = abs(np.vdot(target.astype(complex), res.psi))
    return out


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    constant: float              # sup defect / eps^slope over the grid
    floored: int                 # number of points clamped at the floor
    eps_grid: np.ndarray
    defects: np.ndarray


def fit_rate(defects, eps_grid, floor: float = 1e-12) -> RateFit:
    """Log-log least-squares fit of defects against eps.

    Needs >= 6 points over >= 2 decades; defects are floored at `floor`
    (with a count); all-floored data is an error, not a fit.
    """
    eps_grid = np.asarray(sorted(float(e) for e in eps_grid))
    defects = np.asarray(defects, dtype=float)
    if defects.shape != eps_grid.shape:
        raise ExperimentError("defects and eps grid must align")
    if len(eps_grid) < 6 or eps_grid[-1] / eps_grid[0] < 99.0:
        raise ExperimentError("eps grid must span >= 2 decades with >= 6 points")
    floored = int(np.sum(defects < floor))
    if floored == len(defects):
        raise ExperimentError("all defects at the floor; rate is unmeasurable")
    d = np.maximum(defects, floor)
    slope, intercept = np.polyfit(np.log(eps_grid), np.log(d), 1)
    constant = float(np.max(d / eps_grid ** slope))
    return RateFit(slope=float(slope), intercept=float(intercept),
                   constant=constant, floored=floored,
                   eps_grid=eps_grid, defects=defects)


def max_over_z_fit(result: TransferResult, transfer_mask, z_select=None,
                   floor: float = 1e-12) -> RateFit:
    """Uniform (max over selected z) defect rate fit."""
    d = result.defects(transfer_mask)
    cols = np.ones(len(result.z_grid), dtype=bool) if z_select is None \
        else np.asarray(z_select, dtype=bool)
    worst = np.max(d[:, cols], axis=1)
    return fit_rate(worst, result.eps_grid, floor)
