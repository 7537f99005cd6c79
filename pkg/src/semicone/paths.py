"""Control paths t in [0,1] -> (u(t), v(t)) with exact derivative queries.

Paths are stored as piecewise coefficient data -- polynomial segments (power
basis in t) and harmonic segments (offset + amplitude * cos(omega t + phase)
per component).  Derivatives up to any order are analytic, which the limit
eigenvector formulas (they consume u', u'', v') and the path synthesizers
rely on.  Everything is JSON round-trippable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class PolySegment:
    t0: float
    t1: float
    u: tuple[float, ...]          # power-basis coefficients in t (absolute time)
    v: tuple[float, ...]

    def _eval(self, coeffs, t, order):
        c = np.polynomial.polynomial.polyder(coeffs, order) if order else np.asarray(coeffs)
        return np.polynomial.polynomial.polyval(t, c)

    def eval(self, t, order: int = 0):
        return (self._eval(self.u, t, order), self._eval(self.v, t, order))

    def to_dict(self):
        return {"kind": "poly", "t0": self.t0, "t1": self.t1,
                "u": list(self.u), "v": list(self.v)}


@dataclass(frozen=True)
class TrigSegment:
    t0: float
    t1: float
    u: tuple[float, float, float, float]   # offset, amplitude, omega, phase
    v: tuple[float, float, float, float]

    def _eval(self, p, t, order):
        off, amp, om, ph = p
        t = np.asarray(t, dtype=float)
        arg = om * t + ph
        val = amp * (om ** order) * np.cos(arg + order * np.pi / 2.0)
        if order == 0:
            val = val + off
        return val

    def eval(self, t, order: int = 0):
        return (self._eval(self.u, t, order), self._eval(self.v, t, order))

    def to_dict(self):
        return {"kind": "trig", "t0": self.t0, "t1": self.t1,
                "u": list(self.u), "v": list(self.v)}


class ControlPath:
    """Piecewise path on [0, 1]; segments must tile the interval in order."""

    def __init__(self, segments):
        if not segments:
            raise PathError("empty path")
        segs = sorted(segments, key=lambda s: s.t0)
        if abs(segs[0].t0) > 1e-12 or abs(segs[-1].t1 - 1.0) > 1e-12:
            raise PathError("path segments must cover [0, 1]")
        for a, b in zip(segs, segs[1:]):
            if abs(a.t1 - b.t0) > 1e-12:
                raise PathError(f"segment gap between t={a.t1} and t={b.t0}")
        self.segments = tuple(segs)
        self._breaks = np.array([s.t0 for s in segs] + [1.0])

    # -- evaluation -------------------------------------------------------------

    def _locate(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._breaks, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def eval(self, t, order: int = 0) -> np.ndarray:
        """(N,) or scalar times -> (N, 2) or (2,) derivative of given order."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t_arr.shape[0], 2))
        idx = self._locate(t_arr)
        for k, seg in enumerate(self.segments):
            m = idx == k
            if np.any(m):
                uu, vv = seg.eval(t_arr[m], order)
                out[m, 0] = uu
                out[m, 1] = vv
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out

    def velocity(self, t) -> np.ndarray:
        return self.eval(t, order=1)

    def acceleration(self, t) -> np.ndarray:
        return self.eval(t, order=2)

    def is_regular(self, n: int = 2048, floor: float = 1e-9) -> bool:
        t = np.linspace(0.0, 1.0, n)
        speed = np.linalg.norm(self.eval(t, 1), axis=1)
        return bool(np.min(speed) > floor)

    def restrict(self, a: float, b: float) -> "ControlPath":
        """Sub-path on [a, b], re-parametrized affinely to [0, 1].

        Polynomial segments stay polynomial; harmonic segments stay harmonic.
        """
        if not (0.0 <= a < b <= 1.0):
            raise PathError("need 0 <= a < b <= 1")
        span = b - a
        segs = []
        for s in self.segments:
            lo, hi = max(s.t0, a), min(s.t1, b)
            if hi - lo <= 1e-14:
                continue
            nt0, nt1 = (lo - a) / span, (hi - a) / span
            if isinstance(s, PolySegment):
                # t = a + span * tau substituted into the power basis
                cu = _affine_substitute(s.u, a, span)
                cv = _affine_substitute(s.v, a, span)
                segs.append(PolySegment(nt0, nt1, tuple(cu), tuple(cv)))
            else:
                nu = (s.u[0], s.u[1], s.u[2] * span, s.u[3] + s.u[2] * a)
                nv = (s.v[0], s.v[1], s.v[2] * span, s.v[3] + s.v[2] * a)
                segs.append(TrigSegment(nt0, nt1, nu, nv))
        # guard against rounding at the cover check
        first, last = segs[0], segs[-1]
        segs[0] = _with_bounds(first, 0.0, first.t1)
        segs[-1] = _with_bounds(last, last.t0, 1.0)
        return ControlPath(segs)

    # -- constructors -----------------------------------------------------------

    @classmethod
    def from_polynomials(cls, u_coeffs, v_coeffs) -> "ControlPath":
        return cls([PolySegment(0.0, 1.0, tuple(map(float, u_coeffs)),
                                tuple(map(float, v_coeffs)))])

    @classmethod
    def line(cls, p0, p1) -> "ControlPath":
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        return cls.from_polynomials([p0[0], p1[0] - p0[0]], [p0[1], p1[1] - p0[1]])

    @classmethod
    def circle(cls, radius: float = 1.0, center=(0.0, 0.0), turns: float = 1.0,
               phase: float = 0.0) -> "ControlPath":
        om = 2.0 * math.pi * turns
        cu = (float(center[0]), float(radius), om, phase)
        cv = (float(center[1]), float(radius), om, phase - math.pi / 2.0)
        return cls([TrigSegment(0.0, 1.0, cu, cv)])

    # -- serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, data: dict) -> "ControlPath":
        segs = []
        for i, sd in enumerate(data.get("segments", [])):
            kind = sd.get("kind", "poly")
            try:
                if kind == "poly":
                    segs.append(PolySegment(float(sd["t0"]), float(sd["t1"]),
                                            tuple(map(float, sd["u"])),
                                            tuple(map(float, sd["v"]))))
                elif kind == "trig":
                    segs.append(TrigSegment(float(sd["t0"]), float(sd["t1"]),
                                            tuple(map(float, sd["u"])),
                                            tuple(map(float, sd["v"]))))
                else:
                    raise PathError(f"segment {i + 1}: unknown kind {kind!r}")
            except (KeyError, TypeError, ValueError) as exc:
                raise PathError(f"segment {i + 1}: malformed ({exc})") from exc
        return cls(segs)


def _affine_substitute(coeffs, a: float, span: float) -> list[float]:
    """Coefficients of p(a + span * tau) given power-basis coefficients of p."""
    poly = np.polynomial.Polynomial(list(coeffs))
    shifted = poly(np.polynomial.Polynomial([a, span]))
    return list(shifted.coef)


def _with_bounds(seg, t0, t1):
    if isinstance(seg, PolySegment):
        return PolySegment(t0, t1, seg.u, seg.v)
    return TrigSegment(t0, t1, seg.u, seg.v)


def load_path(path: str) -> ControlPath:
    with open(path, "r", encoding="utf-8") as fh:
        return ControlPath.from_dict(json.load(fh))
