"""Control fields f = (f1, f2) as exact multivariate polynomials.

A field maps the controls (u, v) -- plus an optional family parameter z --
to the two entries of the symmetric zero-trace Hamiltonian

    H(x) = [[f1(x), f2(x)], [f2(x), -f1(x)]].

Everything downstream (classification, locus tracing, branch tracking)
consumes derivatives of f, so fields are stored as coefficient lists and
differentiated term by term; no finite differences, no autodiff.  Smooth
non-polynomial model data (the cofactors h, h1, h2 and the slope function m
of the built-in normal forms) enter as truncated polynomials, which is
lossless for every test here because only low-order jets matter.

Degree is capped at MAX_DEGREE per variable on user input to bound
evaluation cost; internally derived polynomials (e.g. Jacobian minors) may
exceed the cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_DEGREE = 16


class FieldError(ValueError):
    """Invalid field definition or query."""


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

class Polynomial:
    """Real polynomial in `arity` variables, stored as {exponents: coeff}."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms: Mapping[tuple, float] | Iterable | None = None):
        if arity not in (1, 2, 3):
            raise FieldError(f"unsupported arity {arity}")
        self.arity = arity
        clean: dict[tuple, float] = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for exps, c in items:
                exps = tuple(int(e) for e in exps)
                if len(exps) != arity or any(e < 0 for e in exps):
                    raise FieldError(f"bad exponent tuple {exps} for arity {arity}")
                c = float(c)
                if c != 0.0:
                    clean[exps] = clean.get(exps, 0.0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    # -- construction helpers ------------------------------------------------

    @classmethod
    def zero(cls, arity: int) -> "Polynomial":
        return cls(arity, {})

    @classmethod
    def constant(cls, arity: int, c: float) -> "Polynomial":
        return cls(arity, {(0,) * arity: c})

    @classmethod
    def variable(cls, arity: int, i: int) -> "Polynomial":
        e = [0] * arity
        e[i] = 1
        return cls(arity, {tuple(e): 1.0})

    @classmethod
    def univariate(cls, arity: int, i: int, coeffs: Sequence[float]) -> "Polynomial":
        """sum_k coeffs[k] * x_i^k embedded in `arity` variables."""
        terms = {}
        for k, c in enumerate(coeffs):
            e = [0] * arity
            e[i] = k
            terms[tuple(e)] = float(c)
        return cls(arity, terms)

    # -- algebra ---------------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0.0) + c
        return Polynomial(self.arity, t)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0.0) - c
        return Polynomial(self.arity, t)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.arity, {e: -c for e, c in self.terms.items()})

    def scale(self, a: float) -> "Polynomial":
        return Polynomial(self.arity, {e: a * c for e, c in self.terms.items()})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        t: dict[tuple, float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0.0) + c1 * c2
        return Polynomial(self.arity, t)

    def partial(self, i: int) -> "Polynomial":
        t = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                e2 = list(e)
                e2[i] -= 1
                t[tuple(e2)] = t.get(tuple(e2), 0.0) + c * e[i]
        return Polynomial(self.arity, t)

    def partial_multi(self, multi_index: Sequence[int]) -> "Polynomial":
        p = self
        for i, k in enumerate(multi_index):
            for _ in range(int(k)):
                p = p.partial(i)
        return p

    def compose_linear(self, matrix: np.ndarray) -> "Polynomial":
        """Substitute x -> M x (exact; used by rotation/scaling equivalences)."""
        m = np.asarray(matrix, dtype=float)
        if m.shape != (self.arity, self.arity):
            raise FieldError(f"substitution matrix must be {self.arity}x{self.arity}")
        xs = [Polynomial(self.arity, {})
              for _ in range(self.arity)]
        for i in range(self.arity):
            t = {}
            for j in range(self.arity):
                if m[i, j] != 0.0:
                    e = [0] * self.arity
                    e[j] = 1
                    t[tuple(e)] = m[i, j]
            xs[i] = Polynomial(self.arity, t)
        out = Polynomial.zero(self.arity)
        one = Polynomial.constant(self.arity, 1.0)
        for e, c in self.terms.items():
            mono = one
            for i, k in enumerate(e):
                for _ in range(k):
                    mono = mono * xs[i]
            out = out + mono.scale(c)
        return out

    # -- evaluation -------------------------------------------------------------

    def __call__(self, x) -> float | np.ndarray:
        """Evaluate at a point (arity,) or a batch (N, arity)."""
        x = np.asarray(x, dtype=float)
        batched = x.ndim == 2
        if (batched and x.shape[1] != self.arity) or (not batched and x.shape != (self.arity,)):
            raise FieldError(f"point shape {x.shape} does not match arity {self.arity}")
        acc = np.zeros(x.shape[0]) if batched else 0.0
        cols = x.T if batched else x
        for e, c in self.terms.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    term = term * cols[i] ** k
            acc = acc + term
        return acc

    def max_degree(self) -> int:
        return max((max(e) for e in self.terms), default=0)

    def degree_cap_check(self) -> None:
        if self.max_degree() > MAX_DEGREE:
            raise FieldError(f"degree {self.max_degree()} exceeds cap {MAX_DEGREE}")

    def __repr__(self) -> str:
        return f"Polynomial(arity={self.arity}, terms={self.terms!r})"


# ---------------------------------------------------------------------------
# two-level Hamiltonian values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoLevelHamiltonian:
    """Value H = [[f1, f2], [f2, -f1]]; symmetric, trace zero by shape."""

    f1: float
    f2: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.f1, self.f2], [self.f2, -self.f1]])

    @property
    def lam_plus(self) -> float:
        return float(np.hypot(self.f1, self.f2))

    @property
    def gap(self) -> float:
        return 2.0 * self.lam_plus

    def eigenvalues(self) -> tuple[float, float]:
        lp = self.lam_plus
        return (-lp, lp)


# ---------------------------------------------------------------------------
# control fields
# ---------------------------------------------------------------------------

class ControlField:
    """Pair of exact polynomials (f1, f2) in (u, v) or (u, v, z).

    Immutable after construction; all queries are pure.  Derivatives up to
    order 3 are served analytically.  The Jacobian-minor polynomials
    chi_ij(f) = det [[d_i f1, d_j f1], [d_i f2, d_j f2]] are built once on
    demand and cached.
    """

    def __init__(self, f1: Polynomial, f2: Polynomial,
                 builtin: str | None = None, params: dict | None = None):
        if f1.arity != f2.arity:
            raise FieldError("component arities differ")
        if f1.arity not in (2, 3):
            raise FieldError("control fields have arity 2 or 3")
        f1.degree_cap_check()
        f2.degree_cap_check()
        self._f = (f1, f2)
        self.arity = f1.arity
        self.builtin = builtin
        self.params = dict(params) if params else {}
        self._chi_cache: dict[tuple[int, int], tuple[Polynomial, list[Polynomial]]] = {}

    @property
    def components(self) -> tuple[Polynomial, Polynomial]:
        return self._f

    # -- evaluation and derivatives -------------------------------------------

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.arity,):
            raise FieldError(f"point of dimension {x.shape} for field of arity {self.arity}")
        return x

    def evaluate(self, x) -> np.ndarray:
        x = self._check_point(x)
        return np.array([self._f[0](x), self._f[1](x)])

    def evaluate_batch(self, pts: np.ndarray) -> np.ndarray:
        """(N, arity) -> (N, 2)."""
        pts = np.asarray(pts, dtype=float)
        return np.column_stack([self._f[0](pts), self._f[1](pts)])

    def partial(self, x, multi_index: Sequence[int]) -> np.ndarray:
        x = self._check_point(x)
        mi = tuple(int(k) for k in multi_index)
        if len(mi) == 3 and self.arity == 2 and mi[2] == 0:
            mi = mi[:2]
        if len(mi) != self.arity:
            raise FieldError("multi-index length must equal arity")
        if sum(mi) > 3:
            raise FieldError(f"derivative order {sum(mi)} > 3 not supported")
        return np.array([self._f[0].partial_multi(mi)(x),
                         self._f[1].partial_multi(mi)(x)])

    def jacobian(self, x) -> np.ndarray:
        """(2, arity) matrix of first partials at x."""
        x = self._check_point(x)
        return np.array([[self._f[0].partial(i)(x) for i in range(self.arity)],
                         [self._f[1].partial(i)(x) for i in range(self.arity)]])

    def gradient(self, x, component: int) -> np.ndarray:
        x = self._check_point(x)
        return np.array([self._f[component].partial(i)(x) for i in range(self.arity)])

    # -- Jacobian minors -------------------------------------------------------

    def _chi_data(self, i: int, j: int) -> tuple[Polynomial, list[Polynomial]]:
        key = (i, j)
        if key not in self._chi_cache:
            f1, f2 = self._f
            chi = f1.partial(i) * f2.partial(j) - f1.partial(j) * f2.partial(i)
            grads = [chi.partial(k) for k in range(self.arity)]
            self._chi_cache[key] = (chi, grads)
        return self._chi_cache[key]

    def chi(self, x, axes: tuple[int, int] = (1, 2)) -> float:
        """Jacobian minor chi_ij(f)(x); axes are 1-based as in chi_12."""
        x = self._check_point(x)
        i, j = axes
        if i == j or not (1 <= i <= self.arity) or not (1 <= j <= self.arity):
            raise FieldError(f"invalid chi axes {axes} for arity {self.arity}")
        if i < j:
            return float(self._chi_data(i - 1, j - 1)[0](x))
        return -float(self._chi_data(j - 1, i - 1)[0](x))

    def chi_gradient(self, x, axes: tuple[int, int] = (1, 2)) -> np.ndarray:
        x = self._check_point(x)
        i, j = axes
        if i == j or not (1 <= i <= self.arity) or not (1 <= j <= self.arity):
            raise FieldError(f"invalid chi axes {axes} for arity {self.arity}")
        sign = 1.0
        if i > j:
            i, j = j, i
            sign = -1.0
        grads = self._chi_data(i - 1, j - 1)[1]
        return sign * np.array([g(x) for g in grads])

    def directional_chi(self, x, direction) -> float:
        """Directional derivative of chi_12(f) at x along `direction`."""
        d = np.asarray(direction, dtype=float)
        if d.shape != (self.arity,):
            raise FieldError("direction dimension must equal arity")
        nd = np.linalg.norm(d)
        if nd == 0.0:
            raise FieldError("zero direction")
        return float(self.chi_gradient(x, (1, 2)) @ d)

    # -- Hamiltonian assembly --------------------------------------------------

    def hamiltonian(self, x) -> TwoLevelHamiltonian:
        f = self.evaluate(x)
        return TwoLevelHamiltonian(float(f[0]), float(f[1]))

    def frozen_z(self, z: float) -> "ControlField":
        """Restrict an arity-3 field to the slice z = const (arity-2 field)."""
        if self.arity != 3:
            raise FieldError("frozen_z applies to arity-3 fields")
        out = []
        for comp in self._f:
            t: dict[tuple, float] = {}
            for (a, b, c), coef in comp.terms.items():
                key = (a, b)
                t[key] = t.get(key, 0.0) + coef * z ** c
            out.append(Polynomial(2, t))
        return ControlField(out[0], out[1])

    def to_dict(self) -> dict:
        return {
            "arity": self.arity,
            "components": [
                [{"c": c, "e": list(e)} for e, c in sorted(comp.terms.items())]
                for comp in self._f
            ],
        }

    def __repr__(self) -> str:
        tag = f" builtin={self.builtin!r}" if self.builtin else ""
        return f"ControlField(arity={self.arity}{tag})"


def assemble(field: ControlField, x) -> TwoLevelHamiltonian:
    """H_f(x) as a TwoLevelHamiltonian value."""
    return field.hamiltonian(x)


# ---------------------------------------------------------------------------
# n-level maps
# ---------------------------------------------------------------------------

class NLevelHamiltonianMap:
    """Symmetric n x n matrix of polynomials in (u, v) or (u, v, z)."""

    def __init__(self, entries: Sequence[Sequence[Polynomial]],
                 builtin: str | None = None, params: dict | None = None):
        n = len(entries)
        if n < 2 or n > 16:
            raise FieldError("supported dimensions: 2..16")
        arity = entries[0][0].arity
        for i in range(n):
            if len(entries[i]) != n:
                raise FieldError("entry matrix must be square")
            for j in range(n):
                if entries[i][j].arity != arity:
                    raise FieldError("mixed arity entries")
                if entries[i][j].terms != entries[j][i].terms:
                    raise FieldError("entry polynomials must be symmetric")
        self.n = n
        self.arity = arity
        self.entries = [list(row) for row in entries]
        self.builtin = builtin
        self.params = dict(params) if params else {}

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.arity,):
            raise FieldError(f"point of dimension {x.shape} for map of arity {self.arity}")
        h = np.empty((self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                h[i, j] = h[j, i] = self.entries[i][j](x)
        return h

    def evaluate_batch(self, pts: np.ndarray) -> np.ndarray:
        """(N, arity) -> (N, n, n)."""
        pts = np.asarray(pts, dtype=float)
        out = np.empty((pts.shape[0], self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                vals = self.entries[i][j](pts)
                out[:, i, j] = vals
                out[:, j, i] = vals
        return out

    def __repr__(self) -> str:
        return f"NLevelHamiltonianMap(n={self.n}, arity={self.arity})"


# ---------------------------------------------------------------------------
# built-in fields
# ---------------------------------------------------------------------------

def _as_coeffs(value, default) -> list[float]:
    if value is None:
        return list(default)
    return [float(c) for c in value]


def builtin(name: str, **params) -> ControlField | NLevelHamiltonianMap:
    """Construct a named model field.

    CONICAL_NF            f = (u, v)
    SEMICONICAL_NF        f = (h(u) u, u + v^2),          h(0) = 1
    F_CONICAL_NF          f = (h1 (z - u), h2 (z - v)),   h1(0) = h2(0) = 1
    F_SEMICONICAL_NF      f = (h1 (z - m(u) u), h2 (z + u + v^2)),
                          m(0) = m0 not in {-1, 0}
    CROSSING_DEMO         locus is the nodal cubic (z^2 - c, z^3 - c z, z);
                          f = (u - z^2 + c, v - z^3 + c z), c > 0
    STIRAP                3x3 map [[E, u, 0], [u, E, v], [0, v, E' + z]]

    h, m, h1, h2 are passed as polynomial coefficient lists (low order
    first) in the variable indicated above (h, m univariate in u; h1, h2 in
    (u, v, z) are accepted as univariate coefficient lists in u, v, z via
    h1_u/h1_v/h1_z style keys or a flat list meaning powers of u).
    """
    name = name.upper()
    if name == "CONICAL_NF":
        u = Polynomial.variable(2, 0)
        v = Polynomial.variable(2, 1)
        return ControlField(u, v, builtin=name, params=params)

    if name == "SEMICONICAL_NF":
        h = _as_coeffs(params.get("h"), [1.0])
        if abs(h[0] - 1.0) > 1e-12:
            raise FieldError("SEMICONICAL_NF requires h(0) = 1")
        u = Polynomial.variable(2, 0)
        v = Polynomial.variable(2, 1)
        hu = Polynomial.univariate(2, 0, h)
        f1 = hu * u
        f2 = u + v * v
        return ControlField(f1, f2, builtin=name, params={"h": h})

    if name == "F_CONICAL_NF":
        h1 = _mixed_cofactor(params, "h1")
        h2 = _mixed_cofactor(params, "h2")
        u = Polynomial.variable(3, 0)
        v = Polynomial.variable(3, 1)
        z = Polynomial.variable(3, 2)
        return ControlField(h1 * (z - u), h2 * (z - v), builtin=name, params=params)

    if name == "F_SEMICONICAL_NF":
        m0 = params.get("m0", 1.0)
        m = _as_coeffs(params.get("m"), [float(m0)])
        if abs(m[0]) < 1e-9 or abs(m[0] + 1.0) < 1e-9:
            raise FieldError("F_SEMICONICAL_NF requires m(0) not in {-1, 0}")
        h1 = _mixed_cofactor(params, "h1")
        h2 = _mixed_cofactor(params, "h2")
        u = Polynomial.variable(3, 0)
        v = Polynomial.variable(3, 1)
        z = Polynomial.variable(3, 2)
        mu = Polynomial.univariate(3, 0, m)
        f1 = h1 * (z - mu * u)
        f2 = h2 * (z + u + v * v)
        rest = {k: v for k, v in params.items() if k not in ("m0", "m")}
        return ControlField(f1, f2, builtin=name, params={"m": m, **rest})

    if name == "CROSSING_DEMO":
        c = float(params.get("c", 0.25))
        if c <= 0.0:
            raise FieldError("CROSSING_DEMO requires c > 0")
        u = Polynomial.variable(3, 0)
        v = Polynomial.variable(3, 1)
        z = Polynomial.variable(3, 2)
        cc = Polynomial.constant(3, c)
        f1 = u - z * z + cc
        f2 = v - z * z * z + z.scale(c)
        return ControlField(f1, f2, builtin=name, params={"c": c})

    if name == "STIRAP":
        e0 = float(params.get("E", 0.0))
        e1 = float(params.get("Eprime", params.get("E_prime", 1.0)))
        if not e0 < e1:
            raise FieldError("STIRAP requires E < E'")
        u = Polynomial.variable(3, 0)
        v = Polynomial.variable(3, 1)
        z = Polynomial.variable(3, 2)
        ce0 = Polynomial.constant(3, e0)
        zero = Polynomial.zero(3)
        rows = [
            [ce0, u, zero],
            [u, ce0, v],
            [zero, v, Polynomial.constant(3, e1) + z],
        ]
        return NLevelHamiltonianMap(rows, builtin=name, params={"E": e0, "Eprime": e1})

    raise FieldError(f"unknown builtin {name!r}")


def _mixed_cofactor(params: dict, key: str) -> Polynomial:
    """Cofactor polynomial in (u, v, z) with value 1 at the origin.

    Accepts `key` = coefficient list in u, and/or `key_u`/`key_v`/`key_z`
    univariate coefficient lists whose constant terms are merged (the
    combined constant must be 1).
    """
    pieces = []
    if params.get(key) is not None:
        pieces.append((0, _as_coeffs(params[key], [1.0])))
    for suffix, axis in (("_u", 0), ("_v", 1), ("_z", 2)):
        val = params.get(key + suffix)
        if val is not None:
            pieces.append((axis, _as_coeffs(val, [1.0])))
    if not pieces:
        return Polynomial.constant(3, 1.0)
    out = Polynomial.zero(3)
    const = 0.0
    for axis, coeffs in pieces:
        const += coeffs[0]
        out = out + Polynomial.univariate(3, axis, [0.0] + coeffs[1:])
    if abs(const - 1.0) > 1e-12:
        raise FieldError(f"{key}(0) must equal 1, got {const}")
    return out + Polynomial.constant(3, 1.0)


# ---------------------------------------------------------------------------
# JSON field files
# ---------------------------------------------------------------------------

def field_from_dict(data: dict) -> ControlField | NLevelHamiltonianMap:
    """Parse {"arity":..,"components":[[{"c":..,"e":[..]}..],[..]]} or
    {"builtin": name, "params": {...}}.  Errors cite the offending term."""
    if "builtin" in data:
        return builtin(data["builtin"], **data.get("params", {}))
    try:
        arity = int(data["arity"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldError("field file needs integer 'arity' or a 'builtin' name") from exc
    comps = data.get("components")
    if not isinstance(comps, (list, tuple)) or len(comps) != 2:
        raise FieldError("'components' must list exactly two term lists")
    polys = []
    for ci, comp in enumerate(comps):
        terms = {}
        for ti, term in enumerate(comp):
            try:
                c = float(term["c"])
                e = tuple(int(k) for k in term["e"])
            except (KeyError, TypeError, ValueError) as exc:
                raise FieldError(f"component {ci + 1} term {ti + 1}: "
                                 f"expected {{'c': real, 'e': [..]}}") from exc
            if len(e) != arity or any(k < 0 for k in e):
                raise FieldError(f"component {ci + 1} term {ti + 1}: "
                                 f"exponents {list(e)} invalid for arity {arity}")
            if max(e, default=0) > MAX_DEGREE:
                raise FieldError(f"component {ci + 1} term {ti + 1}: "
                                 f"degree exceeds cap {MAX_DEGREE}")
            terms[e] = terms.get(e, 0.0) + c
        polys.append(Polynomial(arity, terms))
    return ControlField(polys[0], polys[1])


def load_field(path: str) -> ControlField | NLevelHamiltonianMap:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return field_from_dict(data)
