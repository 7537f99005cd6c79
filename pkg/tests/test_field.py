import numpy as np
import pytest

import semicone as sc
from semicone.field import (ControlField, FieldError, NLevelHamiltonianMap,
                            Polynomial, assemble, builtin, field_from_dict)

from conftest import random_field


def make(arity, comp1, comp2):
    return ControlField(Polynomial(arity, comp1), Polynomial(arity, comp2))


class TestEvaluate:
    def test_identity_field(self):
        f = make(2, {(1, 0): 1.0}, {(0, 1): 1.0})
        assert np.allclose(f.evaluate([3.0, 4.0]), [3.0, 4.0])

    def test_quadratic(self):
        f = make(2, {(1, 0): 1.0}, {(1, 0): 1.0, (0, 2): 1.0})
        assert np.allclose(f.evaluate([0.0, 0.5]), [0.0, 0.25])

    def test_family(self):
        f = make(3, {(0, 0, 1): 1.0, (1, 0, 0): -1.0},
                 {(0, 0, 1): 1.0, (1, 0, 0): 1.0, (0, 2, 0): 1.0})
        assert np.allclose(f.evaluate([0.1, 0.2, 0.1]), [0.0, 0.24])

    def test_dimension_mismatch(self):
        f = make(2, {(1, 0): 1.0}, {(0, 1): 1.0})
        with pytest.raises(FieldError):
            f.evaluate([1.0, 2.0, 3.0])


class TestPartial:
    def test_dv(self):
        f = make(2, {(1, 0): 1.0}, {(1, 0): 1.0, (0, 2): 1.0})
        assert np.allclose(f.partial([0.0, 0.3], (0, 1)), [0.0, 0.6])

    def test_dz_linear(self):
        f = make(3, {(0, 0, 1): 1.0, (1, 0, 0): -1.0},
                 {(0, 0, 1): 1.0, (1, 0, 0): 1.0, (0, 2, 0): 1.0})
        assert np.allclose(f.partial([0.7, -0.2, 0.5], (0, 0, 1)), [1.0, 1.0])

    def test_second_derivative(self):
        f = make(2, {(2, 0): 1.0}, {(0, 1): 1.0})
        assert np.allclose(f.partial([0.0, 0.0], (2, 0)), [2.0, 0.0])

    def test_order_cap(self):
        f = make(2, {(2, 0): 1.0}, {(0, 1): 1.0})
        with pytest.raises(FieldError):
            f.partial([0.0, 0.0], (4, 0))

    def test_finite_difference_agreement(self, rng):
        # analytic partials against central differences on random fields
        worst = 0.0
        for trial in range(1000):
            arity = 2 if trial % 2 == 0 else 3
            f = random_field(rng, arity)
            x = rng.uniform(-1.0, 1.0, size=arity)
            for i in range(arity):
                mi = [0] * arity
                mi[i] = 1
                exact = f.partial(x, mi)
                h = 1e-5 * max(1.0, abs(float(x[i])))
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                fd = (f.evaluate(xp) - f.evaluate(xm)) / (2.0 * h)
                scale = max(float(np.max(np.abs(exact))), 1.0)
                worst = max(worst, float(np.max(np.abs(exact - fd))) / scale)
        assert worst < 1e-6


class TestChi:
    def test_identity(self):
        f = builtin("CONICAL_NF")
        assert f.chi([0.0, 0.0], (1, 2)) == 1.0

    def test_semiconical(self):
        f = builtin("SEMICONICAL_NF")
        assert f.chi([0.5, 0.3], (1, 2)) == pytest.approx(0.6, abs=1e-15)

    def test_chi13_constant(self):
        f = builtin("F_SEMICONICAL_NF", m0=1.0)
        assert f.chi([0.0, 0.0, 0.0], (1, 3)) == pytest.approx(-2.0)

    def test_antisymmetry_exact(self, rng):
        for _ in range(50):
            f = random_field(rng, 3)
            x = rng.uniform(-1, 1, size=3)
            for i in range(1, 4):
                for j in range(1, 4):
                    if i != j:
                        assert f.chi(x, (i, j)) == -f.chi(x, (j, i))

    def test_invalid_axes(self):
        f = builtin("CONICAL_NF")
        with pytest.raises(FieldError):
            f.chi([0.0, 0.0], (1, 1))
        with pytest.raises(FieldError):
            f.chi([0.0, 0.0], (1, 3))


class TestDirectionalChi:
    def test_semiconical_eta(self):
        f = builtin("SEMICONICAL_NF")
        assert f.directional_chi([0.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)

    def test_constant_chi(self):
        f = builtin("CONICAL_NF")
        assert f.directional_chi([0.0, 0.0], [0.3, -0.7]) == 0.0

    def test_family_chi_gradient(self):
        # chi_12 of (z - u, z + u + v^2) is -2v, so d/dv = -2
        f = builtin("F_SEMICONICAL_NF", m0=1.0)
        assert f.directional_chi([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(-2.0)
        # oracle: term-wise differentiation of the minor polynomial
        h = 1e-6
        fd = (f.chi([0.0, h, 0.0], (1, 2)) - f.chi([0.0, -h, 0.0], (1, 2))) / (2 * h)
        assert fd == pytest.approx(-2.0, abs=1e-8)

    def test_zero_direction_rejected(self):
        f = builtin("CONICAL_NF")
        with pytest.raises(FieldError):
            f.directional_chi([0.0, 0.0], [0.0, 0.0])


class TestAssemble:
    def test_three_four_five(self):
        h = assemble(builtin("CONICAL_NF"), [3.0, 4.0])
        assert np.allclose(h.matrix, [[3, 4], [4, -3]])
        assert h.eigenvalues() == (-5.0, 5.0)
        assert h.gap == 10.0

    def test_trace_symmetry_eigenvalue(self, rng):
        f = builtin("CONICAL_NF")
        for _ in range(200):
            x = rng.uniform(-5, 5, size=2)
            h = assemble(f, x)
            m = h.matrix
            assert m[0, 0] + m[1, 1] == 0.0
            assert m[0, 1] == m[1, 0]
            lam = np.linalg.eigvalsh(m)
            assert abs(lam[1] - np.hypot(*x)) < 1e-12


class TestBuiltins:
    def test_semiconical_default(self):
        f = builtin("SEMICONICAL_NF")
        assert np.allclose(f.evaluate([0.2, 0.3]), [0.2, 0.2 + 0.09])

    def test_semiconical_h_constraint(self):
        with pytest.raises(FieldError):
            builtin("SEMICONICAL_NF", h=[2.0])

    def test_f_semiconical_m0_domain(self):
        for bad in (0.0, -1.0):
            with pytest.raises(FieldError):
                builtin("F_SEMICONICAL_NF", m0=bad)

    def test_stirap_matrix(self):
        st = builtin("STIRAP", E=0.0, Eprime=1.0)
        assert isinstance(st, NLevelHamiltonianMap)
        h = st.evaluate([0.3, -0.2, 0.0])
        assert np.allclose(h, [[0, 0.3, 0], [0.3, 0, -0.2], [0, -0.2, 1.0]])

    def test_stirap_requires_order(self):
        with pytest.raises(FieldError):
            builtin("STIRAP", E=1.0, Eprime=0.0)

    def test_crossing_demo_positive_c(self):
        with pytest.raises(FieldError):
            builtin("CROSSING_DEMO", c=-1.0)

    def test_unknown(self):
        with pytest.raises(FieldError):
            builtin("NOT_A_THING")


class TestJson:
    def test_roundtrip(self, rng):
        f = random_field(rng, 3)
        g = field_from_dict(f.to_dict())
        x = rng.uniform(-1, 1, size=3)
        assert np.allclose(f.evaluate(x), g.evaluate(x))

    def test_builtin_dict(self):
        f = field_from_dict({"builtin": "SEMICONICAL_NF", "params": {}})
        assert f.builtin == "SEMICONICAL_NF"

    def test_error_cites_term(self):
        data = {"arity": 2, "components": [[{"c": 1.0, "e": [1, 0]}],
                                           [{"c": 1.0, "e": [0, 1, 2]}]]}
        with pytest.raises(FieldError, match="component 2 term 1"):
            field_from_dict(data)

    def test_degree_cap(self):
        data = {"arity": 2, "components": [[{"c": 1.0, "e": [17, 0]}],
                                           [{"c": 1.0, "e": [0, 1]}]]}
        with pytest.raises(FieldError, match="cap"):
            field_from_dict(data)


class TestFrozenSlice:
    def test_slice_values(self, rng):
        f = random_field(rng, 3)
        z = 0.37
        sl = f.frozen_z(z)
        for _ in range(20):
            uv = rng.uniform(-1, 1, size=2)
            assert np.allclose(sl.evaluate(uv),
                               f.evaluate([uv[0], uv[1], z]), atol=1e-12)
