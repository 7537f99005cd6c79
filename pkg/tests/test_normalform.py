import numpy as np
import pytest

import semicone as sc
from semicone.classify import Verdict, classify_family_point, classify_point
from semicone.field import ControlField, Polynomial
from semicone.normalform import (EquivalenceTransform, TransformError,
                                 align_nonconical, check_SC, check_SCP,
                                 invariant_beta, invariant_m0,
                                 inverse_apply_check, left_equalize_gradients,
                                 left_transform, right_transform,
                                 time_transform)


def poly2(terms):
    return Polynomial(2, terms)


U = poly2({(1, 0): 1.0})
V = poly2({(0, 1): 1.0})


class TestStep1:
    def test_nf_needs_no_rotation(self, semiconical_nf):
        theta, out = left_equalize_gradients(semiconical_nf, [0.0, 0.0])
        assert theta == pytest.approx(0.0, abs=1e-14)
        jac = out.jacobian([0, 0])
        assert np.allclose(jac[0, :], jac[1, :])

    def test_alpha_two(self):
        f = ControlField(U, poly2({(1, 0): 2.0, (0, 2): 1.0}))
        theta, out = left_equalize_gradients(f, [0.0, 0.0])
        jac = out.jacobian([0, 0])
        assert np.linalg.norm(jac[0, :] - jac[1, :]) < 1e-10
        assert np.linalg.norm(jac[0, :]) > 1e-8

    def test_component_roles_swapped(self):
        f = ControlField(V, V + U * U)
        theta, out = left_equalize_gradients(f, [0.0, 0.0])
        jac = out.jacobian([0, 0])
        assert np.linalg.norm(jac[0, :] - jac[1, :]) < 1e-10

    def test_vanishing_first_gradient(self):
        # grad f1(0) = 0 needs the swapped collinearity ratio
        f = ControlField(U * U, V)
        theta, out = left_equalize_gradients(f, [0.0, 0.0])
        jac = out.jacobian([0, 0])
        assert np.linalg.norm(jac[0, :] - jac[1, :]) < 1e-10

    def test_rejects_conical(self, conical_nf):
        with pytest.raises(TransformError):
            left_equalize_gradients(conical_nf, [0.0, 0.0])


class TestStep2:
    def test_nf_aligned(self, semiconical_nf):
        rot, out = align_nonconical(semiconical_nf, [0.0, 0.0])
        jac = out.jacobian([0, 0])
        assert np.max(np.abs(jac[:, 1])) < 1e-12
        assert min(abs(jac[0, 0]), abs(jac[1, 0])) > 1e-8

    def test_diagonal_direction(self):
        half = Polynomial(2, {(2, 0): 0.5, (1, 1): -1.0, (0, 2): 0.5})
        f = ControlField(U + V, U + V + half)
        rot, out = align_nonconical(f, [0.0, 0.0])
        jac = out.jacobian([0, 0])
        assert np.max(np.abs(jac[:, 1])) < 1e-12

    def test_requires_step1(self, conical_nf):
        with pytest.raises(TransformError):
            align_nonconical(conical_nf, [0.0, 0.0])

    def test_random_rotated_nf_recovers_sc(self, rng, semiconical_nf):
        for _ in range(20):
            ang = rng.uniform(0, 2 * np.pi)
            r = np.array([[np.cos(ang), -np.sin(ang)],
                          [np.sin(ang), np.cos(ang)]])
            rotated = right_transform(semiconical_nf, r)
            _, s1 = left_equalize_gradients(rotated, [0.0, 0.0])
            _, s2 = align_nonconical(s1, [0.0, 0.0])
            assert check_SC(s2, [0.0, 0.0]).passed


class TestConditions:
    def test_sc_pass_nf(self, semiconical_nf):
        rep = check_SC(semiconical_nf, [0.0, 0.0])
        assert rep.passed
        values = {c.name: c.value for c in rep.clauses}
        assert values["d2chi_nonzero"] == pytest.approx(2.0)

    def test_sc_fail_conical(self, conical_nf):
        rep = check_SC(conical_nf, [0.0, 0.0])
        assert not rep.passed
        failing = {c.name for c in rep.clauses if not c.passed}
        assert "d1f_equal" in failing

    def test_scp_family_nf(self):
        # m0 != 1 keeps d1 f1 != d1 f2, hence chi13 != 0
        f = sc.builtin("F_SEMICONICAL_NF", m0=2.0)
        rep = check_SCP(f, [0.0, 0.0, 0.0])
        assert rep.passed
        values = {c.name: c.value for c in rep.clauses}
        assert values["chi13_nonzero"] != 0.0

    def test_scp_chi13_vs_d1f(self, f_semiconical_nf):
        # for m0 = 1: d1 f1(0) = -1 != 1 = d1 f2(0), chi13 = -2
        jac = f_semiconical_nf.jacobian([0, 0, 0])
        assert jac[0, 0] != jac[1, 0]
        assert f_semiconical_nf.chi([0, 0, 0], (1, 3)) == pytest.approx(-2.0)


class TestInvariants:
    def test_nf_values(self, f_semiconical_nf):
        assert invariant_beta(f_semiconical_nf, [0, 0, 0]) == pytest.approx(1.0)
        assert invariant_m0(f_semiconical_nf, [0, 0, 0]) == pytest.approx(1.0)

    def test_f_conical_beta(self, f_conical_nf):
        assert invariant_beta(f_conical_nf, [0, 0, 0]) == pytest.approx(1.0)

    def test_beta_right_equivalence_invariant(self, rng):
        f = sc.builtin("F_SEMICONICAL_NF", m0=2.0)
        base = invariant_beta(f, [0, 0, 0])
        for _ in range(20):
            ang = rng.uniform(0, 2 * np.pi)
            r = np.array([[np.cos(ang), -np.sin(ang)],
                          [np.sin(ang), np.cos(ang)]])
            zs = float(rng.uniform(0.3, 2.5))
            g = right_transform(f, r, z_scale=zs)
            assert invariant_beta(g, [0, 0, 0]) == pytest.approx(base, abs=1e-8)

    def test_m0_z_rescale_invariant(self, rng):
        f = sc.builtin("F_SEMICONICAL_NF", m0=2.0)
        base = invariant_m0(f, [0, 0, 0])
        for _ in range(10):
            zs = float(rng.uniform(0.3, 2.5))
            g = right_transform(f, np.eye(2), z_scale=zs)
            assert invariant_m0(g, [0, 0, 0]) == pytest.approx(base, abs=1e-10)

    def test_denominator_guard(self):
        f = ControlField(Polynomial(3, {(0, 0, 1): 1.0}),
                         Polynomial(3, {(1, 0, 0): 1.0}))
        with pytest.raises(TransformError):
            invariant_beta(f, [0, 0, 0])


class TestTransforms:
    def test_round_trip(self, rng):
        f = sc.builtin("F_SEMICONICAL_NF", m0=2.0)
        pts = rng.uniform(-1, 1, size=(100, 3))
        for _ in range(10):
            ang = rng.uniform(0, 2 * np.pi)
            tr = EquivalenceTransform(
                theta=float(rng.uniform(0, np.pi)),
                zeta=int(rng.choice([-1, 1])),
                rotation=np.array([[np.cos(ang), -np.sin(ang)],
                                   [np.sin(ang), np.cos(ang)]]),
                z_scale=float(rng.uniform(0.3, 2.5)),
                xi=float(rng.uniform(0.3, 2.5) * rng.choice([-1, 1])),
            )
            assert inverse_apply_check(f, tr, pts) < 1e-10

    def test_orthogonality_enforced(self):
        with pytest.raises(TransformError):
            EquivalenceTransform(rotation=np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_verdict_invariant_under_composites(self, rng, f_semiconical_nf,
                                                f_conical_nf):
        for fld, verdict in ((f_semiconical_nf, Verdict.F_SEMI_CONICAL),
                             (f_conical_nf, Verdict.F_CONICAL)):
            for _ in range(20):
                ang = rng.uniform(0, 2 * np.pi)
                tr = EquivalenceTransform(
                    theta=float(rng.uniform(0, np.pi)),
                    zeta=int(rng.choice([-1, 1])),
                    rotation=np.array([[np.cos(ang), -np.sin(ang)],
                                       [np.sin(ang), np.cos(ang)]]),
                    z_scale=float(rng.uniform(0.3, 2.5)),
                    xi=float(rng.uniform(0.3, 2.5) * rng.choice([-1, 1])),
                )
                out = tr.apply(fld)
                assert classify_family_point(out, [0, 0, 0]).verdict is verdict
