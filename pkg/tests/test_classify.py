import numpy as np
import pytest

import semicone as sc
from semicone.classify import (Verdict, classify_family_point, classify_point,
                               gap_growth_probe)
from semicone.config import DEFAULT_TOL
from semicone.field import ControlField, Polynomial
from semicone.locus import find_intersection
from semicone.normalform import left_transform, right_transform, time_transform

from conftest import dense_random_field, random_field

RADII = np.logspace(-4, -1, 13)


class TestClassifyPoint:
    def test_conical_identity(self, conical_nf):
        cls = classify_point(conical_nf, [0.0, 0.0])
        assert cls.verdict is Verdict.CONICAL
        assert cls.diagnostics["chi"] == 1.0

    def test_semiconical_nf(self, semiconical_nf):
        cls = classify_point(semiconical_nf, [0.0, 0.0])
        assert cls.verdict is Verdict.SEMI_CONICAL
        assert np.allclose(cls.eta, [0.0, 1.0], atol=1e-12)
        assert cls.diagnostics["d_eta_chi"] == pytest.approx(2.0, abs=1e-10)

    def test_not_intersection(self, semiconical_nf):
        cls = classify_point(semiconical_nf, [0.1, 0.0])
        assert cls.verdict is Verdict.NOT_INTERSECTION

    def test_u2_v_field(self):
        # gradients (0,0) and (0,1): collinear with one vanishing; the
        # eta-test along (1,0) passes, and the gap growth confirms the
        # semi-conical profile (quadratic along eta, linear transversally)
        f = ControlField(Polynomial(2, {(2, 0): 1.0}), Polynomial(2, {(0, 1): 1.0}))
        cls = classify_point(f, [0.0, 0.0])
        assert cls.verdict is Verdict.SEMI_CONICAL
        assert np.allclose(np.abs(cls.eta), [1.0, 0.0])
        along = gap_growth_probe(f, [0, 0], [1, 0], RADII)
        across = gap_growth_probe(f, [0, 0], [0, 1], RADII)
        assert along.slope == pytest.approx(2.0, abs=1e-3)
        assert across.slope == pytest.approx(1.0, abs=1e-3)

    def test_degenerate_catchall(self):
        # both gradients vanish: outside the generic taxonomy
        f = ControlField(Polynomial(2, {(2, 0): 1.0}), Polynomial(2, {(0, 2): 1.0}))
        cls = classify_point(f, [0.0, 0.0])
        assert cls.verdict is Verdict.DEGENERATE
        assert cls.eta is None


class TestClassifyFamilyPoint:
    def test_f_conical(self, f_conical_nf):
        cls = classify_family_point(f_conical_nf, [0.0, 0.0, 0.0])
        assert cls.verdict is Verdict.F_CONICAL

    def test_f_semiconical(self, f_semiconical_nf):
        cls = classify_family_point(f_semiconical_nf, [0.0, 0.0, 0.0])
        assert cls.verdict is Verdict.F_SEMI_CONICAL
        assert np.allclose(cls.eta, [0.0, 1.0], atol=1e-12)

    def test_not_intersection(self, f_semiconical_nf):
        cls = classify_family_point(f_semiconical_nf, [0.1, 0.0, 0.1])
        assert cls.verdict is Verdict.NOT_INTERSECTION
        assert cls.diagnostics["f_norm"] == pytest.approx(0.2, abs=1e-12)

    def test_z_degenerate_family(self):
        # slice-conical but d3 f = 0: not F-conical
        f = ControlField(Polynomial(3, {(1, 0, 0): 1.0}),
                         Polynomial(3, {(0, 1, 0): 1.0}))
        cls = classify_family_point(f, [0.0, 0.0, 0.0])
        assert cls.verdict is Verdict.DEGENERATE

    def test_genericity_smoke(self, rng):
        # random dense degree-<=3 families with a forced zero at the origin
        # are never outside the conical/semi-conical taxonomy
        for _ in range(200):
            f = dense_random_field(rng, 3, force_zero=True)
            cls = classify_family_point(f, [0.0, 0.0, 0.0])
            assert cls.verdict is not Verdict.DEGENERATE, cls.diagnostics


class TestEquivalenceInvariance:
    def verdict_of(self, fld, x=(0.0, 0.0)):
        return classify_point(fld, x).verdict

    def test_left_equivalence_preserves(self, rng, conical_nf, semiconical_nf):
        for fld, verdict in ((conical_nf, Verdict.CONICAL),
                             (semiconical_nf, Verdict.SEMI_CONICAL)):
            for _ in range(25):
                theta = rng.uniform(0, 2 * np.pi)
                zeta = int(rng.choice([-1, 1]))
                assert self.verdict_of(left_transform(fld, theta, zeta)) is verdict

    def test_rotation_maps_eta_inversely(self, rng, semiconical_nf):
        for _ in range(25):
            ang = rng.uniform(0, 2 * np.pi)
            r = np.array([[np.cos(ang), -np.sin(ang)],
                          [np.sin(ang), np.cos(ang)]])
            cls = classify_point(right_transform(semiconical_nf, r), [0.0, 0.0])
            assert cls.verdict is Verdict.SEMI_CONICAL
            expected = r.T @ np.array([0.0, 1.0])
            residual = 1.0 - abs(float(cls.eta @ expected))
            assert residual < 1e-8

    def test_time_equivalence_preserves(self, rng, semiconical_nf, conical_nf):
        for _ in range(10):
            xi = float(rng.uniform(0.2, 3.0) * rng.choice([-1, 1]))
            assert self.verdict_of(time_transform(semiconical_nf, xi)) is Verdict.SEMI_CONICAL
            assert self.verdict_of(time_transform(conical_nf, xi)) is Verdict.CONICAL


class TestIsolation:
    def test_semiconical_zero_isolated_grid(self, semiconical_nf):
        # grid search on [-0.1, 0.1]^2: no sample away from the origin gets
        # anywhere near a zero of f
        axis = np.linspace(-0.1, 0.1, 401)
        uu, vv = np.meshgrid(axis, axis)
        pts = np.column_stack([uu.ravel(), vv.ravel()])
        fv = semiconical_nf.evaluate_batch(pts)
        norms = np.hypot(fv[:, 0], fv[:, 1])
        outside = np.linalg.norm(pts, axis=1) > 1e-6
        assert np.min(norms[outside]) > 1e-9

    def test_semiconical_zero_unique(self, semiconical_nf):
        # Newton polish from seeds all over the square converges only into
        # the quadratic trough around the single zero (|v| ~ sqrt(tol))
        seeds = np.linspace(-0.1, 0.1, 21)
        for su in seeds:
            for sv in seeds:
                try:
                    x = find_intersection(semiconical_nf, [su, sv])
                except Exception:
                    continue
                assert np.linalg.norm(x) < 1e-4


class TestGapGrowth:
    def test_conical_linear(self, conical_nf):
        fit = gap_growth_probe(conical_nf, [0, 0], [1, 0], RADII)
        assert fit.slope == pytest.approx(1.0, abs=1e-6)

    def test_semiconical_quadratic_along_eta(self, semiconical_nf):
        fit = gap_growth_probe(semiconical_nf, [0, 0], [0, 1], RADII)
        assert fit.slope == pytest.approx(2.0, abs=1e-3)

    def test_semiconical_linear_transversal(self, semiconical_nf):
        # Gap(t, 0) = 2 sqrt(2) |t| exactly
        fit = gap_growth_probe(semiconical_nf, [0, 0], [1, 0], RADII)
        assert fit.slope == pytest.approx(1.0, abs=1e-3)
        assert fit.const_lo == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-6)
        assert fit.const_hi == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-6)

    def test_degenerate_ray(self):
        # f vanishes identically on the u-axis
        f = ControlField(Polynomial(2, {(0, 1): 1.0}), Polynomial(2, {(0, 2): 1.0}))
        fit = gap_growth_probe(f, [0, 0], [1, 0], RADII)
        assert fit.degenerate

    def test_radii_span_required(self, conical_nf):
        with pytest.raises(ValueError):
            gap_growth_probe(conical_nf, [0, 0], [1, 0], [0.01, 0.02, 0.05])
