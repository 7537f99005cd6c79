import numpy as np
import pytest
from scipy.integrate import quad

import semicone as sc
from semicone.eigenpath import track_branches
from semicone.oscillatory import (OscillatoryError, PhaseProfile,
                                  averaging_distance, oscillatory_integral,
                                  sup_partial_integral, vdc_exponent)
from semicone.paths import ControlPath

EPS_GRID = np.logspace(-4, -1, 9)


class TestOscillatoryIntegral:
    def test_full_period_cancels(self):
        eps = 0.01
        p = PhaseProfile.from_polynomial(0.0, 2 * np.pi * eps, [0.0, 1.0])
        assert abs(oscillatory_integral(p, eps)) < 1e-12

    def test_linear_phase_closed_form(self):
        p = PhaseProfile.from_polynomial(0.0, 1.0, [0.0, 1.0])
        for eps in (0.05, 0.01, 0.002):
            val = oscillatory_integral(p, eps)
            exact = eps * (np.exp(1j / eps) - 1.0) / 1j
            assert abs(val - exact) < 1e-12
            assert abs(val) <= 2 * eps + 1e-12

    def test_against_adaptive_quadrature_oracle(self, rng):
        # moderate eps so scipy's adaptive quad resolves the integrand
        p = PhaseProfile.from_polynomial(-1.0, 1.0, [0.0, 0.3, 0.5],
                                         amp_coeffs=[1.0, -0.4])
        eps = 0.05
        mine = oscillatory_integral(p, eps)

        def integrand_re(x):
            return (1.0 - 0.4 * x) * np.cos((0.3 * x + 0.5 * x * x) / eps)

        def integrand_im(x):
            return (1.0 - 0.4 * x) * np.sin((0.3 * x + 0.5 * x * x) / eps)

        re, _ = quad(integrand_re, -1, 1, limit=400)
        im, _ = quad(integrand_im, -1, 1, limit=400)
        assert abs(mine - (re + 1j * im)) < 1e-9

    def test_fresnel_asymptotics(self):
        p = PhaseProfile.from_polynomial(-1.0, 1.0, [0.0, 0.0, 0.5])
        for eps in (1e-3, 1e-4):
            val = abs(oscillatory_integral(p, eps))
            assert val == pytest.approx(np.sqrt(2 * np.pi * eps), rel=0.02)

    def test_panel_budget(self):
        p = PhaseProfile.from_polynomial(0.0, 1.0, [0.0, 1.0])
        with pytest.raises(OscillatoryError, match="panel"):
            oscillatory_integral(p, 1e-9, max_panels=100)


class TestVdcExponents:
    def test_k1_monotone_phase(self):
        p = PhaseProfile.from_polynomial(0.0, 1.0, [0.0, 1.0])
        fit = vdc_exponent(p, 1, EPS_GRID)
        assert fit.slope >= 0.95
        # Lemma-type bound: 2 eps (the variation term vanishes for phi' = 1)
        assert fit.constant <= 2.0 + 1e-9

    def test_k2_quadratic_phase(self):
        p = PhaseProfile.from_polynomial(-1.0, 1.0, [0.0, 0.0, 0.5])
        fit = vdc_exponent(p, 2, EPS_GRID)
        assert fit.slope >= 0.45
        assert np.isfinite(fit.constant)

    def test_k3_cubic_phase(self):
        p = PhaseProfile.from_polynomial(-1.0, 1.0, [0.0, 0.0, 0.0, 1.0 / 6.0])
        fit = vdc_exponent(p, 3, EPS_GRID)
        assert fit.slope >= 0.30
        assert np.isfinite(fit.constant)

    def test_sup_monotone_in_eps(self):
        p = PhaseProfile.from_polynomial(-1.0, 1.0, [0.0, 0.0, 0.5])
        sups = [sup_partial_integral(p, e) for e in EPS_GRID]
        for a, b in zip(sups, sups[1:]):
            assert a <= b * 1.05

    def test_certification_rejects_vanishing(self):
        p = PhaseProfile.from_polynomial(-1.0, 1.0, [0.0, 0.0, 0.5])
        with pytest.raises(OscillatoryError):
            p.certify(1)  # phi' = x vanishes inside the interval

    def test_grid_span_required(self):
        p = PhaseProfile.from_polynomial(0.0, 1.0, [0.0, 1.0])
        with pytest.raises(OscillatoryError):
            vdc_exponent(p, 1, [1e-2, 2e-2, 4e-2, 6e-2, 8e-2, 1e-1])


class TestBranchProfiles:
    def test_conical_passage_sqrt_eps_bound(self, semiconical_nf):
        # phase = 2 int lam0 along a conical passage: sup_t of the partial
        # integral decays like sqrt(eps) with a finite constant
        path = ControlPath.from_polynomials([-0.5, 1.0], [0.0, -0.4, 0.8])
        br = track_branches(semiconical_nf, path, n=8000)
        lam_int = np.concatenate([[0.0], np.cumsum(
            0.5 * (br.lam0[1:] + br.lam0[:-1]) * np.diff(br.t))])
        profile = PhaseProfile.from_samples(br.t, 2.0 * lam_int)
        grid = np.logspace(-3.5, -1, 6)
        sups = np.array([sup_partial_integral(profile, e) for e in grid])
        consts = sups / np.sqrt(grid)
        assert np.max(consts) < 10.0
        slope = np.polyfit(np.log(grid), np.log(sups), 1)[0]
        assert slope >= 0.45

    def test_nonconical_phase_structure(self, semiconical_nf):
        # along the non-conical passage the primitive of lam0 has a triple
        # zero at the crossing and nonzero third derivative
        path = ControlPath.from_polynomials([0.15, -0.4, -0.2, 0.8], [-0.5, 1.0])
        br = track_branches(semiconical_nf, path, n=20000)
        t0 = br.crossing_times[0]
        k0 = int(np.argmin(np.abs(br.t - t0)))
        lam_int = np.concatenate([[0.0], np.cumsum(
            0.5 * (br.lam0[1:] + br.lam0[:-1]) * np.diff(br.t))])
        phi = 2.0 * (lam_int - np.interp(t0, br.t, lam_int))
        dt = br.t[1] - br.t[0]
        # phi, phi', phi'' vanish at the crossing; phi''' does not
        assert abs(phi[k0]) < 1e-8
        d1 = np.gradient(phi, dt)
        d2 = np.gradient(d1, dt)
        d3 = np.gradient(d2, dt)
        assert abs(d1[k0]) < 1e-6
        assert abs(d2[k0]) < 1e-3
        window = abs(br.t - t0) < 0.05
        assert np.min(np.abs(d3[window])) > 0.5
        # and the k = 3 decay holds for the oscillatory sup
        profile = PhaseProfile.from_samples(br.t, phi)
        grid = np.logspace(-3.5, -1, 6)
        sups = np.array([sup_partial_integral(profile, e) for e in grid])
        slope = np.polyfit(np.log(grid), np.log(sups), 1)[0]
        assert slope >= 0.30


class TestAveraging:
    @staticmethod
    def zero_gen(tau):
        return np.zeros((2, 2), dtype=complex)

    def test_identical_flows(self):
        assert averaging_distance(self.zero_gen, self.zero_gen, 0.1) == 0.0

    def test_sigma_x_oscillation_linear_decay(self):
        # A = 0, A_eps = i sigma_x cos(tau/eps): primitive is O(eps)
        eps_grid = np.logspace(-3, -1, 6)
        dists = []
        for e in eps_grid:
            def gen_eps(tau, e=e):
                c = np.cos(tau / e)
                return 1j * c * np.array([[0.0, 1.0], [1.0, 0.0]])
            dists.append(averaging_distance(self.zero_gen, gen_eps, e))
        slope = np.polyfit(np.log(eps_grid), np.log(dists), 1)[0]
        assert slope >= 0.9

    def test_two_level_coupling_instance(self):
        # coupling v e^{i phi/eps} with |primitive| <= c eps gives flow
        # distance O(eps)
        eps_grid = np.logspace(-3, -1, 6)
        dists = []
        for e in eps_grid:
            def gen_eps(tau, e=e):
                a = np.exp(1j * tau / e)
                return np.array([[0.0, a], [-np.conj(a), 0.0]])
            dists.append(averaging_distance(self.zero_gen, gen_eps, e))
        slope = np.polyfit(np.log(eps_grid), np.log(dists), 1)[0]
        assert slope >= 0.9

    def test_non_skew_rejected(self):
        def bad(tau):
            return np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
        with pytest.raises(OscillatoryError, match="skew"):
            averaging_distance(self.zero_gen, bad, 0.1)
