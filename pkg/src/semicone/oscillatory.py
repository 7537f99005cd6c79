"""Oscillatory integrals and averaging-flow estimates.

The adiabatic rates all reduce to bounds of the form

    sup_t | int_a^t v(x) exp(i phi(x) / eps) dx |  <=  c eps^{1/k},

where k is the first derivative order of the phase bounded away from zero.
This module evaluates such integrals with phase-resolved composite
Gauss-Legendre panels (panel width tied to eps so the fastest oscillation is
always resolved -- the dominant failure mode of naive quadrature is
aliasing), fits the decay exponent of the sup against an eps grid, and
measures the distance between a flow and its oscillatory perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

_GL_NODES, _GL_WEIGHTS = leggauss(10)


class OscillatoryError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# phase profiles
# ---------------------------------------------------------------------------

class PhaseProfile:
    """Phase and amplitude on [a, b], polynomial or tabulated.

    `certify(k)` checks inf |phi^(k)| >= 1 on a dense grid after rescaling
    and records the rescale factor (phase and eps divide by the same factor,
    leaving the integral unchanged).
    """

    def __init__(self, a: float, b: float,
                 phase: Callable[[np.ndarray], np.ndarray],
                 phase_derivative: Callable[[np.ndarray, int], np.ndarray],
                 amplitude: Callable[[np.ndarray], np.ndarray],
                 label: str = ""):
        if not b > a:
            raise OscillatoryError("need b > a")
        self.a = float(a)
        self.b = float(b)
        self.phase = phase
        self.phase_derivative = phase_derivative
        self.amplitude = amplitude
        self.label = label
        self.scale_factor: float | None = None

    # -- constructors -----------------------------------------------------------

    @classmethod
    def from_polynomial(cls, a: float, b: float, phase_coeffs,
                        amp_coeffs=(1.0,), label: str = "") -> "PhaseProfile":
        pc = np.asarray(phase_coeffs, dtype=float)
        ac = np.asarray(amp_coeffs, dtype=float)
        pol = np.polynomial.polynomial

        def phase(x):
            return pol.polyval(x, pc)

        def phase_d(x, order):
            return pol.polyval(x, pol.polyder(pc, order)) if order else phase(x)

        def amp(x):
            return pol.polyval(x, ac)

        return cls(a, b, phase, phase_d, amp, label=label)

    @classmethod
    def from_samples(cls, t: np.ndarray, phase_values: np.ndarray,
                     amp_values: np.ndarray | None = None,
                     label: str = "") -> "PhaseProfile":
        """Tabulated profile (e.g. 2 * integral of a tracked eigenvalue
        branch); interpolated by cubic splines."""
        t = np.asarray(t, dtype=float)
        ph = CubicSpline(t, np.asarray(phase_values, dtype=float))
        if amp_values is None:
            def amp(x):
                return np.ones_like(np.asarray(x, dtype=float))
        else:
            am = CubicSpline(t, np.asarray(amp_values, dtype=float))

            def amp(x):
                return am(x)

        def phase(x):
            return ph(x)

        def phase_d(x, order):
            return ph(x, order) if order else ph(x)

        return cls(float(t[0]), float(t[-1]), phase, phase_d, amp, label=label)

    # -- certification ------------------------------------------------------------

    def derivative_inf(self, k: int, nodes: int = 4096) -> float:
        x = np.linspace(self.a, self.b, nodes)
        return float(np.min(np.abs(self.phase_derivative(x, k))))

    def certify(self, k: int, nodes: int = 4096) -> float:
        """Record and return the rescale factor m = inf |phi^(k)| (> 0).

        Dividing phase and eps by m leaves the integral unchanged and makes
        the hypothesis |phi^(k)| >= 1 hold on the certification grid.
        """
        m = self.derivative_inf(k, nodes)
        if m <= 0.0:
            raise OscillatoryError(
                f"|phi^({k})| not bounded away from zero on [{self.a}, {self.b}]")
        self.scale_factor = m
        return m

    def max_phase_rate(self, nodes: int = 4096) -> float:
        x = np.linspace(self.a, self.b, nodes)
        return float(np.max(np.abs(self.phase_derivative(x, 1))))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _panel_integral(profile: PhaseProfile, eps: float, lo: float, hi: float,
                    panels: int) -> complex:
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    w = half[:, None] * _GL_WEIGHTS[None, :]
    vals = profile.amplitude(x) * np.exp(1j * profile.phase(x) / eps)
    return complex(np.sum(vals * w))


def oscillatory_integral(profile: PhaseProfile, eps: float,
                         t: float | None = None,
                         phase_per_panel: float = 1.5,
                         rel_tol: float = 1e-8,
                         max_panels: int = 2_000_000) -> complex:
    """int_a^t v(x) exp(i phi(x)/eps) dx, Richardson-verified.

    Panel count resolves the fastest phase: width <= eps * phase_per_panel /
    max |phi'|; the result must agree with a doubled-panel evaluation to
    rel_tol (relative to max(|I|, eps)).
    """
    if eps <= 0:
        raise OscillatoryError("eps must be positive")
    hi = profile.b if t is None else float(t)
    if hi <= profile.a:
        return 0.0 + 0.0j
    rate = max(profile.max_phase_rate(), 1e-300)
    width = eps * phase_per_panel / rate
    panels = int(np.ceil((hi - profile.a) / width))
    panels = max(panels, 8)
    if panels > max_panels:
        raise OscillatoryError(f"panel budget exceeded ({panels})")
    coarse = _panel_integral(profile, eps, profile.a, hi, panels)
    fine = _panel_integral(profile, eps, profile.a, hi, 2 * panels)
    if abs(fine - coarse) > rel_tol * max(abs(fine), eps):
        raise OscillatoryError(
            f"quadrature not converged: |delta| = {abs(fine - coarse):.2e}")
    return fine


def sup_partial_integral(profile: PhaseProfile, eps: float,
                         n_grid: int = 512, refine_top: int = 3) -> float:
    """M(eps) = sup over t of |int_a^t v e^{i phi/eps}|.

    Evaluated on an n_grid prefix grid (cumulative panel sums, so the sweep
    costs one pass) plus local refinement around the top candidates.
    """
    if eps <= 0:
        raise OscillatoryError("eps must be positive")
    rate = max(profile.max_phase_rate(), 1e-300)
    width = eps * 1.5 / rate
    panels = int(np.ceil((profile.b - profile.a) / width))
    panels = max(panels, n_grid, 64)
    edges = np.linspace(profile.a, profile.b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    w = half[:, None] * _GL_WEIGHTS[None, :]
    vals = profile.amplitude(x) * np.exp(1j * profile.phase(x) / eps)
    per_panel = np.sum(vals * w, axis=1)
    cum = np.concatenate([[0.0 + 0.0j], np.cumsum(per_panel)])
    mags = np.abs(cum)
    best = float(np.max(mags))
    # refine the top candidates on a finer prefix grid within one panel
    order = np.argsort(mags)[::-1][:refine_top]
    for idx in order:
        if idx == 0:
            continue
        lo = edges[idx - 1]
        hi = edges[idx]
        base = cum[idx - 1]
        for frac in np.linspace(0.1, 1.0, 10):
            part = base + _panel_integral(profile, eps, lo, lo + frac * (hi - lo), 4)
            best = max(best, abs(part))
    return best


# ---------------------------------------------------------------------------
# decay-exponent fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VdcFit:
    k: int
    slope: float
    constant: float            # sup over the grid of M(eps) / eps^{1/k}
    eps_grid: np.ndarray
    sup_values: np.ndarray
    scale_factor: float


def vdc_exponent(profile: PhaseProfile, k: int, eps_grid) -> VdcFit:
    """Fit M(eps) ~ eps^slope over a grid spanning >= 2 decades, after
    certifying |phi^(k)| >= 1 up to the recorded rescale.

    The derivative-order hypothesis fixes the reference exponent 1/k against
    which the envelope constant sup M / eps^{1/k} is reported.
    """
    eps_grid = np.asarray(sorted(float(e) for e in eps_grid))
    if len(eps_grid) < 6 or eps_grid[-1] / eps_grid[0] < 99.0:
        raise OscillatoryError("eps grid must span >= 2 decades with >= 6 points")
    m = profile.certify(k)
    sups = np.array([sup_partial_integral(profile, e) for e in eps_grid])
    # rescaled abscissa eps/m matches the certified normalization; the bound
    # is one-sided, so the slope is fitted through the upper concave envelope
    # of the log-log data (cancellation dips below the trend are ignored)
    le, ls = np.log(eps_grid / m), np.log(np.maximum(sups, 1e-300))
    mask = _upper_envelope_mask(le, ls)
    slope, _ = np.polyfit(le[mask], ls[mask], 1)
    constant = float(np.max(sups / (eps_grid / m) ** (1.0 / k)))
    return VdcFit(k=k, slope=float(slope), constant=constant,
                  eps_grid=eps_grid, sup_values=sups, scale_factor=m)


def _upper_envelope_mask(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vertices of the concave majorant (upper hull) of sorted-x points."""
    idx: list[int] = []
    for i in range(len(x)):
        while len(idx) >= 2:
            i1, i2 = idx[-2], idx[-1]
            cross = (x[i2] - x[i1]) * (y[i] - y[i1]) - (y[i2] - y[i1]) * (x[i] - x[i1])
            if cross >= 0.0:
                idx.pop()
            else:
                break
        idx.append(i)
    mask = np.zeros(len(x), dtype=bool)
    mask[idx] = True
    return mask


# ---------------------------------------------------------------------------
# averaging flows
# ---------------------------------------------------------------------------

def _expm_skew(a: np.ndarray) -> np.ndarray:
    """Exponential of a skew-Hermitian matrix via eigendecomposition of iA."""
    herm = 1j * a
    w, v = np.linalg.eigh(herm)
    return (v * np.exp(-1j * w)) @ v.conj().T


def averaging_distance(gen: Callable[[float], np.ndarray],
                       gen_eps: Callable[[float], np.ndarray],
                       eps: float, n_steps: int | None = None,
                       skew_tol: float = 1e-10) -> float:
    """sup over the step grid of || P_tau^eps - P_tau || (operator norm).

    P and P^eps are the flows of x' = A(tau) x and x' = A_eps(tau) x on
    [0, 1], integrated with midpoint-frozen exponentials; the step resolves
    the eps-fast oscillation of the perturbed generator.  Generators must be
    skew-Hermitian (the caller certifies the closeness of their primitives).
    """
    if n_steps is None:
        n_steps = max(int(np.ceil(20.0 / eps)), 2000)
    dt = 1.0 / n_steps
    a0 = np.asarray(gen(0.0), dtype=complex)
    dim = a0.shape[0]
    p = np.eye(dim, dtype=complex)
    p_eps = np.eye(dim, dtype=complex)
    worst = 0.0
    for k in range(n_steps):
        tm = (k + 0.5) * dt
        a = np.asarray(gen(tm), dtype=complex)
        ae = np.asarray(gen_eps(tm), dtype=complex)
        for mat in (a, ae):
            if np.max(np.abs(mat + mat.conj().T)) > skew_tol * max(1.0, np.max(np.abs(mat))):
                raise OscillatoryError("generator is not skew-Hermitian")
        p = _expm_skew(a * dt) @ p
        p_eps = _expm_skew(ae * dt) @ p_eps
        diff = np.linalg.norm(p_eps - p, 2)
        worst = max(worst, float(diff))
    return worst
