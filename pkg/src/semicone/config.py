"""Shared numerical tolerances and integrator knobs.

All thresholds that turn smooth-math statements ("nonzero", "collinear",
"is a zero of f") into floating-point decisions live here, so they can be
inspected and overridden in one place.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # ``f(x) = 0`` test: ||f(x)|| <= zero * (1 + ||x||)
    zero: float = 1e-9
    # scale-free rank / collinearity / nonzero-derivative threshold
    rank: float = 1e-8
    # residual kept by the locus corrector at every traced vertex
    trace: float = 1e-10
    # |z-component of tangent| after turning-point refinement
    turn: float = 1e-10
    # minimal planar tangent norm for the no-cusp check
    cusp: float = 1e-6
    # band separation (relative to ||H||) required by spectral reduction
    band: float = 1e-6
    # epsilon-fattening of the exact segment-intersection predicates
    segment: float = 1e-12
    # max phase advanced per frozen-exponential step (radians)
    theta_max: float = 0.1
    # hard cap on integrator steps; exceeded -> explicit failure
    step_cap: int = 100_000_000

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT_TOL = Tolerances()
