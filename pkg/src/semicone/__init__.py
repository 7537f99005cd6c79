"""Conical and semi-conical eigenvalue intersections of real two-level
Hamiltonians: classification, singular-locus tracing, eigenpair tracking,
adiabatic propagation and ensemble population-transfer experiments."""

from .classify import (Classification, Verdict, classify_family_point,
                       classify_point, gap_growth_probe)
from .config import DEFAULT_TOL, Tolerances
from .eigenpath import (EigenBranches, eigenpair_closed_form,
                        limit_eigenvector_conical,
                        limit_eigenvector_nonconical, track_branches)
from .field import (ControlField, NLevelHamiltonianMap, Polynomial,
                    TwoLevelHamiltonian, assemble, builtin, field_from_dict,
                    load_field)
from .locus import (LocusCurve, check_no_cusp, detect_self_intersections,
                    find_intersection, project, tangency_vs_nonconical,
                    trace_locus, turning_points)
from .normalform import (EquivalenceTransform, align_nonconical, check_SC,
                         check_SCP, invariant_beta, invariant_m0,
                         left_equalize_gradients, left_transform,
                         right_transform, time_transform)
from .oscillatory import (PhaseProfile, averaging_distance,
                          oscillatory_integral, sup_partial_integral,
                          vdc_exponent)
from .paths import ControlPath, load_path
from .propagate import (BandReduction, ReducedField, band_reduce,
                        decoupling_error, fit_local_field, propagate_2level,
                        propagate_ensemble, propagate_nlevel, step_2level,
                        transition_probability)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
