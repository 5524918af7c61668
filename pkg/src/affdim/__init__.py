"""Dimension-theoretic computations for self-affine iterated function systems.

Pressure curves and their bracket semantics, shrinking-target and recurrence
dimension solvers, exterior-power matrix diagnostics, buffer-constant
certification, finite-depth lower-bound measures with energy checks, and
attractor sampling with box counting.
"""

__version__ = "0.1.0"

from .condition import BufferCertificate, CertifyPlan, buffer_search, certify
from .dimension import (DimensionResult, solve_affinity, solve_recurrence,
                        solve_shrinking, upper_seed)
from .errors import (AffdimError, BudgetExceededError, CertificateMismatchError,
                     ConfigError, ConvergenceError, DegreeError,
                     HypothesisViolationError, ScheduleError, SingularityError)
from .multilinear import (FlagOperator, IrreducibilityVerdict,
                          ProximalityWitness, compound, compound_norm,
                          find_proximal_word, flag_apply, hodge_star,
                          irreducibility_semidecision, is_fully_proximal,
                          top_flag, wedge_inner)
from .pressure import (AlphaEstimate, PressureBracket, Rigor, alpha_estimate,
                       beta_estimate, pressure2_estimate, pressure_bracket,
                       pressure_lower, pressure_upper)
from .svf import (AffineIFS, ContractivityWarning, GammaBounds, gamma_bounds,
                  log_phi, log_phi_word, phi, phi_word, singular_values)
from .symbolic import (EMPTY_WORD, DegenerateTargets, ExplicitTargets,
                       LinearFloorRule, LinearPatternTargets, TableRule, Word,
                       common_prefix, enumerate_words, format_word, pad_target,
                       parse_word, target_cylinder)
from .verify import (BoxCountResult, EnergyReport, MeasureTree, RecurrenceMode,
                     ShrinkingTargetMode, box_count, build_measure_tree,
                     energy_partial_sum, sample_attractor)
