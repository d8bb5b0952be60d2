"""Probabilistic cellular automata: invariant measures, exact space-time laws and sampling."""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    Alphabet,
    BernoulliProduct,
    CylinderDistribution,
    KernelError,
    MarkovMeasure,
    Neighborhood,
    NumericMode,
    PeriodicConfiguration,
    PreconditionError,
    TransitionKernel,
    build_kernel,
    dependence_cone,
    positive_rates,
    space_reverse,
    validate_kernel,
)
from .exact import (
    BudgetExceeded,
    SpaceTimePattern,
    image_cylinder,
    image_cylinder_bernoulli,
    image_cylinder_markov,
    push_forward_cylinder,
    stationary_pattern_probability,
    tv_distance_after_n,
)
from .conditions import (
    ParamIandII,
    bernoulli_solutions,
    check_condition_i,
    check_condition_ii,
    check_eq_mbm,
    check_gencond,
    from_p_s,
    phi,
    phi_iter,
    realize_triangle,
    solve_markov_ab,
    transversal_kernel,
)
from .ring import ring_invariant, ring_markov_form
from .ca import (
    DeterministicRule,
    as_ca,
    builtin_rule,
    kari_taati_check,
    number_conserving_check,
    permutativity,
    surjectivity_balance,
)
from .sim import RngSpec, SpaceTimeWindow, extend_stationary, sample_window, sample_windows

__all__ = [
    "__version__",
    "Alphabet",
    "BernoulliProduct",
    "CylinderDistribution",
    "KernelError",
    "MarkovMeasure",
    "Neighborhood",
    "NumericMode",
    "PeriodicConfiguration",
    "PreconditionError",
    "TransitionKernel",
    "build_kernel",
    "dependence_cone",
    "positive_rates",
    "space_reverse",
    "validate_kernel",
    "BudgetExceeded",
    "SpaceTimePattern",
    "image_cylinder",
    "image_cylinder_bernoulli",
    "image_cylinder_markov",
    "push_forward_cylinder",
    "stationary_pattern_probability",
    "tv_distance_after_n",
    "ParamIandII",
    "bernoulli_solutions",
    "check_condition_i",
    "check_condition_ii",
    "check_eq_mbm",
    "check_gencond",
    "from_p_s",
    "phi",
    "phi_iter",
    "realize_triangle",
    "solve_markov_ab",
    "transversal_kernel",
    "ring_invariant",
    "ring_markov_form",
    "DeterministicRule",
    "as_ca",
    "builtin_rule",
    "kari_taati_check",
    "number_conserving_check",
    "permutativity",
    "surjectivity_balance",
    "RngSpec",
    "SpaceTimeWindow",
    "extend_stationary",
    "sample_window",
    "sample_windows",
]
