"""rbmx: exact calculus of mixed probabilistic/nondeterministic systems,
kernels and networks over them, mixed automata, and the ReactiveBayes
modelling minilanguage."""

from .core import (
    Domain,
    DiscreteProb,
    EMPTY_STATE,
    MixedSystem,
    PolarizedRelation,
    State,
    Var,
    compose,
    compress,
    conditioned,
    consistency,
    consistency_weight,
    equivalent,
    forall_score,
    inner,
    likelihood,
    marginal,
    new_system,
    nil_system,
    outer,
    polarized_score,
    sample,
    state_join,
    system_from_json,
    system_to_json,
)

__all__ = [
    "Domain",
    "DiscreteProb",
    "EMPTY_STATE",
    "MixedSystem",
    "PolarizedRelation",
    "State",
    "Var",
    "compose",
    "compress",
    "conditioned",
    "consistency",
    "consistency_weight",
    "equivalent",
    "forall_score",
    "inner",
    "likelihood",
    "marginal",
    "new_system",
    "nil_system",
    "outer",
    "polarized_score",
    "sample",
    "state_join",
    "system_from_json",
    "system_to_json",
]

__version__ = "0.1.0"
