"""Hamilton cycles in G(n, p) from few positive adjacency queries."""

from .errors import ContractError, ParameterError, PhaseFailure, StrategyFailure
from .oracle import Oracle
from .params import ParamSet
from .strategy import five_phase_strategy
from .tricolor import ColorState, EdgeColor

__all__ = ["Oracle", "ParamSet", "ColorState", "EdgeColor", "five_phase_strategy",
           "PhaseFailure", "StrategyFailure", "ParameterError", "ContractError"]
