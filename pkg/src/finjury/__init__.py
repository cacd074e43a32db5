"""Finite-horizon priority constructions, Erdős–Moser conditions and their verifiers."""
from .em import EMCondition, block_extend, check_condition, em_walk, one_point_extend, register_tournament
from .limits import Delta2Approx, EnumeratedSet
from .structures import FiniteColoring2, HashedTournament, LinearOrderPrefix, Tournament
from .trace import PriorityTrace

__version__ = "0.1.0"
__all__ = ["Delta2Approx", "EMCondition", "EnumeratedSet", "FiniteColoring2", "HashedTournament",
           "LinearOrderPrefix", "PriorityTrace", "Tournament", "block_extend", "check_condition",
           "em_walk", "one_point_extend", "register_tournament"]
