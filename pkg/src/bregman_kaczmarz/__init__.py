"""Sparse solutions of nonlinear systems via block Bregman-Kaczmarz
iterations with averaging, plus the quadratic recovery experiment harness."""

from .priors import PriorFunction, SparsePrior, soft_shrink
from .systems import (DCTQuadraticSystem, Linearization, NonlinearSystem,
                      QuadraticSystem)
from .selection import (Adaptive, Constant, GreedyBlock, MaxResidual,
                        ResidualProbability, UniformRandom, WeightScheme)
from .solver import RunRecord, SolverConfig, run, solution_error
from .generators import (GeneratorSpec, ProblemInstance, generate,
                         generate_dct, generate_gaussian,
                         generate_sparse_signal, load_instance, save_instance)

__all__ = [
    "PriorFunction", "SparsePrior", "soft_shrink",
    "NonlinearSystem", "QuadraticSystem", "DCTQuadraticSystem", "Linearization",
    "UniformRandom", "ResidualProbability", "MaxResidual", "GreedyBlock",
    "WeightScheme", "Constant", "Adaptive",
    "SolverConfig", "RunRecord", "run", "solution_error",
    "GeneratorSpec", "ProblemInstance", "generate", "generate_gaussian",
    "generate_dct", "generate_sparse_signal", "save_instance", "load_instance",
]
