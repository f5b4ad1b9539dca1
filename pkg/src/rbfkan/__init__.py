"""Adaptive RBF Kolmogorov-Arnold networks with LOOCV shape initialization."""
from .baselines import (
    FASTKAN_FIXED_H,
    ChebKanConfig,
    ChebKanModel,
    MlpConfig,
    MlpModel,
    SplineKanConfig,
    SplineKanModel,
    fastkan_fixed,
    init_cheb_kan,
    init_mlp,
    init_spline_kan,
    model_from_dict,
)
from .benchmarks import FUNCTION_IDS, Dataset, generate_dataset, reconstruct_surface, target_fn
from .errors import (
    DegenerateDataError,
    DomainError,
    NumericalDivergenceError,
    NumericalRankError,
    RbfKanError,
    SearchFailedError,
)
from .kan import ModelConfig, RbfKanModel, init_model
from .kernels import KERNEL_NAMES, KernelSpec
from .loocv import LoocvConfig, LoocvResult, prepare_auxiliary, rippa_errors, search_h
from .training import TrainConfig, TrainRecord, relative_l2, train

__version__ = "0.1.0"
