"""Functional-MLP remaining-useful-life estimation on C-MAPSS-format data.

The pipeline: parse trajectory files, remove operating-condition effects,
min-max scale, cut sliding windows with piece-wise RUL labels, fit
per-sensor eigenfunction bases, train a functional MLP by gradient
descent, and evaluate with RMSE and the asymmetric score.
"""

from .cmapss import (
    SUBSET_IDS,
    WINDOW_LENGTHS,
    DataSubset,
    EngineTrajectory,
    format_trajectories,
    load_subset,
    parse_rul_file,
    parse_trajectory_file,
)
from .errors import (
    ArtifactError,
    ConfigError,
    DegenerateSensorError,
    FmlpRulError,
    IntegrityError,
    NumericError,
    ParseError,
    TrainingError,
)
from .evaluate import EvalReport, build_report, improvement, rmse, score
from .fmlp import (
    FmlpModel,
    TrainConfig,
    TrainResult,
    load_model,
    save_model,
    train,
)
from .fpca import EigenBasis, SensorBasis, fit_basis, project, select_num_components
from .numerics import discrete_integral, eigh, seeded_rng
from .preprocess import (
    ConditionFitConfig,
    ConditionModel,
    FunctionalInstance,
    MinMaxScaler,
    apply_minmax,
    fit_condition_regressors,
    fit_minmax,
    fit_preprocessing,
    last_window,
    linear_rul,
    piecewise_rul,
    remove_condition_effect,
    slide_windows,
    test_instances,
    training_instances,
)

__version__ = "0.1.0"
