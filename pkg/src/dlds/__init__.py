"""Decomposed linear dynamical systems.

Time-varying dynamics written as sparse, time-varying mixtures of a small
dictionary of linear operators, in discrete time (``x_t = sum_m c_mt f_m x_{t-1}``
observed through ``y_t = D x_t``) and in continuous time
(``x_{t+1} = expm(sum_l c_lt G_l) x_t``).
"""

from .config import CtTrainConfig, TrainConfig
from .continuous import ContinuousModel, train_continuous
from .discrete import (CoefficientPath, DiscreteModel, infer_sequence, infer_step,
                       one_step_predict, train_discrete, train_identity_observation)
from .errors import (DimensionError, DivergenceError, DomainError, IntegrityError,
                     ParseError, VersionError)
from .experiments import ExperimentConfig, load_config, preset, run_experiment
from .io import load_csv, load_model, save_model
from .linalg import expm, expm_frechet, frobenius_norm, operator_norm
from .metrics import align_dictionaries, evaluate, pearson_r, r2_score
from .solvers import LassoProblem, solve
from .systems import SystemSpec, generate
from .trajectory import Trajectory

__version__ = "0.1.0"
