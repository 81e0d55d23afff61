"""Hyperparameter containers for the two model variants."""

from dataclasses import asdict, dataclass, fields

from .errors import DomainError
from .solvers import MODES


@dataclass
class TrainConfig:
    """Discrete-time training settings.

    lambda0, lambda1, lambda2
        Weights of the dynamics-fidelity term, the l1 penalty on the latent
        state and the l1 penalty on the dynamics coefficients.
    tau
        l1 budget of the coefficients in ``constrained`` mode.
    eta_D, eta_f
        Initial learning rates, multiplied by ``gamma`` after every epoch.
    perturb_sigma
        Std of the Gaussian kick given to each operator on a plateau.
    solver_max_iter
        Iteration cap of the coefficient solver; ``None`` means 10 for the
        constrained solver and 500 for the penalized one.
    """

    lambda0: float = 1.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    tau: float = 0.3
    solver_mode: str = "constrained"
    eta_D: float = 1.0
    eta_f: float = 30.0
    gamma: float = 0.99
    perturb_sigma: float = 0.1
    max_epochs: int = 6000
    conv_tol: float = 1e-8
    rng_seed: int = 0
    solver_tol: float = 1e-10
    solver_max_iter: int = None
    inference_rounds: int = 2
    plateau_window: int = 2

    def __post_init__(self):
        for name in ("lambda0", "lambda1", "lambda2", "tau", "perturb_sigma"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.solver_mode not in MODES:
            raise DomainError(f"solver_mode must be one of {MODES}")
        if self.eta_D <= 0 or self.eta_f <= 0:
            raise DomainError("learning rates must be positive")
        if not 0 < self.gamma <= 1:
            raise DomainError("gamma must lie in (0, 1]")
        if self.conv_tol <= 0:
            raise DomainError("conv_tol must be positive")
        if self.max_epochs < 0 or self.inference_rounds < 1 or self.plateau_window < 1:
            raise DomainError("max_epochs >= 0, inference_rounds >= 1, plateau_window >= 1")

    @property
    def coef_max_iter(self):
        if self.solver_max_iter is not None:
            return self.solver_max_iter
        return 10 if self.solver_mode == "constrained" else 500

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class CtTrainConfig:
    """Continuous-time training settings.

    lambda_c
        l1 weight on the coefficients.
    lambda_G
        Frobenius (weight-decay) penalty on the generators.
    eta_G, eta_c
        Learning rates for generators and coefficients, decayed by
        ``gamma`` per epoch.
    inner_c_iters, c_tol
        Iteration cap and relative-decrease tolerance of each pair's
        coefficient search; ``eta_c`` is its initial step.
    c_init_sigma
        Std of the Gaussian draw that initialises each pair's coefficients.
    warm_start
        Start each pair's coefficient search from the previous epoch's
        value instead of a fresh draw.
    """

    lambda_c: float = 0.1
    lambda_G: float = 1.0
    eta_G: float = 0.1
    eta_c: float = 0.01
    gamma: float = 0.985
    inner_c_iters: int = 100
    c_tol: float = 1e-5
    inner_G_iters: int = 1
    max_epochs: int = 100
    conv_tol: float = 1e-10
    c_init_sigma: float = 0.1
    warm_start: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.lambda_c < 0 or self.lambda_G < 0:
            raise DomainError("penalties must be >= 0")
        if self.eta_G <= 0 or self.eta_c <= 0:
            raise DomainError("learning rates must be positive")
        if not 0 < self.gamma <= 1:
            raise DomainError("gamma must lie in (0, 1]")
        if self.inner_c_iters < 0 or self.inner_G_iters < 0 or self.max_epochs < 0:
            raise DomainError("iteration counts must be >= 0")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})
