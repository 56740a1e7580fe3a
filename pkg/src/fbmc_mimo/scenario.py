"""Scenario description shared by the experiment runners and the config parser."""

from dataclasses import dataclass, replace

from .blind import BlindConfig
from .channel import PowerDelayProfile
from .combining import ContaminationConfig
from .errors import ConfigurationError
from .filterbank import FbmcConfig

EXPERIMENTS = ("self_equalization", "blind_tracking")


@dataclass(frozen=True)
class Scenario:
    fbmc: FbmcConfig
    pdp: PowerDelayProfile
    M: int
    K: int
    snr_in_db: float
    contamination: ContaminationConfig = None
    blind: BlindConfig = None
    trials: int = 100
    seed: int = 0
    experiment: str = "self_equalization"
    workers: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ConfigurationError(f"array.M must be >= 1, got {self.M}")
        if self.K < 1:
            raise ConfigurationError(f"array.K must be >= 1, got {self.K}")
        if self.trials < 1:
            raise ConfigurationError(f"run.trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigurationError(f"run.workers must be >= 1, got {self.workers}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"run.experiment must be one of {EXPERIMENTS}, got {self.experiment!r}"
            )
        if self.pdp.max_delay >= self.fbmc.L:
            raise ConfigurationError(
                f"channel.delays reach {self.pdp.max_delay} samples, must be < L={self.fbmc.L}"
            )
        if self.experiment == "blind_tracking":
            if self.contamination is None:
                object.__setattr__(self, "contamination", ContaminationConfig())
            if self.blind is None:
                object.__setattr__(self, "blind", BlindConfig())
            if self.blind.init == "custom":
                raise ConfigurationError("blind.init = custom cannot be used from a scenario run")

    def replace(self, **changes):
        return replace(self, **changes)
