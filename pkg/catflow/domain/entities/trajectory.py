from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from domain.entities.fock import Operator
from domain.exceptions import InvalidArgumentError

METHODS = ("rk4_fixed", "rk4_adaptive")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_max: float
    method: str = "rk4_fixed"
    rel_tol: float = 1e-6
    record_every: int = 1
    snapshot_states: bool = False

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max > 0:
            raise InvalidArgumentError(f"dt and t_max must be positive (dt={self.dt}, t_max={self.t_max})")
        if self.dt > self.t_max:
            raise InvalidArgumentError(f"dt={self.dt} exceeds t_max={self.t_max}")
        if self.method not in METHODS:
            raise InvalidArgumentError(f"Unknown method {self.method!r}; expected one of {METHODS}")
        if not 0 < self.rel_tol <= 1e-2:
            raise InvalidArgumentError(f"rel_tol must lie in (0, 1e-2], got {self.rel_tol}")
        if self.record_every < 1:
            raise InvalidArgumentError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(np.ceil(self.t_max / self.dt - 1e-9)))

    def step_end(self, i: int) -> float:
        """End time of step i; the last step is shortened to land on t_max."""
        return self.t_max if i >= self.n_steps else i * self.dt


@dataclass(frozen=True)
class StepResult:
    state: Operator
    trace_drift: float
    hermiticity_drift: float


@dataclass
class Trajectory:
    times: np.ndarray
    observables: Dict[str, np.ndarray]
    leakage: np.ndarray
    snapshots: Optional[List[Operator]] = None
    max_trace_drift: float = 0.0
    max_hermiticity_drift: float = 0.0
    n_steps: int = 0
    rejected_steps: int = 0
    metadata: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidArgumentError("Trajectory times must be strictly increasing")
        for name, series in self.observables.items():
            if len(series) != len(self.times):
                raise InvalidArgumentError(f"Observable {name!r} has {len(series)} samples for {len(self.times)} times")
        if len(self.leakage) != len(self.times):
            raise InvalidArgumentError("Leakage series length does not match the time grid")

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def min_eigenvalue(self) -> Optional[float]:
        if not self.snapshots:
            return None
        return min(float(np.linalg.eigvalsh(s.entries).min()) for s in self.snapshots)
