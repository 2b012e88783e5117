"""Time integration of dρ/dt = Gρ + ρG† + Σ γ JρJ† and its Heisenberg dual.

Vectorization stacks columns: vec(AρB†) = (conj(B) ⊗ A) vec(ρ).
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import expm, svdvals

from domain.entities.fock import FockDims, Operator, Space
from domain.entities.model import CatModel
from domain.entities.trajectory import IntegratorConfig, StepResult, Trajectory
from domain.exceptions import (
    IntegrationDivergedError,
    InvalidArgumentError,
    InvalidDimensionError,
    OracleTooLargeError,
    TruncationBreachError,
)
from domain.services import fock_core as fc

logger = logging.getLogger(__name__)

DEFAULT_LEAKAGE_CEILING = 1e-3
DEFAULT_ORACLE_MAX_DIM = 40


@dataclass(frozen=True, eq=False)
class Generator:
    """Lindblad generator written as a drift G plus weighted jump operators."""
    space: Space
    dims: FockDims
    G: sparse.csr_matrix
    Gd: sparse.csr_matrix
    jumps: Tuple[Tuple[float, sparse.csr_matrix, sparse.csr_matrix], ...]
    band: int

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        out = self.G @ rho
        out += (self.G @ rho.conj().T).conj().T
        for rate, J, Jd in self.jumps:
            out += rate * (J @ (Jd.T @ rho.T).T)
        return out

    def adjoint_rhs(self, X: np.ndarray) -> np.ndarray:
        out = self.Gd @ X
        out += (self.Gd @ X.conj().T).conj().T
        for rate, J, Jd in self.jumps:
            out += rate * (Jd @ (J.T @ X.T).T)
        return out

    def superoperator(self) -> np.ndarray:
        n = self.dim
        eye = np.eye(n)
        G = self.G.toarray()
        S = np.kron(eye, G) + np.kron(G.conj(), eye)
        for rate, J, _ in self.jumps:
            Jm = J.toarray()
            S += rate * np.kron(Jm.conj(), Jm)
        return S


def make_generator(drift: np.ndarray, jumps: Sequence[Tuple[float, np.ndarray]], space: Space, dims: FockDims, band: int) -> Generator:
    G = sparse.csr_matrix(drift)
    return Generator(
        space=space,
        dims=dims,
        G=G,
        Gd=sparse.csr_matrix(G.conj().T),
        jumps=tuple((float(rate), sparse.csr_matrix(J), sparse.csr_matrix(np.conj(J).T)) for rate, J in jumps),
        band=band,
    )


def model_generator(model: CatModel) -> Generator:
    return make_generator(
        model.G.entries,
        [(rate, J.entries) for rate, J in model.lindblad_ops],
        Space.AB,
        model.dims,
        band=model.params.k,
    )


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.flatten(order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return v.reshape((n, n), order="F")


def superoperator(model: CatModel) -> np.ndarray:
    return model_generator(model).superoperator()


def spectral_norm_estimate(X: np.ndarray, iterations: int = 50, seed: int = 7) -> float:
    """Power iteration on X†X; cheap estimate of ||X||_2."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(X.shape[0]) + 1j * rng.standard_normal(X.shape[0])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = X.conj().T @ (X @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        estimate = np.sqrt(norm)
    return float(estimate)


def default_dt(model: CatModel) -> float:
    h_norm = spectral_norm_estimate(model.H.entries)
    candidates = [0.01, 0.1 / model.params.kappa]
    if h_norm > 0:
        candidates.append(0.1 / h_norm)
    return float(min(candidates))


def _rk4(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _enforce(rho: np.ndarray) -> Tuple[np.ndarray, float, float]:
    herm_drift = float(np.linalg.norm(rho - rho.conj().T))
    trace = np.trace(rho)
    trace_drift = float(abs(trace - 1.0))
    rho = 0.5 * (rho + rho.conj().T)
    return rho / trace.real, trace_drift, herm_drift


def _check_finite(rho: np.ndarray, step: int, time: float, dt: float):
    if not np.all(np.isfinite(rho)):
        raise IntegrationDivergedError(step=step, time=time, dt=dt)


def _check_state(rho: Operator, dim: int):
    if rho.entries.shape != (dim, dim):
        raise InvalidDimensionError(f"State has shape {rho.entries.shape}, generator expects {dim}")
    if abs(rho.trace() - 1.0) > 1e-8:
        raise InvalidArgumentError(f"State trace {rho.trace():.10f} is not 1")


def step(model: CatModel, rho: Operator, dt: float) -> StepResult:
    gen = model_generator(model)
    _check_state(rho, gen.dim)
    raw = _rk4(gen.rhs, np.array(rho.entries), dt)
    _check_finite(raw, 1, dt, dt)
    new, trace_drift, herm_drift = _enforce(raw)
    return StepResult(Operator(rho.space, new, rho.dims), trace_drift, herm_drift)


class _Recorder:
    def __init__(self, gen: Generator, observers: Dict[str, Operator], snapshot: bool, leakage_ceiling: Optional[float]):
        self.names = list(observers)
        self.transposed = [observers[name].entries.T for name in self.names]
        self.top = np.real(np.diag(fc.top_band_projector(gen.dims, gen.band, gen.space).entries))
        self.snapshot = snapshot
        self.ceiling = leakage_ceiling
        self.space, self.dims = gen.space, gen.dims
        self.times: List[float] = []
        self.values: List[List[complex]] = []
        self.leakage: List[float] = []
        self.snapshots: List[Operator] = []

    def record(self, t: float, rho: np.ndarray):
        leak = float(np.real(np.diag(rho)) @ self.top)
        if self.ceiling is not None and leak > self.ceiling:
            logger.warning(f"Truncation breach at t={t:.4g}: leakage {leak:.3e}")
            raise TruncationBreachError(time=t, leakage=leak, ceiling=self.ceiling)
        self.times.append(t)
        self.values.append([complex(np.sum(rho * XT)) for XT in self.transposed])
        self.leakage.append(leak)
        if self.snapshot:
            self.snapshots.append(Operator(self.space, rho, self.dims))

    def trajectory(self, **stats) -> Trajectory:
        values = np.array(self.values, dtype=complex).reshape(len(self.times), len(self.names))
        return Trajectory(
            times=np.array(self.times),
            observables={name: values[:, i] for i, name in enumerate(self.names)},
            leakage=np.array(self.leakage),
            snapshots=self.snapshots if self.snapshot else None,
            **stats,
        )


def integrate(
    gen: Generator,
    rho0: Operator,
    cfg: IntegratorConfig,
    observers: Optional[Dict[str, Operator]] = None,
    leakage_ceiling: Optional[float] = DEFAULT_LEAKAGE_CEILING,
) -> Trajectory:
    _check_state(rho0, gen.dim)
    recorder = _Recorder(gen, observers or {}, cfg.snapshot_states, leakage_ceiling)
    rho = np.array(rho0.entries)
    recorder.record(0.0, rho)

    n_steps = cfg.n_steps
    checkpoints = list(range(cfg.record_every, n_steps + 1, cfg.record_every))
    if not checkpoints or checkpoints[-1] != n_steps:
        checkpoints.append(n_steps)

    stats = {"max_trace_drift": 0.0, "max_hermiticity_drift": 0.0, "n_steps": 0, "rejected_steps": 0}
    done = 0
    h = cfg.dt
    for checkpoint in checkpoints:
        t_start, t_end = cfg.step_end(done), cfg.step_end(checkpoint)
        if cfg.method == "rk4_fixed":
            for i in range(done, checkpoint):
                h_i = cfg.step_end(i + 1) - cfg.step_end(i)
                raw = _rk4(gen.rhs, rho, h_i)
                _check_finite(raw, i + 1, cfg.step_end(i + 1), h_i)
                rho = _accept(raw, stats)
        else:
            rho, h = _adaptive_segment(gen, rho, t_start, t_end, h, cfg.rel_tol, stats)
        done = checkpoint
        recorder.record(t_end, rho)
        logger.debug(f"t={t_end:.4g} recorded ({stats['n_steps']} steps)")

    return recorder.trajectory(**stats)


def _accept(raw: np.ndarray, stats: Dict) -> np.ndarray:
    rho, trace_drift, herm_drift = _enforce(raw)
    stats["max_trace_drift"] = max(stats["max_trace_drift"], trace_drift)
    stats["max_hermiticity_drift"] = max(stats["max_hermiticity_drift"], herm_drift)
    stats["n_steps"] += 1
    return rho


def _adaptive_segment(gen: Generator, rho: np.ndarray, t: float, t_end: float, h: float, tol: float, stats: Dict):
    """Step doubling: one step of h against two of h/2, error in trace norm."""
    while t < t_end - 1e-14:
        h = min(h, t_end - t)
        full = _rk4(gen.rhs, rho, h)
        half = _rk4(gen.rhs, _rk4(gen.rhs, rho, h / 2), h / 2)
        _check_finite(half, stats["n_steps"] + 1, t + h, h)
        err = float(np.sum(svdvals(half - full))) / 15.0
        if err <= tol or h < 1e-10:
            rho = _accept(half, stats)
            t += h
        else:
            stats["rejected_steps"] += 1
        factor = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        h *= factor
    return rho, h


def evolve(
    model: CatModel,
    rho0: Operator,
    cfg: IntegratorConfig,
    observers: Optional[Dict[str, Operator]] = None,
    leakage_ceiling: Optional[float] = DEFAULT_LEAKAGE_CEILING,
) -> Trajectory:
    return integrate(model_generator(model), rho0, cfg, observers, leakage_ceiling)


def oracle_propagator(gen: Generator, t: float, max_dim: int = DEFAULT_ORACLE_MAX_DIM) -> np.ndarray:
    if gen.dim > max_dim:
        raise OracleTooLargeError(
            f"Joint dimension {gen.dim} exceeds oracle ceiling {max_dim} "
            f"(superoperator {gen.dim ** 2}x{gen.dim ** 2})",
            dim=gen.dim, max_dim=max_dim,
        )
    return expm(t * gen.superoperator())


def propagator_expm(model: CatModel, t: float, max_dim: int = DEFAULT_ORACLE_MAX_DIM) -> np.ndarray:
    return oracle_propagator(model_generator(model), t, max_dim)


def apply_propagator(P: np.ndarray, rho: Operator) -> Operator:
    return Operator(rho.space, unvec(P @ vec(rho.entries), rho.dim), rho.dims)


def heisenberg_integrate(gen: Generator, X: Operator, t: float, dt: float) -> Operator:
    if t < 0:
        raise InvalidArgumentError(f"t must be >= 0, got {t}")
    out = np.array(X.entries)
    n_full = int(np.floor(t / dt + 1e-9))
    for i in range(n_full):
        out = _rk4(gen.adjoint_rhs, out, dt)
        _check_finite(out, i + 1, (i + 1) * dt, dt)
    rest = t - n_full * dt
    if rest > 1e-12:
        out = _rk4(gen.adjoint_rhs, out, rest)
        _check_finite(out, n_full + 1, t, rest)
    return Operator(X.space, out, X.dims)


def heisenberg_evolve(model: CatModel, X: Operator, t: float, cfg: IntegratorConfig) -> Operator:
    return heisenberg_integrate(model_generator(model), X, t, cfg.dt)


def order_study(model: CatModel, rho0: Operator, t: float, dts: Sequence[float]) -> Dict[str, object]:
    """Fit the convergence order of fixed-step RK4 against the expm oracle."""
    reference = apply_propagator(propagator_expm(model, t), rho0)
    errors = []
    for dt in dts:
        traj = evolve(model, rho0, IntegratorConfig(dt=dt, t_max=t, record_every=10 ** 9, snapshot_states=True), leakage_ceiling=None)
        errors.append(fc.trace_norm(traj.snapshots[-1] - reference))
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return {"dts": list(dts), "errors": errors, "slope": slope}


def trajectory_rows(traj: Trajectory) -> Tuple[List[str], List[List[str]]]:
    """CSV layout: t, <name>_re, <name>_im per observable, leakage."""
    names = list(traj.observables)
    header = ["t"] + [f"{n}_{part}" for n in names for part in ("re", "im")] + ["leakage"]
    rows = []
    for i, t in enumerate(traj.times):
        row = [repr(float(t))]
        for n in names:
            value = traj.observables[n][i]
            row += [repr(float(value.real)), repr(float(value.imag))]
        row.append(repr(float(traj.leakage[i])))
        rows.append(row)
    return header, rows
