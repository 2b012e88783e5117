import logging
from typing import Dict, Optional, Sequence

import numpy as np

from domain.entities.fock import FockDims, Operator, Space
from domain.entities.model import CatModel, ModelParams
from domain.entities.reports import AdiabaticComparison, AdiabaticParams, SweepPoint, SweepResult
from domain.entities.trajectory import IntegratorConfig, Trajectory
from domain.exceptions import GridMismatchError, InvalidArgumentError
from domain.services import fock_core as fc
from domain.services.cat_model import build_model, lindblad_operator
from domain.services.evolve import DEFAULT_LEAKAGE_CEILING, default_dt, evolve, integrate, make_generator

logger = logging.getLogger(__name__)


def reduced_generator(params: AdiabaticParams):
    base = params.base
    L = lindblad_operator(base.k, base.alpha, base.dims.na).entries
    drift = -0.5 * params.kappa_tilde * (L.conj().T @ L)
    return make_generator(drift, [(params.kappa_tilde, L)], Space.A, FockDims(na=base.dims.na), band=base.k)


def reduced_evolve(
    params: AdiabaticParams,
    rho_a0: Operator,
    cfg: IntegratorConfig,
    observers: Optional[Dict[str, Operator]] = None,
    leakage_ceiling: Optional[float] = DEFAULT_LEAKAGE_CEILING,
) -> Trajectory:
    if rho_a0.space != Space.A:
        raise InvalidArgumentError(f"reduced_evolve needs a mode-a state, got {rho_a0.space.value}")
    return integrate(reduced_generator(params), rho_a0, cfg, observers, leakage_ceiling)


def lift(rho_a: Operator, nb: int) -> Operator:
    """rho_a (x) |0><0| on the joint space."""
    return fc.tensor(rho_a, fc.vacuum_projector(nb))


def compare_adiabatic(full: Trajectory, reduced: Trajectory, model: CatModel) -> AdiabaticComparison:
    if not full.snapshots or not reduced.snapshots:
        raise InvalidArgumentError("compare_adiabatic needs snapshots from both trajectories")
    if len(full.times) != len(reduced.times) or np.max(np.abs(full.times - reduced.times)) > 1e-12:
        raise GridMismatchError(
            f"Time grids differ ({len(full.times)} vs {len(reduced.times)} samples)",
            full_samples=len(full.times), reduced_samples=len(reduced.times),
        )
    nb = model.dims.nb
    n_b = fc.embed_b(fc.number(nb, Space.B), model.dims.na)
    errors, excitation = [], []
    for rho, rho_a in zip(full.snapshots, reduced.snapshots):
        errors.append(fc.trace_norm(rho - lift(rho_a, nb)))
        excitation.append(n_b.expectation(rho).real)
    return AdiabaticComparison(times=np.array(full.times), errors=np.array(errors), buffer_excitation=np.array(excitation))


def run_comparison(model: CatModel, rho_a0: Operator, t: float, record_every: int = 1,
                   dt: Optional[float] = None) -> AdiabaticComparison:
    """Full and reduced runs from rho_a0 (x) |0><0| on a shared grid."""
    dt = default_dt(model) if dt is None else dt
    cfg = IntegratorConfig(dt=dt, t_max=t, record_every=record_every, snapshot_states=True)
    full = evolve(model, lift(rho_a0, model.dims.nb), cfg)
    reduced = reduced_evolve(AdiabaticParams.from_base(model.params), rho_a0, cfg)
    return compare_adiabatic(full, reduced, model)


def sweep_point(base: ModelParams, kappa: float, rho_a0: np.ndarray, t: float) -> SweepPoint:
    """One kappa of the sweep; module-level so worker processes can pickle it."""
    model = build_model(base.with_kappa(kappa))
    state = Operator(Space.A, rho_a0, FockDims(na=base.dims.na))
    dt = default_dt(model)
    comparison = run_comparison(model, state, t, record_every=10 ** 9, dt=dt)
    logger.info(f"kappa={kappa}: error({t})={comparison.final_error:.4e}")
    return SweepPoint(kappa=float(kappa), t=float(t), error=comparison.final_error,
                      buffer_excitation=float(comparison.buffer_excitation[-1]), dt=dt)


def summarize_sweep(points: Sequence[SweepPoint], slack: float = 0.05) -> SweepResult:
    points = sorted(points, key=lambda p: p.kappa)
    errors = np.array([p.error for p in points])
    kappas = np.array([p.kappa for p in points])
    slope = None
    if len(points) >= 2 and np.all(errors > 0):
        slope = float(np.polyfit(np.log(kappas), np.log(errors), 1)[0])
    return SweepResult(
        points=list(points),
        slope=slope,
        strictly_decreasing=bool(np.all(np.diff(errors) < 0)),
        monotone_within_slack=bool(np.all(errors[1:] <= errors[:-1] * (1 + slack))),
    )


def kappa_sweep(base: ModelParams, kappas: Sequence[float], rho_a0: Operator, t: float) -> SweepResult:
    return summarize_sweep([sweep_point(base, kappa, np.array(rho_a0.entries), t) for kappa in kappas])
