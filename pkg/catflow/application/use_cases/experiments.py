import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np

from config import __version__
from domain.entities.fock import FockDims, Ket, Operator, Space
from domain.entities.model import CatModel
from domain.entities.reports import SweepPoint, jsonable
from domain.exceptions import (
    CatflowError,
    ConfigValidationError,
    InvalidArgumentError,
    InvalidDimensionError,
    InvalidParamsError,
)
from domain.repositories.interfaces import IArtifactRepository, IPlotRenderer
from domain.services import fock_core as fc
from domain.services.adiabatic import run_comparison, summarize_sweep, sweep_point
from domain.services.cat_model import build_model, commutator_identity_residuals
from domain.services.convergence_engine import ConvergenceEngine
from domain.services.density_span import generate_joint_span, span_single_mode, triangular_structure_check
from domain.services.diagnostics import (
    block_positivity_check,
    corollary_recursion,
    generator_absorption_min_eig,
    lyapunov_scan,
    relative_bound_constant,
)
from domain.services.bargmann import newman_shapiro_witness
from domain.services.evolve import DEFAULT_ORACLE_MAX_DIM, trajectory_rows
from interfaces.config import RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONFIG_ERRORS = (ConfigValidationError, InvalidArgumentError, InvalidDimensionError, InvalidParamsError)


def mode_a_state(config: RunConfig, model: CatModel) -> Ket:
    initial, na = config.initial_state, model.dims.na
    if initial is None:
        raise InvalidArgumentError(f"{config.experiment} needs an initial_state")
    if initial.kind == "fock":
        if initial.n >= na:
            raise InvalidArgumentError(f"Fock level {initial.n} outside na={na}")
        return fc.basis_ket(na, initial.n)
    if initial.kind == "coherent":
        return fc.coherent_state(initial.z, na, tail_tolerance=1e-8)
    base = model.kernel.vectors[0].amplitudes
    if initial.random:
        rng = np.random.default_rng(config.seed)
        direction = rng.standard_normal(na) + 1j * rng.standard_normal(na)
    else:
        direction = fc.basis_ket(na, model.params.k).amplitudes
    direction = direction / np.linalg.norm(direction)
    return Ket(Space.A, base + initial.epsilon * direction, FockDims(na=na)).normalize()


def initial_density(config: RunConfig, model: CatModel) -> Operator:
    initial, nb = config.initial_state, model.dims.nb
    m = initial.m if initial is not None and initial.kind == "fock" else 0
    if m >= nb:
        raise InvalidArgumentError(f"Buffer level {m} outside nb={nb}")
    return fc.tensor_ket(mode_a_state(config, model), fc.basis_ket(nb, m, Space.B)).projector()


class SimulateUseCase:
    def __init__(self, repository: IArtifactRepository, plotter: IPlotRenderer,
                 oracle_max_dim: int = DEFAULT_ORACLE_MAX_DIM):
        self.repository = repository
        self.plotter = plotter
        self.oracle_max_dim = oracle_max_dim

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        model = build_model(config.model)
        engine = ConvergenceEngine(self.oracle_max_dim, leakage_ceiling=config.leakage_ceiling)
        rho0 = initial_density(config, model)

        # 1. Integrate
        traj = engine.run(model, rho0, config.integrator)
        header, rows = trajectory_rows(traj)
        self.repository.write_rows("series.csv", header, rows)
        report = engine.summarize(traj)

        # 2. Limit and energy bound need snapshots
        if traj.snapshots:
            lyap = config.section("lyapunov")
            margin = lyap.get("interior_margin") or 2 * config.model.k
            report.update(engine.check(model, rho0, traj, lyap["mu_grid"], lyap["c2_grid"], margin))

        # 3. Plots
        self.plotter.line_plot(self.repository.path("mass.svg"), traj.times, {"Tr(rho Pi_L)": traj.observables["mass_HL"].real},
                               "t", "mass on H_L", "Mass on the kernel manifold")
        self.plotter.line_plot(self.repository.path("energy.svg"), traj.times,
                               {"Tr(V rho)": traj.observables["energy_V"].real,
                                "Tr(b†b rho)": traj.observables["buffer_excitation"].real},
                               "t", "energy", "Energy observables")
        return report


class SweepKappaUseCase:
    def __init__(self, repository: IArtifactRepository, plotter: IPlotRenderer, workers: int = 1):
        self.repository = repository
        self.plotter = plotter
        self.workers = max(1, workers)

    async def _run_points(self, config: RunConfig, rho_a0: np.ndarray) -> List[SweepPoint]:
        sweep = config.section("sweep")
        semaphore = asyncio.Semaphore(self.workers)
        loop = asyncio.get_running_loop()

        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            async def run_point(kappa: float) -> SweepPoint:
                async with semaphore:
                    point = await loop.run_in_executor(pool, sweep_point, config.model, kappa, rho_a0, sweep["t"])
                self.repository.write_rows(
                    f"points/kappa_{kappa:g}.csv",
                    ["kappa", "t", "error", "buffer_excitation", "dt"],
                    [[repr(point.kappa), repr(point.t), repr(point.error), repr(point.buffer_excitation), repr(point.dt)]],
                )
                return point

            return await asyncio.gather(*(run_point(k) for k in sweep["kappas"]))

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        model = build_model(config.model)
        rho_a0 = np.array(mode_a_state(config, model).projector().entries)
        kappas = sorted(config.section("sweep")["kappas"])

        points = asyncio.run(self._run_points(config, rho_a0))
        result = summarize_sweep(points)

        self.repository.merge_rows([f"points/kappa_{k:g}.csv" for k in kappas], "series.csv")
        self.plotter.line_plot(self.repository.path("adiabatic_error.svg"), [p.kappa for p in result.points],
                               {"error(t)": [p.error for p in result.points]},
                               "kappa", "||rho - rho_a (x) |0><0| ||_1", "Adiabatic error vs kappa",
                               log_x=True, log_y=True)
        return {
            "points": jsonable(result.points),
            "slope": result.slope,
            "strictly_decreasing": result.strictly_decreasing,
            "monotone_within_slack": result.monotone_within_slack,
            "slope_below_threshold": result.slope_below_threshold,
        }


class DensityCheckUseCase:
    def __init__(self, repository: IArtifactRepository, plotter: IPlotRenderer, threshold: float = 1e-8):
        self.repository = repository
        self.plotter = plotter
        self.threshold = threshold

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        density = config.section("density")
        params = config.model
        model = build_model(params)

        joint = generate_joint_span(model, density["degree_budget"],
                                    FockDims(na=density["interior_na"], nb=density["interior_nb"]), self.threshold)
        single_na = density.get("single_mode_interior_na") or params.dims.na - 2 * params.k
        singles = {
            variant: span_single_mode(params, variant, density["single_mode_budget"], single_na, self.threshold)
            for variant in ("ELa", "ELa_plus_ELsharp")
        }
        triangular = triangular_structure_check(params)

        width = max(joint.target_dim, single_na)
        columns = [joint.residual_spectrum] + [s.residual_spectrum for s in singles.values()]
        rows = [[i] + [repr(c[i]) if i < len(c) else "" for c in columns] for i in range(width)]
        self.repository.write_rows("spectrum.csv", ["index", "joint", "ELa", "ELa_plus_ELsharp"], rows)
        self.plotter.bar_plot(self.repository.path("residual_spectrum.svg"), joint.residual_spectrum,
                              "singular value index", "singular value", "Joint span on the interior",
                              log_y=True, threshold=self.threshold * max(joint.residual_spectrum[0], 1e-300))
        return {
            "joint": jsonable(joint),
            "joint_full_rank": joint.full_rank,
            "single_mode": {name: {**jsonable(r), "matches_prediction": r.matches_prediction} for name, r in singles.items()},
            "triangular": jsonable(triangular),
            "commutator_residuals": commutator_identity_residuals(model),
        }


class LyapunovCheckUseCase:
    def __init__(self, repository: IArtifactRepository):
        self.repository = repository

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        lyap = config.section("lyapunov")
        model = build_model(config.model)
        margin = lyap.get("interior_margin") or 2 * config.model.k
        report = lyapunov_scan(model, lyap["mu_grid"], lyap["c2_grid"], margin)
        self.repository.write_rows(
            "spectrum.csv", ["c2", "c1", "min_eig", "bound"],
            [[repr(c["c2"]), repr(c["c1"]), repr(c["min_eig"]), repr(c["bound"])] for c in report.candidates],
        )
        return {
            "certificate": jsonable(report),
            "bound": report.bound,
            "relative_bound_constant_eps_0_5": relative_bound_constant(model, 0.5, margin),
        }


class AdiabaticCompareUseCase:
    def __init__(self, repository: IArtifactRepository, plotter: IPlotRenderer):
        self.repository = repository
        self.plotter = plotter

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        model = build_model(config.model)
        rho_a0 = mode_a_state(config, model).projector()
        cfg = config.integrator
        comparison = run_comparison(model, rho_a0, cfg.t_max, record_every=cfg.record_every, dt=cfg.dt)
        self.repository.write_rows(
            "series.csv", ["t", "error", "buffer_excitation"],
            [[repr(float(t)), repr(float(e)), repr(float(b))]
             for t, e, b in zip(comparison.times, comparison.errors, comparison.buffer_excitation)],
        )
        self.plotter.line_plot(self.repository.path("adiabatic_error.svg"), comparison.times,
                               {"error": comparison.errors}, "t", "trace-norm gap", "Full vs reduced dynamics")
        return {"final_error": comparison.final_error, "max_error": float(comparison.errors.max()),
                "kappa_tilde": 4.0 / config.model.kappa}


class BlockCheckUseCase:
    def __init__(self, repository: IArtifactRepository):
        self.repository = repository

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        block = config.section("block")
        model = build_model(config.model)
        reports = [block_positivity_check(model, t, config.integrator) for t in block["times"]]
        self.repository.write_rows(
            "series.csv",
            ["t", "kernel_block_defect", "off_diagonal_norm", "complement_min_eig", "spectrum_min", "spectrum_max",
             "absorption_min_eig"],
            [[repr(r.t), repr(r.kernel_block_defect), repr(r.off_diagonal_norm), repr(r.complement_min_eig),
              repr(r.spectrum_min), repr(r.spectrum_max), repr(r.absorption_min_eig)] for r in reports],
        )
        k = config.model.k
        if config.initial_state is not None:
            rho0 = initial_density(config, model)
        else:
            rho0 = fc.tensor_ket(fc.basis_ket(model.dims.na, k), fc.basis_ket(model.dims.nb, 0, Space.B)).projector()
        recursion = corollary_recursion(model, rho0, block["recursion_t0"], block["recursion_steps"], config.integrator)
        return {
            "blocks": [{**jsonable(r), "block_diagonal": r.block_diagonal} for r in reports],
            "complement_min_eig_monotone": all(b.complement_min_eig >= a.complement_min_eig - 1e-9
                                               for a, b in zip(reports, reports[1:])),
            "generator_absorption_min_eig": generator_absorption_min_eig(model),
            "recursion": {**jsonable(recursion), "holds": recursion.holds},
        }


class NSWitnessUseCase:
    def __init__(self, repository: IArtifactRepository, threshold: float = 1e-8):
        self.repository = repository
        self.threshold = threshold

    def execute(self, config: RunConfig) -> Dict[str, Any]:
        witness = config.section("witness")
        report = newman_shapiro_witness(config.model, witness["interior_na"], witness["family"],
                                        witness["zero_order"], self.threshold)
        self.repository.write_rows("spectrum.csv", ["index", "singular_value"],
                                   [[i, repr(s)] for i, s in enumerate(report.singular_values)])
        return {**jsonable(report), "passed": report.passed, "max_angle": report.max_angle}


class RunExperimentUseCase:
    def __init__(self, repository: IArtifactRepository, plotter: IPlotRenderer, workers: int = 1,
                 rank_threshold: float = 1e-8, oracle_max_dim: int = DEFAULT_ORACLE_MAX_DIM):
        self.repository = repository
        self.handlers = {
            "simulate": SimulateUseCase(repository, plotter, oracle_max_dim),
            "sweep-kappa": SweepKappaUseCase(repository, plotter, workers),
            "density-check": DensityCheckUseCase(repository, plotter, rank_threshold),
            "lyapunov-check": LyapunovCheckUseCase(repository),
            "adiabatic-compare": AdiabaticCompareUseCase(repository, plotter),
            "block-check": BlockCheckUseCase(repository),
            "ns-witness": NSWitnessUseCase(repository, rank_threshold),
        }

    def _manifest(self, config: RunConfig, status: str, started: float, extra: Optional[Dict] = None):
        self.repository.write_json("manifest.json", {
            "experiment": config.experiment,
            "config": config.resolved,
            "version": __version__,
            "status": status,
            "wall_time_seconds": time.perf_counter() - started,
            **(extra or {}),
        })

    def execute(self, config: RunConfig) -> int:
        started = time.perf_counter()
        self._manifest(config, "running", started)
        logger.info(f"Starting {config.experiment} in {config.output_dir}")
        try:
            report = self.handlers[config.experiment].execute(config)
        except CatflowError as exc:
            logger.error(f"{config.experiment} failed: {exc.message}")
            self.repository.write_json("failure.json", exc.to_dict())
            self._manifest(config, "failed", started, {"error": exc.kind})
            return EXIT_CONFIG if isinstance(exc, CONFIG_ERRORS) else EXIT_NUMERICAL

        self.repository.write_json("report.json", report)
        self._manifest(config, "succeeded", started)
        logger.info(f"Finished {config.experiment} in {time.perf_counter() - started:.1f}s")
        return EXIT_OK
