import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from domain.entities.fock import Operator, Space
from domain.entities.model import CatModel
from domain.entities.trajectory import IntegratorConfig, Trajectory
from domain.exceptions import NotConvergedError
from domain.services import fock_core as fc
from domain.services.cat_model import projector_HL
from domain.services.diagnostics import (
    energy_bound_check,
    energy_observables,
    extrapolate_limit,
    lyapunov_scan,
    truncated_state_monotonicity,
)
from domain.services.evolve import DEFAULT_LEAKAGE_CEILING, DEFAULT_ORACLE_MAX_DIM, apply_propagator, evolve, propagator_expm

logger = logging.getLogger(__name__)


class ConvergenceEngine:
    def __init__(self, oracle_max_dim: int = DEFAULT_ORACLE_MAX_DIM, limit_threshold: float = 0.99,
                 leakage_ceiling: Optional[float] = DEFAULT_LEAKAGE_CEILING):
        self.oracle_max_dim = oracle_max_dim
        self.limit_threshold = limit_threshold
        self.leakage_ceiling = leakage_ceiling

    def observers(self, model: CatModel) -> Dict[str, Operator]:
        V, _ = energy_observables(model)
        return {
            "mass_HL": projector_HL(model),
            "energy_V": V,
            "buffer_excitation": fc.embed_b(fc.number(model.dims.nb, Space.B), model.dims.na),
        }

    def run(self, model: CatModel, rho0: Operator, cfg: IntegratorConfig) -> Trajectory:
        return evolve(model, rho0, cfg, self.observers(model), self.leakage_ceiling)

    def summarize(self, traj: Trajectory) -> Dict[str, Any]:
        mass = traj.observables["mass_HL"].real
        reached = np.nonzero(mass >= self.limit_threshold)[0]
        return {
            "final_mass": float(mass[-1]),
            "max_mass_decrease": float(max(0.0, -np.diff(mass).min())) if len(mass) > 1 else 0.0,
            "time_mass_099": float(traj.times[reached[0]]) if reached.size else None,
            "max_trace_drift": traj.max_trace_drift,
            "max_hermiticity_drift": traj.max_hermiticity_drift,
            "max_leakage": float(traj.leakage.max()),
            "n_steps": traj.n_steps,
            "rejected_steps": traj.rejected_steps,
        }

    def check(self, model: CatModel, rho0: Operator, traj: Trajectory, mu_grid: Sequence[float],
              c2_grid: Sequence[float], interior_margin: int) -> Dict[str, Any]:
        """
        Snapshot-based checks: oracle distance (small dims only), truncated-state
        monotonicity, limit extrapolation and the Lyapunov energy bound.
        """
        report: Dict[str, Any] = {"min_eigenvalue": traj.min_eigenvalue()}
        if model.dims.joint <= self.oracle_max_dim:
            reference = apply_propagator(propagator_expm(model, traj.final_time, self.oracle_max_dim), rho0)
            report["oracle_trace_distance"] = fc.trace_norm(traj.snapshots[-1] - reference)
        report["truncated_state_min_increment"] = min(truncated_state_monotonicity(traj.snapshots, model), default=0.0)

        try:
            limit = extrapolate_limit(traj, model, self.limit_threshold)
        except NotConvergedError as exc:
            logger.info(f"No limit estimate: {exc.message}")
            report["limit"] = {"converged": False, **exc.details}
        else:
            gaps = np.abs(np.array(limit.cauchy_increments) - np.array(limit.trace_increments))
            report["limit"] = {
                "converged": True,
                "distance": limit.distance,
                "off_manifold_mass": limit.off_manifold_mass,
                "max_cauchy_trace_gap": float(np.max(gaps, initial=0.0)),
            }

        certificate = lyapunov_scan(model, mu_grid, c2_grid, interior_margin)
        if certificate.feasible:
            report["energy_bound"] = energy_bound_check(traj, model, certificate)
        return report
