import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvalsh, null_space, orth

from domain.entities.fock import Operator, Space
from domain.entities.model import CatModel
from domain.entities.reports import BlockReport, CertificateReport, LimitEstimate, RecursionReport
from domain.entities.trajectory import IntegratorConfig, Trajectory
from domain.exceptions import InvalidArgumentError, NotConvergedError
from domain.services import fock_core as fc
from domain.services.cat_model import adjoint_lindbladian_apply, embedded_kernel, projector_HL
from domain.services.evolve import evolve, heisenberg_evolve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LyapunovConfig:
    mu: float
    interior_margin: int

    def validate(self, k: int):
        if not self.mu >= 0:
            raise InvalidArgumentError(f"mu must be >= 0, got {self.mu}")
        if self.interior_margin < 2 * k:
            raise InvalidArgumentError(f"interior_margin must be >= 2k = {2 * k}, got {self.interior_margin}")


def mass_on_HL(rho: Operator, model: CatModel, clamp: bool = True) -> float:
    Q = embedded_kernel(model)
    raw = float(np.real(np.trace(Q.conj().T @ rho.entries @ Q)))
    return min(1.0, max(0.0, raw)) if clamp else raw


def truncated_state(rho: Operator, model: CatModel) -> Operator:
    P = projector_HL(model)
    return P @ rho @ P


def _kernel_block(rho: Operator, model: CatModel) -> np.ndarray:
    Q = embedded_kernel(model)
    return Q.conj().T @ rho.entries @ Q


def truncated_state_monotonicity(snapshots: Sequence[Operator], model: CatModel) -> List[float]:
    """Smallest eigenvalue of r_{t_{i+1}} - r_{t_i} on range(Pi_L), per consecutive pair."""
    blocks = [_kernel_block(s, model) for s in snapshots]
    return [float(eigvalsh(0.5 * (d + d.conj().T)).min()) for d in (b1 - b0 for b0, b1 in zip(blocks, blocks[1:]))]


def extrapolate_limit(traj: Trajectory, model: CatModel, threshold: float = 0.99) -> LimitEstimate:
    if not traj.snapshots:
        raise InvalidArgumentError("extrapolate_limit needs a trajectory recorded with snapshot_states")
    final = traj.snapshots[-1]
    final_mass = mass_on_HL(final, model, clamp=False)
    if final_mass < threshold:
        raise NotConvergedError(final_mass=final_mass, threshold=threshold)

    r_final = truncated_state(final, model)
    rho_inf = r_final * (1.0 / r_final.trace().real)

    cauchy, trace_inc = [], []
    previous = truncated_state(traj.snapshots[0], model)
    for snapshot in traj.snapshots[1:]:
        current = truncated_state(snapshot, model)
        cauchy.append(fc.trace_norm(current - previous))
        trace_inc.append(float((current.trace() - previous.trace()).real))
        previous = current

    return LimitEstimate(
        rho_inf=rho_inf,
        final_mass=final_mass,
        distance=fc.trace_norm(final - rho_inf),
        off_manifold_mass=1.0 - mass_on_HL(rho_inf, model, clamp=False),
        cauchy_increments=cauchy,
        trace_increments=trace_inc,
    )


def energy_observables(model: CatModel) -> Tuple[Operator, Operator]:
    k, dims = model.params.k, model.dims
    n = np.arange(dims.na)[:, None]
    m = np.arange(dims.nb)[None, :]
    V = Operator(Space.AB, np.diag(((n / k + m) ** k).ravel().astype(complex)), dims)

    ak = fc.embed_a(fc.power(fc.annihilation(dims.na), k), dims.nb)
    b = model.b
    W = (ak @ b.adjoint() - ak.adjoint() @ b) * 1j
    return V, W


def _interior(model: CatModel, margin: int) -> np.ndarray:
    dims = model.dims
    b_limit = dims.nb - min(margin, dims.nb - 1)
    return fc.interior_indices(dims, dims.na - margin, b_limit)


def lyapunov_certificate(model: CatModel, cfg: LyapunovConfig, c2_grid: Sequence[float]) -> CertificateReport:
    """Search C1 I - C2 X - L*(X) >= 0 on the interior for X = V + mu W.

    For each C2 the smallest admissible C1 is lambda_max(C2 X + L*(X)); the
    reported pair minimises the bound C1/C2.
    """
    cfg.validate(model.params.k)
    V, W = energy_observables(model)
    X = V + W * cfg.mu
    Y = adjoint_lindbladian_apply(model, X)
    idx = _interior(model, cfg.interior_margin)
    X_int = fc.compress(X, idx)
    Y_int = fc.compress(Y, idx)

    best: Optional[Dict[str, float]] = None
    candidates = []
    for c2 in c2_grid:
        if c2 <= 0:
            continue
        M = c2 * X_int + Y_int
        c1 = float(eigvalsh(0.5 * (M + M.conj().T)).max())
        R = c1 * np.eye(len(idx)) - M
        min_eig = float(eigvalsh(0.5 * (R + R.conj().T)).min())
        if not np.isfinite(c1) or not np.isfinite(min_eig):
            continue
        row = {"c1": c1, "c2": float(c2), "min_eig": min_eig, "bound": c1 / c2}
        candidates.append(row)
        if row["min_eig"] >= -1e-8 and (best is None or row["bound"] < best["bound"]):
            best = row

    if best is None:
        logger.warning(f"No feasible Lyapunov pair for mu={cfg.mu} on {len(c2_grid)} grid points")
        return CertificateReport(c1=float("nan"), c2=0.0, min_eig=float("nan"), feasible=False,
                                 mu=cfg.mu, interior_margin=cfg.interior_margin, candidates=candidates)
    return CertificateReport(c1=best["c1"], c2=best["c2"], min_eig=best["min_eig"], feasible=True,
                             mu=cfg.mu, interior_margin=cfg.interior_margin, candidates=candidates)


def lyapunov_scan(model: CatModel, mu_grid: Sequence[float], c2_grid: Sequence[float], interior_margin: int) -> CertificateReport:
    """Best certificate over a mu grid (smallest C1/C2 among feasible reports)."""
    reports = [lyapunov_certificate(model, LyapunovConfig(mu, interior_margin), c2_grid) for mu in mu_grid]
    feasible = [r for r in reports if r.feasible]
    if not feasible:
        return reports[0]
    return min(feasible, key=lambda r: r.bound)


def relative_bound_constant(model: CatModel, eps: float, margin: int) -> float:
    """C(eps) = smallest C with ±W <= eps V + C on the interior."""
    V, W = energy_observables(model)
    idx = _interior(model, margin)
    V_int, W_int = fc.compress(V, idx), fc.compress(W, idx)
    return float(max(eigvalsh(W_int - eps * V_int).max(), eigvalsh(-W_int - eps * V_int).max()))


def energy_series(traj: Trajectory, model: CatModel, mu: float) -> np.ndarray:
    if not traj.snapshots:
        raise InvalidArgumentError("energy_series needs snapshots")
    V, W = energy_observables(model)
    X = V + W * mu
    return np.array([X.expectation(s).real for s in traj.snapshots])


def energy_bound_check(traj: Trajectory, model: CatModel, certificate: CertificateReport, tolerance: float = 1e-3) -> Dict[str, float]:
    series = energy_series(traj, model, certificate.mu)
    bound = max(float(series[0]), certificate.bound) + tolerance
    return {"max_energy": float(series.max()), "bound": bound, "holds": bool(series.max() <= bound)}


def _block_interior(model: CatModel, margin: int) -> np.ndarray:
    """a-levels < na - margin, b-levels < nb - 1."""
    return fc.interior_indices(model.dims, model.dims.na - margin, model.dims.nb - 1)


def _interior_min_eig(D: np.ndarray, idx: Optional[np.ndarray] = None) -> float:
    D = 0.5 * (D + D.conj().T)
    if idx is not None:
        D = D[np.ix_(idx, idx)]
    return float(eigvalsh(D).min())


def _complement_interior_basis(model: CatModel, margin: int) -> np.ndarray:
    dims = model.dims
    idx = _block_interior(model, margin)
    E = np.zeros((dims.joint, len(idx)), dtype=complex)
    E[idx, np.arange(len(idx))] = 1.0
    Q = embedded_kernel(model)
    return orth(E - Q @ (Q.conj().T @ E))


def block_positivity_check(model: CatModel, t: float, cfg: IntegratorConfig, margin: Optional[int] = None) -> BlockReport:
    margin = 2 * model.params.k if margin is None else margin
    T = heisenberg_evolve(model, projector_HL(model), t, cfg).entries
    T = 0.5 * (T + T.conj().T)

    Q = embedded_kernel(model)
    Qc = null_space(Q.conj().T)
    B = _complement_interior_basis(model, margin)

    kernel_block = Q.conj().T @ T @ Q
    spectrum = eigvalsh(T)
    report = BlockReport(
        t=float(t),
        kernel_block_defect=float(np.abs(kernel_block - np.eye(Q.shape[1])).max()),
        off_diagonal_norm=float(np.linalg.norm(Q.conj().T @ T @ Qc, 2)),
        complement_min_eig=float(eigvalsh(B.conj().T @ T @ B).min()),
        spectrum_min=float(spectrum.min()),
        spectrum_max=float(spectrum.max()),
        absorption_min_eig=_interior_min_eig(T - projector_HL(model).entries, _block_interior(model, margin)),
        interior_dims=[model.dims.na - margin, model.dims.nb - 1],
    )
    logger.info(f"Block check t={t}: complement min eig {report.complement_min_eig:.3e}")
    return report


def absorption_min_eig(model: CatModel, t: float, cfg: IntegratorConfig, margin: Optional[int] = None) -> float:
    """Smallest eigenvalue of T_t(Pi_L) - Pi_L.

    Without a margin the whole truncated space is used, so levels next to the
    cut take part and can push the value below zero at small na. With a margin
    the difference is compressed to a-levels < na - margin and b-levels < nb - 1.
    """
    P = projector_HL(model)
    D = (heisenberg_evolve(model, P, t, cfg) - P).entries
    return _interior_min_eig(D, None if margin is None else _block_interior(model, margin))


def generator_absorption_min_eig(model: CatModel, margin: Optional[int] = None) -> float:
    """Smallest interior eigenvalue of L*(Pi_L), the rate at which mass enters H_L."""
    margin = 2 * model.params.k if margin is None else margin
    D = adjoint_lindbladian_apply(model, projector_HL(model)).entries
    return _interior_min_eig(D, _block_interior(model, margin))


def corollary_recursion(model: CatModel, rho0: Operator, t0: float, n_iter: int, cfg: IntegratorConfig,
                        margin: Optional[int] = None) -> RecursionReport:
    """Check m_{n+1} >= (1 - delta) m_n + delta (1 - 2 eps) at times n t0.

    delta is the interior complement-block minimum of T_{t0}(Pi_L); eps the
    largest mass found outside H_L plus the interior complement.
    """
    margin = 2 * model.params.k if margin is None else margin
    delta = block_positivity_check(model, t0, cfg, margin).complement_min_eig
    Q = embedded_kernel(model)
    B = _complement_interior_basis(model, margin)
    covered = np.hstack([Q, B])

    step_cfg = IntegratorConfig(dt=cfg.dt, t_max=t0, method=cfg.method, rel_tol=cfg.rel_tol,
                                record_every=10 ** 9, snapshot_states=True)
    rho = rho0
    masses, outside = [], []
    for _ in range(n_iter + 1):
        masses.append(mass_on_HL(rho, model, clamp=False))
        outside.append(1.0 - float(np.real(np.trace(covered.conj().T @ rho.entries @ covered))))
        rho = evolve(model, rho, step_cfg, leakage_ceiling=None).snapshots[-1]
    eps = max(0.0, max(outside))

    residuals = [
        masses[i + 1] - ((1 - delta) * masses[i] + delta * (1 - 2 * eps))
        for i in range(n_iter)
    ]
    return RecursionReport(t0=t0, delta=delta, epsilon=eps, masses=masses, residuals=residuals)
