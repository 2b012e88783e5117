import pytest

from domain.entities.fock import FockDims, Space
from domain.entities.model import ModelParams
from domain.entities.trajectory import IntegratorConfig
from domain.services import fock_core as fc
from domain.services.cat_model import build_model
from domain.services.convergence_engine import ConvergenceEngine

MU_GRID = [0.0, 0.05, 0.1, 0.2]
C2_GRID = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]


@pytest.fixture
def model():
    return build_model(ModelParams(k=1, alpha=0.0, kappa=2.0, dims=FockDims(na=6, nb=3)))


def fock(model, n):
    return fc.tensor_ket(fc.basis_ket(model.dims.na, n), fc.basis_ket(model.dims.nb, 0, Space.B)).projector()


def test_run_records_standard_observers(model):
    engine = ConvergenceEngine(leakage_ceiling=None)
    traj = engine.run(model, fock(model, 1), IntegratorConfig(dt=0.01, t_max=0.5, record_every=10))
    assert set(traj.observables) == {"mass_HL", "energy_V", "buffer_excitation"}
    summary = engine.summarize(traj)
    assert summary["final_mass"] > 0
    assert summary["time_mass_099"] is None
    assert summary["n_steps"] == 50


def test_check_reports_limit_oracle_and_energy_bound(model):
    engine = ConvergenceEngine(leakage_ceiling=None)
    rho0 = fock(model, 1)
    cfg = IntegratorConfig(dt=0.01, t_max=12.0, record_every=100, snapshot_states=True)
    traj = engine.run(model, rho0, cfg)
    report = engine.check(model, rho0, traj, MU_GRID, C2_GRID, 2)
    assert report["limit"]["converged"]
    assert report["oracle_trace_distance"] < 1e-5
    assert report["truncated_state_min_increment"] >= -1e-9
    assert report["energy_bound"]["holds"]
    assert engine.summarize(traj)["time_mass_099"] is not None


def test_check_skips_oracle_above_ceiling_and_marks_unconverged(model):
    engine = ConvergenceEngine(oracle_max_dim=4, leakage_ceiling=None)
    rho0 = fock(model, 1)
    traj = engine.run(model, rho0, IntegratorConfig(dt=0.01, t_max=0.2, record_every=5, snapshot_states=True))
    report = engine.check(model, rho0, traj, MU_GRID, C2_GRID, 2)
    assert "oracle_trace_distance" not in report
    assert not report["limit"]["converged"]
    assert report["limit"]["threshold"] == 0.99
