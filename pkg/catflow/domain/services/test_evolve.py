import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domain.entities.fock import FockDims, Operator, Space
from domain.entities.model import ModelParams
from domain.entities.trajectory import IntegratorConfig, Trajectory
from domain.exceptions import (
    IntegrationDivergedError,
    InvalidArgumentError,
    InvalidDimensionError,
    OracleTooLargeError,
    TruncationBreachError,
)
from domain.services import fock_core as fc
from domain.services.cat_model import build_model, lindbladian_apply, projector_HL
from domain.services.evolve import (
    apply_propagator,
    default_dt,
    evolve,
    heisenberg_evolve,
    make_generator,
    integrate,
    order_study,
    propagator_expm,
    step,
    superoperator,
    trajectory_rows,
    unvec,
    vec,
)

ORACLE_CASES = [(1, 0.0, 1.0), (2, 0.5, 1.0), (2, 0.7, 2.0)]


def model_at(k, alpha, kappa, na=6, nb=4):
    return build_model(ModelParams(k=k, alpha=alpha, kappa=kappa, dims=FockDims(na=na, nb=nb)))


def fock(model, n, m=0):
    return fc.tensor_ket(fc.basis_ket(model.dims.na, n), fc.basis_ket(model.dims.nb, m, Space.B)).projector()


def random_density(dims, rng):
    X = rng.standard_normal((dims.joint, dims.joint)) + 1j * rng.standard_normal((dims.joint, dims.joint))
    rho = X @ X.conj().T
    return Operator(Space.AB, rho / np.trace(rho), dims)


def test_vectorization_is_column_stacking():
    rho = np.arange(9).reshape(3, 3)
    assert vec(rho).tolist() == [0, 3, 6, 1, 4, 7, 2, 5, 8]
    assert np.array_equal(unvec(vec(rho), 3), rho)


def test_superoperator_matches_lindbladian_apply():
    model = model_at(2, 0.5, 1.0, na=4, nb=3)
    rho = random_density(model.dims, np.random.default_rng(3))
    direct = lindbladian_apply(model, rho).entries
    via_super = unvec(superoperator(model) @ vec(rho.entries), model.dims.joint)
    assert np.allclose(direct, via_super, atol=1e-12)


def test_default_dt_respects_every_scale():
    model = model_at(2, 0.7, 50.0)
    assert default_dt(model) == pytest.approx(0.1 / 50.0)
    quiet = build_model(model.params.with_kappa(1.0), drive=False)
    assert default_dt(quiet) == pytest.approx(0.01)


def test_step_keeps_steady_state():
    model = model_at(2, 0.7, 2.0, na=20, nb=3)
    rho = Operator(Space.AB, projector_HL(model).entries / 2, model.dims)
    result = step(model, rho, 0.01)
    assert fc.trace_norm(result.state - rho) < 1e-8


def test_step_rejects_unnormalized_and_mismatched_states():
    model = model_at(1, 0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        step(model, Operator(Space.AB, np.zeros((24, 24)), model.dims), 0.01)
    other = fc.tensor_ket(fc.basis_ket(5, 0), fc.basis_ket(4, 0, Space.B)).projector()
    with pytest.raises(InvalidDimensionError):
        step(model, other, 0.01)


@pytest.mark.parametrize("k,alpha,kappa", ORACLE_CASES)
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_rk4_matches_expm_oracle(k, alpha, kappa, t):
    model = model_at(k, alpha, kappa)
    rho0 = fock(model, 2, 1)
    cfg = IntegratorConfig(dt=0.002, t_max=t, record_every=50, snapshot_states=True)
    traj = evolve(model, rho0, cfg, leakage_ceiling=None)
    reference = apply_propagator(propagator_expm(model, t), rho0)

    assert traj.final_time == pytest.approx(t)
    assert fc.trace_norm(traj.snapshots[-1] - reference) <= 1e-6
    assert traj.max_trace_drift <= 1e-8
    assert traj.max_hermiticity_drift <= 1e-9
    assert traj.min_eigenvalue() >= -1e-7


def test_adaptive_method_matches_oracle():
    model = model_at(2, 0.5, 1.0)
    rho0 = fock(model, 1)
    cfg = IntegratorConfig(dt=0.05, t_max=1.0, method="rk4_adaptive", rel_tol=1e-9, record_every=5,
                           snapshot_states=True)
    traj = evolve(model, rho0, cfg, leakage_ceiling=None)
    reference = apply_propagator(propagator_expm(model, 1.0), rho0)
    assert fc.trace_norm(traj.snapshots[-1] - reference) <= 1e-6
    assert traj.n_steps > 0


def test_oracle_refuses_large_dimensions():
    model = model_at(1, 0.0, 1.0, na=12, nb=4)
    with pytest.raises(OracleTooLargeError):
        propagator_expm(model, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_heisenberg_and_schrodinger_pictures_agree(seed):
    rng = np.random.default_rng(seed)
    model = model_at(2, 0.5, 1.0)
    n = model.dims.joint
    rho0 = random_density(model.dims, rng)
    X = Operator(Space.AB, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)), model.dims)
    cfg = IntegratorConfig(dt=0.005, t_max=1.0, record_every=10 ** 6)

    forward = evolve(model, rho0, cfg, {"X": X}, leakage_ceiling=None).observables["X"][-1]
    backward = heisenberg_evolve(model, X, 1.0, cfg).expectation(rho0)
    assert abs(forward - backward) <= 1e-7 * max(1.0, abs(forward))


def test_heisenberg_identity_is_preserved():
    model = model_at(2, 0.7, 2.0)
    identity = Operator(Space.AB, np.eye(model.dims.joint), model.dims)
    out = heisenberg_evolve(model, identity, 0.5, IntegratorConfig(dt=0.01, t_max=0.5))
    assert np.allclose(out.entries, np.eye(model.dims.joint), atol=1e-10)


def test_mass_on_kernel_never_decreases():
    model = model_at(1, 0.0, 1.0, na=8, nb=4)
    cfg = IntegratorConfig(dt=0.005, t_max=3.0, record_every=10)
    traj = evolve(model, fock(model, 3), cfg, {"mass": projector_HL(model)}, leakage_ceiling=None)
    mass = traj.observables["mass"].real
    assert np.all(np.diff(mass) >= -1e-7)
    assert mass[-1] > mass[0]


def test_leakage_ceiling_raises_truncation_breach():
    model = model_at(1, 0.0, 1.0)
    with pytest.raises(TruncationBreachError) as exc:
        evolve(model, fock(model, 5), IntegratorConfig(dt=0.01, t_max=0.1), leakage_ceiling=1e-3)
    assert exc.value.details["leakage"] > 1e-3


def test_divergence_is_reported_with_step():
    dims = FockDims(na=2, nb=1)
    gen = make_generator(np.eye(2) * 1e200, [], Space.A, dims, band=0)
    rho0 = Operator(Space.A, np.diag([1.0, 0.0]), dims)
    with pytest.raises(IntegrationDivergedError) as exc:
        integrate(gen, rho0, IntegratorConfig(dt=1.0, t_max=2.0), leakage_ceiling=None)
    assert exc.value.details["step"] == 1


def test_integrator_config_validation():
    with pytest.raises(InvalidArgumentError):
        IntegratorConfig(dt=0.0, t_max=1.0)
    with pytest.raises(InvalidArgumentError):
        IntegratorConfig(dt=2.0, t_max=1.0)
    with pytest.raises(InvalidArgumentError):
        IntegratorConfig(dt=0.1, t_max=1.0, method="euler")
    assert IntegratorConfig(dt=0.1, t_max=1.0).n_steps == 10


def test_trajectory_rejects_unordered_times():
    with pytest.raises(InvalidArgumentError):
        Trajectory(times=np.array([0.0, 0.2, 0.1]), observables={}, leakage=np.zeros(3))


def test_record_every_controls_the_grid():
    model = model_at(1, 0.0, 1.0)
    traj = evolve(model, fock(model, 1), IntegratorConfig(dt=0.01, t_max=0.25, record_every=10),
                  leakage_ceiling=None)
    assert np.allclose(traj.times, [0.0, 0.1, 0.2, 0.25])


def test_trajectory_rows_layout():
    model = model_at(1, 0.0, 1.0)
    traj = evolve(model, fock(model, 1), IntegratorConfig(dt=0.1, t_max=0.2),
                  {"mass": projector_HL(model)}, leakage_ceiling=None)
    header, rows = trajectory_rows(traj)
    assert header == ["t", "mass_re", "mass_im", "leakage"]
    assert len(rows) == 3
    assert float(rows[0][1]) == pytest.approx(0.0)


def test_fixed_step_rk4_is_fourth_order():
    model = model_at(1, 0.5, 4.0, na=4, nb=3)
    study = order_study(model, fock(model, 2, 1), 1.0, [0.04, 0.02, 0.01])
    assert 3.5 <= study["slope"] <= 4.5


def test_fixed_step_run_ends_at_t_max_when_dt_does_not_divide_it():
    cfg = IntegratorConfig(dt=0.3, t_max=1.0)
    assert cfg.n_steps == 4
    assert [cfg.step_end(i) for i in range(5)] == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])

    model = model_at(1, 0.0, 1.0, na=4, nb=3)
    rho0 = fock(model, 1)
    traj = evolve(model, rho0, IntegratorConfig(dt=0.3, t_max=1.0, snapshot_states=True), leakage_ceiling=None)
    assert traj.final_time == 1.0
    assert np.allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert traj.n_steps == 4

    rho = rho0
    for h in (0.3, 0.3, 0.3, 0.1):
        rho = step(model, rho, h).state
    assert np.allclose(traj.snapshots[-1].entries, rho.entries, atol=1e-13)


def test_short_last_step_matches_oracle():
    model = model_at(2, 0.5, 1.0)
    rho0 = fock(model, 2, 1)
    traj = evolve(model, rho0, IntegratorConfig(dt=0.003, t_max=0.01, snapshot_states=True), leakage_ceiling=None)
    reference = apply_propagator(propagator_expm(model, 0.01), rho0)
    assert traj.final_time == 0.01
    assert fc.trace_norm(traj.snapshots[-1] - reference) <= 1e-9


@pytest.mark.parametrize("dt", [0.02, 0.01, 0.005])
def test_raw_step_trace_drift_is_below_fifth_power_of_dt(dt):
    model = model_at(2, 0.5, 1.0)
    rho = random_density(model.dims, np.random.default_rng(11))
    assert step(model, rho, dt).trace_drift <= dt ** 5


def test_identity_observer_is_constant():
    model = model_at(2, 0.7, 2.0)
    identity = Operator(Space.AB, np.eye(model.dims.joint), model.dims)
    traj = evolve(model, fock(model, 2), IntegratorConfig(dt=0.01, t_max=2.0, record_every=20),
                  {"I": identity}, leakage_ceiling=None)
    assert np.allclose(traj.observables["I"], 1.0, atol=1e-8)


def test_single_photon_cat_reaches_manifold_by_t50():
    model = model_at(1, 0.5, 2.0, na=12, nb=6)
    cfg = IntegratorConfig(dt=default_dt(model), t_max=50.0, record_every=10 ** 6)
    traj = evolve(model, fock(model, 1), cfg, {"mass": projector_HL(model)})
    assert traj.final_time == pytest.approx(50.0)
    assert traj.observables["mass"][-1].real >= 0.99


def test_buffer_loss_alone_decays_exponentially():
    model = model_at(1, 0.0, 1.0, na=4, nb=4)
    quiet = build_model(model.params, drive=False)
    n_b = fc.embed_b(fc.number(4, Space.B), 4)
    traj = evolve(quiet, fock(quiet, 0, 2), IntegratorConfig(dt=0.01, t_max=1.0, record_every=10),
                  {"n_b": n_b}, leakage_ceiling=None)
    series = traj.observables["n_b"].real
    assert series[0] == pytest.approx(2.0)
    assert series[-1] == pytest.approx(2.0 * np.exp(-1.0), abs=1e-6)
    assert np.allclose(series, 2.0 * np.exp(-traj.times), atol=1e-6)


def test_propagator_is_identity_at_zero_and_a_semigroup():
    model = model_at(2, 0.5, 1.0, na=4, nb=3)
    n = model.dims.joint ** 2
    assert np.allclose(propagator_expm(model, 0.0), np.eye(n), atol=1e-14)
    product = propagator_expm(model, 0.3) @ propagator_expm(model, 0.5)
    assert np.allclose(propagator_expm(model, 0.8), product, atol=1e-10)
