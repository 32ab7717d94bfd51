import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_label, dense_word, demo_h, expval, lindblad, one_qubit_h, schrodinger
from tdqas.baselines import (
    NoiseModel,
    VQSState,
    apply_string,
    exact_evolve,
    exact_lindblad_evolve,
    expectation_trace,
    lag_metric,
    sparse_operator,
    trotter_evolve,
    vqs_run,
    vqs_state,
    vqs_tangents,
    zero_crossings,
)
from tdqas.errors import BuildError, ConfigError
from tdqas.hamiltonian import DriveFunction, TimeDependentHamiltonian, one_qubit_example, two_qubit_demo
from tdqas.pauli import PauliString, PauliSum, parse_pauli
from tdqas.states import InitialState, demo_state


def ps(label, n):
    return PauliSum.from_labels([(1.0, label)], n)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1), st.integers(0, 3))
))
def test_sparse_and_apply_match_kron(args):
    n, x, z, phase = args
    p = PauliString(n, x, z, phase)
    dense = (1j**phase) * dense_word(p.word_label())
    assert np.array_equal(sparse_operator(p).toarray(), dense)
    vec = np.arange(1, 2**n + 1) * (1 + 0.5j)
    assert np.allclose(apply_string(p, vec), dense @ vec, atol=0)


def test_dense_limit():
    with pytest.raises(BuildError):
        sparse_operator(parse_pauli("X1", 20))


def test_exact_evolve_matches_scipy():
    psi = InitialState.random(1, 4).to_dense()
    grid = np.linspace(0, 2, 21)
    ours = exact_evolve(one_qubit_example(), psi, grid, max_dt=1e-3)
    ref = schrodinger(one_qubit_h, psi, grid)
    assert np.allclose(ours, ref, atol=1e-10)
    with pytest.raises(ValueError):
        exact_evolve(one_qubit_example(), psi, [1.0, 0.5])
    with pytest.raises(BuildError):
        exact_evolve(one_qubit_example(), np.ones(4), grid)


def demo_trotter_error(steps):
    psi = demo_state().to_dense()
    times, states = trotter_evolve(two_qubit_demo(), psi, steps, 8.0)
    ref = schrodinger(demo_h, psi, times)
    return np.max(np.abs(expectation_trace(states, ps("Z2", 2)) - expval(ref, dense_label("Z2", 2))))


def test_trotter_error_decreases_with_steps():
    errs = [demo_trotter_error(n) for n in (25, 50, 100, 200)]
    assert all(a > b for a, b in zip(errs, errs[1:])), errs


def test_trotter_grid_and_validation():
    psi = demo_state().to_dense()
    times, states = trotter_evolve(two_qubit_demo(), psi, 4, 1.0, t0=0.5)
    assert np.allclose(times, [0.5, 0.75, 1.0, 1.25, 1.5])
    assert np.allclose(states[0], psi)
    assert np.allclose(np.linalg.norm(states, axis=1), 1)
    with pytest.raises(ConfigError):
        trotter_evolve(two_qubit_demo(), psi, 0, 1.0)


@pytest.mark.parametrize("steps", [1, 3, 17])
def test_trotter_exact_for_commuting_constant_channels(steps):
    h = TimeDependentHamiltonian.from_pairs(2, [
        (DriveFunction.constant(0.7), ps("Z1 Z2", 2)),
        (DriveFunction.constant(-1.3), ps("Z1", 2)),
        (DriveFunction.constant(0.4), ps("Z2", 2)),
    ])
    psi = InitialState.random(2, 1).to_dense()
    times, states = trotter_evolve(h, psi, steps, 2.0)
    hm = 0.7 * dense_word("ZZ") - 1.3 * dense_word("ZI") + 0.4 * dense_word("IZ")
    ref = schrodinger(lambda t: hm, psi, times)
    assert np.allclose(states, ref, atol=1e-10)


def test_noise_model():
    n = NoiseModel(0.1)
    assert n.shrink_M == pytest.approx(0.81) and n.shrink_V == pytest.approx(0.729)
    with pytest.raises(ConfigError):
        NoiseModel(1.5)
    with pytest.raises(ConfigError):
        NoiseModel(0.1, depth_M=-1)


def test_vqs_state_and_tangents_by_finite_difference():
    gens = [parse_pauli(s, 2) for s in ("X1 X2", "Y2", "X1 Z2")]
    phi0 = demo_state().to_dense()
    theta = np.array([0.3, -0.7, 1.1])
    # oracle: product of dense exponentials, last generator first
    U = np.eye(4)
    for g, th in zip(gens, theta):
        U = U @ (np.cos(th) * np.eye(4) - 1j * np.sin(th) * dense_word(g.word_label()))
    psi, d = vqs_tangents(VQSState(theta, gens), phi0)
    assert np.allclose(psi, U @ phi0)
    assert np.allclose(vqs_state(VQSState(theta, gens), phi0), psi)
    eps = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = eps
        fd = (vqs_state(VQSState(theta + e, gens), phi0) - vqs_state(VQSState(theta - e, gens), phi0)) / (2 * eps)
        assert np.allclose(d[k], fd, atol=1e-8)
    with pytest.raises(ConfigError):
        VQSState(np.zeros(2), gens)


def run_vqs(lam):
    gens = [parse_pauli(s, 2) for s in ("X1 X2", "Y2", "X1 Z2")]
    return vqs_run(gens, two_qubit_demo(), demo_state().to_dense(), 0.0, 8.0, 1e-2,
                   NoiseModel(lam, 2, 3), observables={"Z2": ps("Z2", 2)})


def test_noiseless_vqs_tracks_exact():
    res = run_vqs(0.0)
    ref = schrodinger(demo_h, demo_state().to_dense(), res.times)
    assert np.max(np.abs(res.observables["Z2"] - expval(ref, dense_label("Z2", 2)))) < 1e-6


def test_vqs_rejects_non_string_generators():
    with pytest.raises(ConfigError):
        vqs_run([ps("X1", 2)], two_qubit_demo(), demo_state().to_dense(), 0, 1, 0.1)


def test_zero_crossings_and_lag():
    t = np.linspace(0, 10, 10001)
    assert np.allclose(zero_crossings(np.sin(np.pi * t), t)[:3], [0, 1, 2], atol=1e-6)
    assert lag_metric(np.sin(np.pi * t / 1.5), np.sin(np.pi * t), t) == pytest.approx(1.5, rel=1e-3)
    with pytest.raises(ValueError):
        lag_metric(np.ones_like(t), np.sin(t), t)


def test_exact_lindblad_matches_scipy():
    L = PauliSum.from_labels([(0.5, "X"), (0.5j, "Y")], 1)
    psi = InitialState.random(1, 2).to_dense()
    rho0 = np.outer(psi, psi.conj())
    grid = np.linspace(0, 2, 11)
    ours = exact_lindblad_evolve(one_qubit_example(), [(L, 0.4)], rho0, grid, max_dt=1e-3)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    ref = lindblad(one_qubit_h, [(lower, 0.4)], rho0, grid)
    assert np.allclose(ours, ref, atol=1e-10)
    assert np.allclose(np.trace(ours, axis1=1, axis2=2), 1)
    assert np.allclose(L.to_dense(), lower)
