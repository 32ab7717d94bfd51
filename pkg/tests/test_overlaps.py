import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import PAULI, circuit_state, dense_label, dense_word
from tdqas.ansatz import closure_of_strings, cumulative_k_moment_basis, extended_operator_set
from tdqas.errors import BuildError
from tdqas.hamiltonian import (
    DriveFunction,
    TimeDependentHamiltonian,
    one_qubit_example,
    three_qubit_example,
    two_qubit_demo,
)
from tdqas.lindblad import LindbladModel, build_lindblad_overlaps
from tdqas.overlaps import (
    BackendSpec,
    DenseBackend,
    ProductBackend,
    SampledBackend,
    build_overlap_set,
    expectation_dense,
    expectation_product,
    make_backend,
    sampled_estimate,
)
from tdqas.pauli import PauliString, PauliSum, parse_pauli
from tdqas.states import DEMO_ANGLES, InitialState, demo_state

# <psi|X1 X2|psi> for the demo circuit state, from the explicit 4-amplitude construction
X1X2_DEMO = 0.03278479771962004


def sum_of(label, n, c=1.0):
    return PauliSum.from_labels([(c, label)], n)


def test_expectation_dense_examples():
    assert expectation_dense(parse_pauli("Z", 1), np.array([1, 0])) == 1
    plus = np.array([1, 1]) / np.sqrt(2)
    assert expectation_dense(parse_pauli("X", 1), plus) == pytest.approx(1)
    psi = demo_state().to_dense()
    assert expectation_dense(parse_pauli("X1 X2", 2), psi) == pytest.approx(X1X2_DEMO, abs=1e-14)


def test_demo_state_matches_oracle_circuit():
    assert np.allclose(demo_state().to_dense(), circuit_state(DEMO_ANGLES), atol=1e-14)


def test_expectation_dense_sum_and_phase():
    psi = np.array([0.6, 0.8j])
    op = PauliSum.from_labels([(0.5, "X"), (2.0, "Y"), (-1.0, "Z")], 1)
    oracle = np.vdot(psi, (0.5 * PAULI["X"] + 2 * PAULI["Y"] - PAULI["Z"]) @ psi)
    assert expectation_dense(op, psi) == pytest.approx(oracle, abs=1e-14)
    p = PauliString(1, 1, 1, phase=1)  # iY
    assert expectation_dense(p, psi) == pytest.approx(1j * np.vdot(psi, PAULI["Y"] @ psi))


def test_expectation_product_examples():
    for n in (1, 5, 300):
        assert expectation_product(parse_pauli("Z1", n), InitialState.all_zeros(n)) == 1
    assert expectation_product(parse_pauli("X2", 2), InitialState.all_zeros(2)) == 0
    h = 1 / np.sqrt(2)
    st_ = InitialState.product([[h, h], [1, 0]])
    assert expectation_product(parse_pauli("Z1 Z2", 2), st_) == pytest.approx(0, abs=1e-15)
    assert expectation_product(parse_pauli("X1 Z2", 2), st_) == pytest.approx(1)


def test_gram_matrix_one_qubit_zero_state():
    s = extended_operator_set(one_qubit_example())
    b = cumulative_k_moment_basis(s, 1)
    ov = build_overlap_set(b, one_qubit_example(), state=InitialState.all_zeros(1))
    # reorder into I, X, Y, Z
    order = [b.keys.index(parse_pauli(l, 1).key) if l != "I" else 0 for l in "IXYZ"]
    E = ov.E[np.ix_(order, order)]
    expected = np.array([[1, 0, 0, 1], [0, 1, 1j, 0], [0, -1j, 1, 0], [1, 0, 0, 1]])
    assert np.allclose(E, expected, atol=1e-15)
    assert np.linalg.matrix_rank(E) == 2


def test_identity_first_gives_unit_corner():
    st_ = InitialState.random(3, 2)
    b = cumulative_k_moment_basis(extended_operator_set(three_qubit_example()), 2)
    ov = build_overlap_set(b, three_qubit_example(), state=st_)
    assert ov.E[0, 0] == pytest.approx(1, abs=1e-14)


def test_demo_eval_count():
    h = two_qubit_demo()
    b = cumulative_k_moment_basis(extended_operator_set(h), 1)
    ov = build_overlap_set(b, h, state=demo_state())
    # the four operators form a group, so E and D need only those four strings
    assert len(b) == 4 and ov.eval_count == 4
    ov = build_overlap_set(b, h, [sum_of("Z2", 2)], state=demo_state())
    assert ov.eval_count == 8


def test_matrices_match_dense_oracle():
    h = three_qubit_example()
    st_ = InitialState.random(3, 9)
    psi = st_.to_dense()
    b = cumulative_k_moment_basis(extended_operator_set(h), 2)
    chi = np.array([dense_word(p.word_label()) @ psi for p in b.operators])
    ov = build_overlap_set(b, h, [sum_of("Z2", 3)], state=st_, obs_labels=["Z2"])
    assert np.allclose(ov.E, chi.conj() @ chi.T, atol=1e-13)
    hs = dense_label("Z1 Z2", 3) + dense_label("Z2 Z3", 3)
    assert np.allclose(ov.D[0], chi.conj() @ hs @ chi.T, atol=1e-13)
    assert np.allclose(ov.D[1], chi.conj() @ dense_label("X2", 3) @ chi.T, atol=1e-13)
    assert np.allclose(ov.observable("Z2"), chi.conj() @ dense_label("Z2", 3) @ chi.T, atol=1e-13)


def test_product_backend_rejects_dense_state():
    with pytest.raises(BuildError):
        ProductBackend(InitialState.random(2, 0))
    with pytest.raises(BuildError):
        make_backend(BackendSpec("bogus"), InitialState.all_zeros(1))


def test_jump_matrices():
    h = one_qubit_example()
    b = cumulative_k_moment_basis(extended_operator_set(h), 1)
    st_ = InitialState.product([[0.6, 0.8]])
    ov = build_lindblad_overlaps(b, LindbladModel(h, ((sum_of("Z", 1), 1.0),)), st_)
    assert np.allclose(ov.F[0], ov.E, atol=1e-15)
    lower = PauliSum.from_labels([(0.5, "X"), (0.5j, "Y")], 1)
    ov = build_lindblad_overlaps(b, LindbladModel(h, ((lower, 1.0),)), InitialState.all_zeros(1))
    assert ov.F[0][0, 0] == 0
    psi = np.array([1, 0])
    L = (PAULI["X"] + 1j * PAULI["Y"]) / 2
    chi = np.array([dense_word(p.word_label()) @ psi for p in b.operators])
    assert np.allclose(ov.R[0], chi.conj() @ L @ chi.T, atol=1e-15)
    assert np.allclose(ov.F[0], chi.conj() @ L.conj().T @ L @ chi.T, atol=1e-15)


def test_sampled_estimate_examples():
    assert sampled_estimate(1.0, 7, (0, 1, 2, 0), real_only=True) == 1
    assert sampled_estimate(-1.0 + 1j, 3, (0, 1, 2, 0)) == -1 + 1j
    a = sampled_estimate(0.3 - 0.2j, 100, (5, 6, 7, 1))
    assert a == sampled_estimate(0.3 - 0.2j, 100, (5, 6, 7, 1))
    with pytest.raises(ValueError):
        sampled_estimate(0.1, 0, (0,))
    with pytest.raises(ValueError):
        sampled_estimate(1.5, 10, (0,))


def test_sampled_estimate_standard_deviation():
    shots = 400
    vals = np.array([sampled_estimate(0.0, shots, (11, k, 0, 0), real_only=True) for k in range(10_000)])
    # binomial standard error of the sample std is about 0.7 percent here
    assert np.std(vals.real) == pytest.approx(1 / np.sqrt(shots), rel=0.03)
    assert abs(vals.real.mean()) < 4 / np.sqrt(shots * len(vals))


def test_sampled_backend_is_order_independent():
    st_ = InitialState.random(3, 1)
    a = SampledBackend(DenseBackend(st_), shots=256, seed=3)
    b = SampledBackend(DenseBackend(st_), shots=256, seed=3)
    words = [(1, 2), (3, 0), (5, 5), (0, 6)]
    va = [a.word_expectation(x, z) for x, z in words]
    vb = [b.word_expectation(x, z) for x, z in reversed(words)][::-1]
    assert va == vb


def test_backend_calls_equal_eval_count():
    h = three_qubit_example()
    st_ = InitialState.random(3, 4)
    be = DenseBackend(st_)
    b = cumulative_k_moment_basis(extended_operator_set(h), 2)
    ov = build_overlap_set(b, h, backend=be)
    assert be.calls == ov.eval_count


@st.composite
def product_states(draw, n):
    sites = []
    for _ in range(n):
        v = np.array(draw(st.lists(st.floats(-1, 1), min_size=4, max_size=4)))
        c = v[:2] + 1j * v[2:]
        nrm = np.linalg.norm(c)
        c = np.array([1, 0]) if nrm < 1e-3 else c / nrm
        sites.append(c)
    return InitialState.product(sites)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10).flatmap(lambda n: st.tuples(st.just(n), product_states(n))), st.data())
def test_dense_and_product_backends_agree(ns, data):
    n, state = ns
    dense, prod = DenseBackend(state), ProductBackend(state)
    for _ in range(10):
        x = data.draw(st.integers(0, 2**n - 1))
        z = data.draw(st.integers(0, 2**n - 1))
        assert abs(dense.word_expectation(x, z) - prod.word_expectation(x, z)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 4).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(st.tuples(st.integers(0, 2**n - 1), st.integers(0, 2**n - 1)), min_size=1, max_size=4),
        )
    ),
    st.integers(0, 3),
    st.integers(0, 2**31),
)
def test_gram_matrix_psd(gens, K, seed):
    n, keys = gens
    s = closure_of_strings(n, [PauliString(n, x, z) for x, z in keys])
    b = cumulative_k_moment_basis(s, K)
    h = TimeDependentHamiltonian.from_pairs(n, [(DriveFunction.constant(), PauliSum.from_strings([(1.0, p) for p in s.generators] or [(1.0, PauliString.identity(n))], n))])
    ov = build_overlap_set(b, h, state=InitialState.random(n, seed))
    assert np.allclose(ov.E, ov.E.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(ov.E).min() >= -1e-10
    assert np.allclose(ov.D[0], ov.D[0].conj().T, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.randoms(use_true_random=False))
def test_eval_count_independent_of_basis_order(rnd):
    h = three_qubit_example()
    b = cumulative_k_moment_basis(extended_operator_set(h), 2)
    ops = list(b.operators[1:])
    rnd.shuffle(ops)
    shuffled = type(b)(b.K, (b.operators[0], *ops), b.source, b.level_sizes)
    st_ = InitialState.random(3, 0)
    assert build_overlap_set(shuffled, h, state=st_).eval_count == build_overlap_set(b, h, state=st_).eval_count
