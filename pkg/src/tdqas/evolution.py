"""Classical integration of ``E alpha' = -i D(t) alpha`` over a fixed basis."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .ansatz import (
    DEFAULT_BASIS_CAP,
    DEFAULT_CLOSURE_CAP,
    MomentBasis,
    closure_of_strings,
    cumulative_k_moment_basis,
    extended_operator_set,
)
from .baselines import apply_string, exact_evolve, expectation_trace
from .errors import BuildError, ConfigError, NumericalError, TdqasError
from .hamiltonian import TimeDependentHamiltonian, evaluate_drives
from .integrators import STEPPERS, time_steps
from .overlaps import BackendSpec, OverlapSet, build_overlap_set, make_backend
from .pauli import PauliSum
from .states import DENSE_LIMIT, InitialState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionConfig:
    t0: float = 0.0
    t1: float = 1.0
    dt: float = 1e-3
    integrator: str = "rk4"
    svd_tol: float = 1e-8
    renormalize: bool = True
    record_stride: int = 1

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append("dt must be positive")
        elif self.dt > self.t1 - self.t0 + 1e-12:
            problems.append("dt must not exceed t1 - t0")
        if self.integrator not in STEPPERS:
            problems.append(f"integrator must be one of {sorted(STEPPERS)}")
        if not 0 < self.svd_tol < 1:
            problems.append("svd_tol must lie in (0, 1)")
        if self.record_stride < 1:
            problems.append("record_stride must be positive")
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass
class CoefficientVector:
    alpha: np.ndarray
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class TruncatedPinv:
    matrix: np.ndarray
    rank: int
    singular_values: np.ndarray

    @property
    def cond(self) -> float:
        """Condition number over the retained singular values."""
        s = self.singular_values[: self.rank]
        return float(s[0] / s[-1])

    @property
    def cond_full(self) -> float:
        s = self.singular_values
        return float("inf") if s[-1] == 0 else float(s[0] / s[-1])


def truncated_pinv(mat: np.ndarray, svd_tol: float) -> TruncatedPinv:
    """Pseudo-inverse dropping singular values below ``svd_tol * s_max``."""
    if not np.all(np.isfinite(mat)):
        raise NumericalError("matrix has non-finite entries")
    u, s, vh = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0:
        raise NumericalError("all singular values truncated")
    rank = int(np.count_nonzero(s > svd_tol * s[0]))
    pinv = (vh[:rank].conj().T / s[:rank]) @ u[:, :rank].conj().T
    return TruncatedPinv(pinv, rank, s)


def initial_coefficients(basis: MomentBasis) -> CoefficientVector:
    if not basis.operators or not basis.operators[0].is_identity:
        raise BuildError("basis must start with the identity")
    alpha = np.zeros(len(basis), dtype=complex)
    alpha[0] = 1.0
    return CoefficientVector(alpha, 0.0)


def assemble_generator(t: float, ov: OverlapSet, h: TimeDependentHamiltonian) -> np.ndarray:
    """``D(t) = sum_k f_k(t) D_k`` from stored channel matrices."""
    if len(ov.D) != len(h):
        raise BuildError(f"{len(ov.D)} channel matrices for {len(h)} channels")
    drives = evaluate_drives(h, t)
    out = np.zeros_like(ov.E)
    for c, d in zip(drives, ov.D):
        out += c * d
    return out


def coefficient_derivative(
    E: np.ndarray, D_t: np.ndarray, alpha: np.ndarray, svd_tol: float = 1e-8
) -> tuple[np.ndarray, int]:
    """``alpha' = -i pinv(E) D_t alpha`` and the retained rank of ``E``."""
    if E.shape != D_t.shape or E.shape[0] != alpha.shape[0]:
        raise BuildError("shape mismatch between E, D and alpha")
    if not (np.all(np.isfinite(D_t)) and np.all(np.isfinite(alpha))):
        raise NumericalError("non-finite generator or coefficients")
    pinv = truncated_pinv(E, svd_tol)
    return -1j * (pinv.matrix @ (D_t @ alpha)), pinv.rank


class QasPropagator:
    """Precomputes ``pinv(E) D_k`` once; stepping never touches a backend."""

    def __init__(self, ov: OverlapSet, h: TimeDependentHamiltonian, svd_tol: float = 1e-8):
        if len(ov.D) != len(h):
            raise BuildError(f"{len(ov.D)} channel matrices for {len(h)} channels")
        self.ov = ov
        self.h = h
        self.pinv = truncated_pinv(ov.E, svd_tol)
        self.A = [self.pinv.matrix @ d for d in ov.D]

    def derivative(self, t: float, alpha: np.ndarray) -> np.ndarray:
        drives = evaluate_drives(self.h, t)
        out = np.zeros_like(alpha)
        for c, a in zip(drives, self.A):
            if c != 0:
                out += c * (a @ alpha)
        return -1j * out

    def norm(self, alpha: np.ndarray) -> float:
        return float(np.real(np.vdot(alpha, self.ov.E @ alpha)))

    def step(
        self, state: CoefficientVector, dt: float, method: str = "rk4", renormalize: bool = True
    ) -> CoefficientVector:
        if not dt > 0:
            raise ConfigError("dt must be positive")
        alpha = STEPPERS[method](self.derivative, state.t, state.alpha, dt)
        if not np.all(np.isfinite(alpha)):
            raise NumericalError(f"coefficients became non-finite at t={state.t + dt:g}")
        if renormalize:
            nrm = self.norm(alpha)
            if not nrm > 0:
                raise NumericalError("ansatz norm vanished")
            alpha = alpha / np.sqrt(nrm)
        return CoefficientVector(alpha, state.t + dt)


def integrate_step(
    state: CoefficientVector,
    dt: float,
    method: str,
    ov: OverlapSet,
    h: TimeDependentHamiltonian,
    renormalize: bool = True,
    svd_tol: float = 1e-8,
) -> CoefficientVector:
    return QasPropagator(ov, h, svd_tol).step(state, dt, method, renormalize)


def observable_trace(alpha: np.ndarray, M_O: np.ndarray) -> float:
    return float(np.real(np.vdot(alpha, M_O @ alpha)))


def basis_states(basis: MomentBasis, psi: np.ndarray) -> np.ndarray:
    """Rows ``P_i |psi>`` for every basis operator (dense, small n)."""
    return np.array([apply_string(p, psi) for p in basis.operators])


def fidelity(alpha: np.ndarray, chi: np.ndarray, reference: np.ndarray) -> float:
    """``|<ref|phi>|^2`` for ``phi = sum_i alpha_i chi_i``, both normalized."""
    phi = alpha @ chi
    num = abs(np.vdot(reference, phi)) ** 2
    den = np.real(np.vdot(phi, phi)) * np.real(np.vdot(reference, reference))
    if den == 0:
        raise NumericalError("zero-norm state in fidelity")
    return float(min(1.0, num / den))


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    alphas: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    fidelity: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    reference_observables: dict[str, np.ndarray] = field(default_factory=dict)

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t": self.times, **self.observables}
        if self.fidelity is not None:
            cols["fidelity"] = self.fidelity
        return cols


@dataclass
class QasProblem:
    """Everything ``run_closed`` / ``run_open`` need besides the numerics knobs."""

    h: TimeDependentHamiltonian
    state: InitialState
    K: int
    evolution: EvolutionConfig
    observables: dict[str, PauliSum] = field(default_factory=dict)
    backend: BackendSpec = field(default_factory=BackendSpec)
    closure_cap: int = DEFAULT_CLOSURE_CAP
    basis_cap: int = DEFAULT_BASIS_CAP
    reference: bool = False
    survival: bool = False
    reference_dt: float = 1e-3


@contextmanager
def stage(name: str, timings: dict) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    except TdqasError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    finally:
        timings[name] = time.perf_counter() - start


def build_stage(problem: QasProblem, timings: dict, extra_generators=(), jumps=None):
    """Operator set, basis and overlap matrices; the only backend use of a run."""
    with stage("closure", timings):
        problem.h.require_hermitian()
        seeds = list(problem.h.strings()) + list(extra_generators)
        if extra_generators:
            closure = closure_of_strings(problem.h.n_qubits, seeds, problem.closure_cap)
        else:
            closure = extended_operator_set(problem.h, problem.closure_cap)
    with stage("basis", timings):
        basis = cumulative_k_moment_basis(closure, problem.K, problem.basis_cap)
    with stage("overlaps", timings):
        if problem.state.n_qubits != problem.h.n_qubits:
            raise BuildError("initial state and Hamiltonian qubit counts differ")
        backend = make_backend(problem.backend, problem.state)
        labels = list(problem.observables)
        ov = build_overlap_set(
            basis, problem.h, [problem.observables[k] for k in labels], jumps,
            backend=backend, obs_labels=labels,
        )
    return closure, basis, backend, ov


def _record_indices(n_steps: int, stride: int) -> set[int]:
    idx = set(range(0, n_steps + 1, stride))
    idx.add(n_steps)
    return idx


def run_closed(problem: QasProblem) -> TrajectoryRecord:
    """Build the ansatz and overlaps once, then integrate on the time grid."""
    cfg = problem.evolution
    timings: dict[str, float] = {}
    closure, basis, backend, ov = build_stage(problem, timings)
    frozen_calls = backend.calls

    with stage("integrate", timings):
        prop = QasPropagator(ov, problem.h, cfg.svd_tol)
        steps = time_steps(cfg.t0, cfg.t1, cfg.dt)
        keep = _record_indices(len(steps), cfg.record_stride)
        state = initial_coefficients(basis)
        state.t = cfg.t0
        times, alphas = [cfg.t0], [state.alpha]
        drift = 0.0
        for k, (ts, hs) in enumerate(steps, start=1):
            state.t = ts
            state = prop.step(state, hs, cfg.integrator, renormalize=False)
            nrm = prop.norm(state.alpha)
            drift = max(drift, abs(nrm - 1))
            if cfg.renormalize:
                if not nrm > 0:
                    raise NumericalError("ansatz norm vanished")
                state.alpha = state.alpha / np.sqrt(nrm)
            if k in keep:
                times.append(ts + hs)
                alphas.append(state.alpha)
    if backend.calls != frozen_calls:
        raise RuntimeError("backend was queried after the overlap stage")

    alphas_arr = np.array(alphas)
    obs, max_imag = {}, 0.0
    for label, M in zip(ov.obs_labels, ov.M_obs):
        vals = np.einsum("ti,ij,tj->t", alphas_arr.conj(), M, alphas_arr)
        max_imag = max(max_imag, float(np.max(np.abs(vals.imag))))
        obs[label] = vals.real
    if problem.survival:
        amp = alphas_arr @ ov.E[0]
        obs["survival"] = np.abs(amp) ** 2

    fid, ref_obs = None, {}
    if problem.reference:
        with stage("reference", timings):
            psi = problem.state.to_dense(DENSE_LIMIT)
            ref = _reference_states(problem, psi, np.array(times))
            chi = basis_states(basis, psi)
            fid = np.array([fidelity(a, chi, r) for a, r in zip(alphas_arr, ref)])
            ref_obs = {
                k: expectation_trace(ref, problem.observables[k]) for k in ov.obs_labels
            }

    diag = {
        "basis_size": len(basis),
        "basis_sizes": list(basis.level_sizes),
        "closure_size": len(closure),
        "closure_capped": closure.capped,
        "basis_capped": basis.capped,
        "eval_count": ov.eval_count,
        "backend": ov.backend,
        "cond_E": prop.pinv.cond,
        "cond_E_full": prop.pinv.cond_full,
        "rank_E": prop.pinv.rank,
        "svd_tol": cfg.svd_tol,
        "norm_drift": drift,
        "max_obs_imag": max_imag,
        "n_steps": len(steps),
        "timings": timings,
    }
    return TrajectoryRecord(np.array(times), alphas_arr, obs, fid, diag, ref_obs)


def _reference_states(problem: QasProblem, psi: np.ndarray, times: np.ndarray) -> np.ndarray:

    return exact_evolve(problem.h, psi, times, max_dt=problem.reference_dt)
