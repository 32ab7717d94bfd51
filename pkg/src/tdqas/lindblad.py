"""Open-system evolution of the hybrid density matrix ``beta``.

The physical state is ``rho = sum_ij beta_ij |psi_i><psi_j|`` with
``|psi_i> = P_i |psi>``.  Projecting the master equation onto the basis gives

    E beta' E = -i (D beta E - E beta D)
                + sum_n g_n (R_n beta R_n^dag - F_n beta E / 2 - E beta F_n / 2)

which is solved for ``beta'`` by multiplying with ``pinv(E)`` on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ansatz import MomentBasis
from .baselines import exact_lindblad_evolve
from .errors import BuildError, ConfigError, DimensionMismatch, NumericalError
from .evolution import (
    QasProblem,
    TrajectoryRecord,
    _record_indices,
    build_stage,
    initial_coefficients,
    stage,
    truncated_pinv,
)
from .hamiltonian import TimeDependentHamiltonian, evaluate_drives
from .integrators import STEPPERS, time_steps
from .overlaps import BackendSpec, ExpectationBackend, OverlapSet, build_overlap_set
from .pauli import PauliString, PauliSum, as_sum
from .states import InitialState


@dataclass(frozen=True)
class LindbladModel:
    h: TimeDependentHamiltonian
    jumps: tuple[tuple[PauliSum, float], ...] = ()

    def __post_init__(self):
        jumps = tuple((as_sum(L), float(g)) for L, g in self.jumps)
        for L, g in jumps:
            if not math.isfinite(g) or g < 0:
                raise ConfigError(f"jump rate must be finite and nonnegative, got {g}")
            if L.n_qubits != self.h.n_qubits:
                raise DimensionMismatch("jump operator and Hamiltonian qubit counts differ")
        object.__setattr__(self, "jumps", jumps)

    @property
    def operators(self) -> list[PauliSum]:
        return [L for L, _ in self.jumps]

    @property
    def rates(self) -> np.ndarray:
        return np.array([g for _, g in self.jumps], dtype=float)

    def jump_strings(self) -> list[PauliString]:
        """Distinct non-identity strings appearing in the jump operators."""
        seen: dict[tuple[int, int], PauliString] = {}
        for L in self.operators:
            for p in L.strings():
                if not p.is_identity:
                    seen.setdefault(p.key, p)
        return list(seen.values())


@dataclass
class HybridDensity:
    beta: np.ndarray
    t: float = 0.0


def initial_density(basis: MomentBasis) -> HybridDensity:
    alpha = initial_coefficients(basis).alpha
    return HybridDensity(np.outer(alpha, alpha.conj()), 0.0)


def physical_trace(E: np.ndarray, beta: np.ndarray) -> complex:
    return complex(np.trace(E @ beta))


def build_lindblad_overlaps(
    basis: MomentBasis,
    model: LindbladModel,
    state: InitialState | None = None,
    backend: BackendSpec | str | ExpectationBackend = "dense",
    observables: Sequence[PauliSum | PauliString] = (),
    obs_labels: Sequence[str] | None = None,
) -> OverlapSet:
    return build_overlap_set(
        basis, model.h, observables, model.operators, state=state, backend=backend,
        obs_labels=obs_labels,
    )


def _check(ov: OverlapSet, model: LindbladModel) -> None:
    if ov.R is None or ov.F is None or len(ov.R) != len(model.jumps):
        raise BuildError("overlap set lacks the jump-operator matrices")
    if len(ov.D) != len(model.h):
        raise BuildError(f"{len(ov.D)} channel matrices for {len(model.h)} channels")


class LindbladPropagator:
    def __init__(self, ov: OverlapSet, model: LindbladModel, svd_tol: float = 1e-8):
        _check(ov, model)
        self.ov = ov
        self.model = model
        self.pinv = truncated_pinv(ov.E, svd_tol)
        self.terms = [
            (g, R, R.conj().T, F) for (_, g), R, F in zip(model.jumps, ov.R, ov.F) if g != 0
        ]

    def derivative(self, t: float, beta: np.ndarray) -> np.ndarray:
        E = self.ov.E
        D = np.zeros_like(E)
        for c, d in zip(evaluate_drives(self.model.h, t), self.ov.D):
            D += c * d
        bE = beta @ E
        Eb = E @ beta
        rhs = -1j * (D @ bE - Eb @ D)
        for g, R, Rd, F in self.terms:
            rhs += g * (R @ beta @ Rd - 0.5 * (F @ bE) - 0.5 * (Eb @ F))
        P = self.pinv.matrix
        return P @ rhs @ P

    def step(self, rho: HybridDensity, dt: float, method: str = "rk4") -> HybridDensity:
        if not dt > 0:
            raise ConfigError("dt must be positive")
        beta = STEPPERS[method](self.derivative, rho.t, rho.beta, dt)
        if not np.all(np.isfinite(beta)):
            raise NumericalError(f"density became non-finite at t={rho.t + dt:g}")
        return HybridDensity(0.5 * (beta + beta.conj().T), rho.t + dt)


def density_derivative(
    ov: OverlapSet, model: LindbladModel, t: float, beta: np.ndarray, svd_tol: float = 1e-8
) -> np.ndarray:
    if beta.shape != ov.E.shape:
        raise DimensionMismatch("beta and E shapes differ")
    return LindbladPropagator(ov, model, svd_tol).derivative(t, beta)


def min_density_eigenvalue(E: np.ndarray, beta: np.ndarray) -> float:
    """Smallest eigenvalue of ``rho`` on its support, via ``E^1/2 beta E^1/2``."""
    w, v = np.linalg.eigh(E)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = root @ beta @ root
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())


def run_open(problem: QasProblem, model: LindbladModel) -> TrajectoryRecord:
    """Like ``run_closed`` but for ``beta``; ``alphas`` holds the beta history.

    Jump strings join the closure generators so the basis is closed under them.
    ``renormalize`` is ignored: the physical trace is monitored, not forced.
    """
    if model.h is not problem.h:
        raise BuildError("model Hamiltonian differs from the problem Hamiltonian")
    cfg = problem.evolution
    timings: dict[str, float] = {}
    closure, basis, backend, ov = build_stage(
        problem, timings, model.jump_strings(), model.operators
    )
    frozen_calls = backend.calls

    with stage("integrate", timings):
        prop = LindbladPropagator(ov, model, cfg.svd_tol)
        steps = time_steps(cfg.t0, cfg.t1, cfg.dt)
        keep = _record_indices(len(steps), cfg.record_stride)
        rho = initial_density(basis)
        rho.t = cfg.t0
        times, betas = [cfg.t0], [rho.beta]
        trace_drift = 0.0
        for k, (ts, hs) in enumerate(steps, start=1):
            rho.t = ts
            rho = prop.step(rho, hs, cfg.integrator)
            trace_drift = max(trace_drift, abs(physical_trace(ov.E, rho.beta) - 1))
            if k in keep:
                times.append(ts + hs)
                betas.append(rho.beta)
    if backend.calls != frozen_calls:
        raise RuntimeError("backend was queried after the overlap stage")

    betas_arr = np.array(betas)
    obs, max_imag, herm = {}, 0.0, 0.0
    for label, M in zip(ov.obs_labels, ov.M_obs):
        vals = np.einsum("tij,ji->t", betas_arr, M)
        max_imag = max(max_imag, float(np.max(np.abs(vals.imag))))
        obs[label] = vals.real
    for b in betas_arr:
        herm = max(herm, float(np.max(np.abs(b - b.conj().T))))
    min_eig = min(min_density_eigenvalue(ov.E, b) for b in betas_arr)

    ref_obs = {}
    if problem.reference:
        with stage("reference", timings):
            psi = problem.state.to_dense()
            rhos = exact_lindblad_evolve(
                problem.h, model.jumps, np.outer(psi, psi.conj()), np.array(times),
                max_dt=problem.reference_dt,
            )
            for k in ov.obs_labels:
                m = problem.observables[k].to_dense()
                ref_obs[k] = np.real(np.einsum("tij,ji->t", rhos, m))

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
        "trace_drift": trace_drift,
        "hermiticity_error": herm,
        "min_rho_eigenvalue": min_eig,
        "max_obs_imag": max_imag,
        "n_steps": len(steps),
        "timings": timings,
    }
    return TrajectoryRecord(np.array(times), betas_arr, obs, None, diag, ref_obs)
