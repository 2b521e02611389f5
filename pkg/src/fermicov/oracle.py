"""Brute-force dense verification path for the covariance machinery.

Builds the exact generator

    L(rho) = -i [H_S, rho] + sum_k L_k rho L_k* - 1/2 {L_k* L_k, rho}

on the 2^L-dimensional Fock space and exponentiates its vectorization, so
that covariance-level results can be checked against exact density-matrix
evolution with no integrator error.  The jump operators are field operators
of the eigenvectors of the positive matrix (1/2) Theta (I - M_B) Theta*
(Majorana basis); depending on the tensor-product identification a fermion
parity factor is appended to some of them, which is invisible on even states
but matters for odd ones.

Also provides the single interaction step of the underlying repeated
interaction process, whose tau -> 0 limit with coupling 1/sqrt(tau) is the
semigroup above.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    NonUniqueStationary,
    NotPSD,
    NumericalFailure,
    StructureViolation,
    TooLarge,
    UnsupportedIso,
)
from .fock import (
    DenseOperator,
    DenseState,
    IsomorphismTag,
    _majoranas,
    _parity,
    embed,
    embed_b1sb2,
    partial_trace_bath,
    quadratic_hamiltonian,
)
from .lindblad import SemigroupSpec
from .phase import BasisTag, HamiltonianMatrix, _max_abs, expm

#: Largest system size whose superoperator (dimension 4^L) is exponentiated.
L_ORACLE_MAX = 6
#: Jump-matrix eigenvalues in [-PSD_CLAMP, 0) are clamped to zero.
PSD_CLAMP = 1e-8


@dataclass(frozen=True, eq=False)
class DenseLindbladian:
    hamiltonian: DenseOperator
    jump_ops: list[DenseOperator]
    iso: IsomorphismTag
    mode_count: int


def _check_oracle_size(n: int) -> None:
    if n > L_ORACLE_MAX:
        raise TooLarge(f"{n} modes exceed the oracle cap {L_ORACLE_MAX}")


def _jump_matrix(theta: np.ndarray, m_b: np.ndarray) -> np.ndarray:
    """Coefficient matrix of the completely positive part, (1/2) Th (I - M_B) Th*."""
    k2 = m_b.shape[0]
    return 0.5 * theta @ (np.eye(k2) - m_b) @ theta.conj().T


def _jumps_from_matrix(c: np.ndarray, mode_count: int, twisted: bool) -> list[np.ndarray]:
    lam, vec = scipy.linalg.eigh((c + c.conj().T) / 2)
    if lam.size and lam.min() < -PSD_CLAMP:
        raise NotPSD(f"jump coefficient matrix has eigenvalue {lam.min():.3e}")
    lam = np.clip(lam, 0.0, None)
    gs = _majoranas(mode_count)
    par = _parity(mode_count)
    cutoff = max(1e-12 * (lam.max() if lam.size else 0.0), 1e-300)
    jumps = []
    for k in range(len(lam)):
        if lam[k] <= cutoff:
            continue
        op = np.zeros_like(gs[0])
        for m in range(len(gs)):
            if vec[m, k] != 0:
                op += vec[m, k] * gs[m]
        op *= np.sqrt(lam[k])
        if twisted:
            op = op @ par
        jumps.append(op)
    return jumps


def build_lindbladian(spec: SemigroupSpec, iso: IsomorphismTag) -> DenseLindbladian:
    """Exact dense generator of the semigroup, in jump (GKLS) form.

    E_BS leaves the jumps untwisted, E_SB appends the system parity to all of
    them, and E_B1SB2 twists only the jumps fed by the trailing bath factor
    (which must be uncorrelated with the leading one).
    """
    L = spec.mode_count
    _check_oracle_size(L)
    theta = spec.theta.entries
    m_b = spec.m_b.entries
    k = spec.bath_modes
    if iso is IsomorphismTag.E_SB:
        jumps = _jumps_from_matrix(_jump_matrix(theta, m_b), L, twisted=True)
    elif iso is IsomorphismTag.E_BS:
        jumps = _jumps_from_matrix(_jump_matrix(theta, m_b), L, twisted=False)
    else:
        if k < 2:
            raise UnsupportedIso("E_B1SB2 needs at least two bath modes")
        first = [0, k]
        rest = list(range(1, k)) + list(range(k + 1, 2 * k))
        cross = m_b[np.ix_(first, rest)]
        if _max_abs(cross) > 1e-9 * max(1.0, _max_abs(m_b)):
            raise UnsupportedIso("E_B1SB2 requires a bath state factorized across the split")
        jumps = _jumps_from_matrix(
            _jump_matrix(theta[:, first], m_b[np.ix_(first, first)]), L, twisted=False
        )
        jumps += _jumps_from_matrix(
            _jump_matrix(theta[:, rest], m_b[np.ix_(rest, rest)]), L, twisted=True
        )
    ham = quadratic_hamiltonian(spec.t_s, 0.5)
    return DenseLindbladian(
        hamiltonian=ham,
        jump_ops=[DenseOperator(entries=j, mode_count=L) for j in jumps],
        iso=iso,
        mode_count=L,
    )


def apply_generator(lind: DenseLindbladian, rho: np.ndarray) -> np.ndarray:
    """L(rho) for a raw density-matrix array."""
    h = lind.hamiltonian.entries
    out = -1j * (h @ rho - rho @ h)
    for jump in lind.jump_ops:
        j = jump.entries
        jd = j.conj().T
        jdj = jd @ j
        out += j @ rho @ jd - 0.5 * (jdj @ rho + rho @ jdj)
    return out


def superoperator(lind: DenseLindbladian) -> np.ndarray:
    """Column-stacked vectorization of the generator, a 4^L x 4^L matrix."""
    dim = 2**lind.mode_count
    eye = np.eye(dim)
    h = lind.hamiltonian.entries
    s = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for jump in lind.jump_ops:
        j = jump.entries
        jdj = j.conj().T @ j
        s += np.kron(j.conj(), j)
        s -= 0.5 * (np.kron(eye, jdj) + np.kron(jdj.T, eye))
    return s


def evolve_dense(lind: DenseLindbladian, rho0: DenseState, t: float) -> DenseState:
    """exp(t L) applied to rho0 through the exponentiated superoperator."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    rho0.validate()
    if rho0.op.mode_count != lind.mode_count:
        raise StructureViolation("state and generator mode counts differ")
    dim = 2**lind.mode_count
    prop = expm(t * superoperator(lind))
    vec = prop @ rho0.op.entries.flatten(order="F")
    rho = vec.reshape((dim, dim), order="F")
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-8:
        raise NumericalFailure(f"dense evolution lost trace by {abs(tr - 1.0):.3e}")
    rho /= tr
    out = DenseState(op=DenseOperator(entries=rho, mode_count=lind.mode_count))
    out.validate(tol=1e-8)
    return out


def stationary_dense(lind: DenseLindbladian) -> DenseState:
    """Kernel of the generator, normalized to a state.

    Raises NonUniqueStationary when the kernel is more than one-dimensional.
    """
    dim = 2**lind.mode_count
    kernel = scipy.linalg.null_space(superoperator(lind))
    if kernel.shape[1] == 0:
        raise NumericalFailure("generator kernel is empty")
    if kernel.shape[1] > 1:
        raise NonUniqueStationary(f"generator kernel has dimension {kernel.shape[1]}")
    rho = kernel[:, 0].reshape((dim, dim), order="F")
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr) < 1e-12 * _max_abs(rho):
        raise NumericalFailure("stationary kernel vector has vanishing trace")
    rho /= tr
    out = DenseState(op=DenseOperator(entries=rho, mode_count=lind.mode_count))
    out.validate(tol=1e-8)
    return out


def _joint_quadratic(spec: SemigroupSpec, lam: float) -> HamiltonianMatrix:
    """One-body matrix of H_S + lam V + H_B on the joint (system-first) space."""
    L, K = spec.mode_count, spec.bath_modes
    n = L + K
    sys_coords = list(range(L)) + list(range(n, n + L))
    bath_coords = list(range(L, L + K)) + list(range(n + L, n + K + L))
    t = np.zeros((2 * n, 2 * n), dtype=complex)
    t[np.ix_(sys_coords, sys_coords)] = spec.t_s.entries
    t[np.ix_(sys_coords, bath_coords)] = lam * spec.theta.entries
    t[np.ix_(bath_coords, sys_coords)] = lam * spec.theta.entries.conj().T
    return HamiltonianMatrix(entries=t, basis=BasisTag.MAJORANA, mode_count=n)


def repeated_interaction_step(
    spec: SemigroupSpec,
    omega: DenseState,
    tau: float,
    iso: IsomorphismTag = IsomorphismTag.E_SB,
) -> Callable[[DenseState], DenseState]:
    """One step of the repeated interaction process with coupling 1/sqrt(tau).

    Couples the system to a fresh bath copy in state ``omega`` for a time
    ``tau`` under the quadratic joint Hamiltonian and traces the bath out.
    Iterating floor(t / tau) times approaches the semigroup as tau -> 0.  The
    bath state must be even, which makes the order-sqrt(tau) term vanish.
    """
    if tau <= 0:
        raise ValueError("step length must be positive")
    L, K = spec.mode_count, spec.bath_modes
    if L + K > 12:
        raise TooLarge(f"joint space of {L + K} modes exceeds the dense cap")
    omega.validate()
    if omega.op.mode_count != K:
        raise StructureViolation(f"bath state has {omega.op.mode_count} modes, spec wants {K}")
    par = _parity(K)
    res = _max_abs(omega.op.entries @ par - par @ omega.op.entries)
    if res > 1e-9:
        raise StructureViolation("bath state must be even", res)

    h_joint = quadratic_hamiltonian(_joint_quadratic(spec, 1.0 / np.sqrt(tau)), 0.5)
    u = expm(-1j * tau * h_joint.entries)

    if iso is IsomorphismTag.E_B1SB2:
        if K < 2:
            raise UnsupportedIso("E_B1SB2 needs at least two bath modes")
        omega_1 = partial_trace_bath(omega, 1, K - 1)
        dim1 = 2
        w = omega.op.entries.reshape(dim1, 2 ** (K - 1), dim1, 2 ** (K - 1))
        omega_r = DenseOperator(entries=np.einsum("bibj->ij", w), mode_count=K - 1)
        rebuilt = np.kron(omega_1.op.entries, omega_r.entries)
        if _max_abs(rebuilt - omega.op.entries) > 1e-9:
            raise UnsupportedIso("E_B1SB2 requires a factorized bath state")

    def step(rho: DenseState) -> DenseState:
        rho.validate()
        if iso is IsomorphismTag.E_B1SB2:
            joint = embed_b1sb2(omega_1.op, rho.op, omega_r)
        else:
            joint = embed(rho.op, omega.op, iso)
        evolved = u @ joint.entries @ u.conj().T
        joint_state = DenseState(op=DenseOperator(entries=evolved, mode_count=L + K))
        return partial_trace_bath(joint_state, L, K)

    return step
