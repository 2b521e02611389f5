"""Exact dense Fock-space kernel.

Realizes annihilation and Majorana operators on the 2^n-dimensional Fock
space through the standard string construction: occupation words u in
{0, 1}^n index the basis with site 1 as the outermost tensor factor, and

    c_i |u> = delta(u_i, 1) * prod_{k < i} (-1)^{u_k} |..., u_i - 1, ...>.

Everything downstream (quadratic Hamiltonians, Gibbs states, tensor
embeddings, partial traces, covariance extraction) is exact dense linear
algebra, intended as the brute-force verification path for the covariance
machinery.  Sizes are capped at ``N_DENSE_MAX`` total modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import StructureViolation, TooLarge, UnsupportedIso
from .phase import BasisTag, HamiltonianMatrix, block_reduce, convert_basis, validate_qf
from .quasifree import CovarianceMatrix

#: Largest total mode count realized densely (4096-dimensional matrices).
N_DENSE_MAX = 12


class IsomorphismTag(Enum):
    """Identification of a joint fermionic space with a tensor product.

    E_SB keeps system operators untouched and strings bath operators with the
    system parity; E_BS does the opposite; E_B1SB2 places the system between
    two bath factors (first bath mode, system, remaining bath modes).
    """

    E_SB = "E_SB"
    E_BS = "E_BS"
    E_B1SB2 = "E_B1SB2"


@dataclass(frozen=True, eq=False)
class DenseOperator:
    entries: np.ndarray
    mode_count: int

    def validate(self) -> None:
        if self.mode_count > N_DENSE_MAX:
            raise TooLarge(f"{self.mode_count} modes exceed the dense cap {N_DENSE_MAX}")
        dim = 2**self.mode_count
        if self.entries.shape != (dim, dim):
            raise StructureViolation(f"shape {self.entries.shape} does not match {self.mode_count} modes")


@dataclass(frozen=True, eq=False)
class DenseState:
    op: DenseOperator

    def validate(self, tol: float = 1e-10) -> None:
        self.op.validate()
        m = self.op.entries
        res = float(np.abs(m - m.conj().T).max())
        if res > tol:
            raise StructureViolation("state is not Hermitian", res)
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > tol:
            raise StructureViolation("state trace is not 1", abs(tr - 1.0))
        eigs = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if eigs.min() < -tol:
            raise StructureViolation("state is not positive semidefinite", float(-eigs.min()))


def _check_size(n: int) -> None:
    if not 1 <= n <= N_DENSE_MAX:
        raise TooLarge(f"mode count {n} outside [1, {N_DENSE_MAX}]")


@lru_cache(maxsize=None)
def _annihilators(n: int) -> tuple[np.ndarray, ...]:
    _check_size(n)
    a = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye2 = np.eye(2, dtype=complex)
    ops = []
    for i in range(n):
        m = np.eye(1, dtype=complex)
        for k in range(n):
            m = np.kron(m, z if k < i else (a if k == i else eye2))
        ops.append(m)
    return tuple(ops)


@lru_cache(maxsize=None)
def _majoranas(n: int) -> tuple[np.ndarray, ...]:
    cs = _annihilators(n)
    gs = [c + c.conj().T for c in cs]
    gs += [-1j * (c - c.conj().T) for c in cs]
    return tuple(gs)


@lru_cache(maxsize=None)
def _parity(n: int) -> np.ndarray:
    signs = np.ones(2**n)
    for b in range(2**n):
        signs[b] = (-1) ** bin(b).count("1")
    return np.diag(signs).astype(complex)


def annihilation_ops(n: int) -> list[DenseOperator]:
    """The n annihilation operators c_1 ... c_n."""
    return [DenseOperator(entries=c.copy(), mode_count=n) for c in _annihilators(n)]


def majorana_ops(n: int) -> list[DenseOperator]:
    """The 2n Majorana operators g_i = c_i + c_i*, g_{i+n} = -i (c_i - c_i*)."""
    return [DenseOperator(entries=g.copy(), mode_count=n) for g in _majoranas(n)]


def parity_op(n: int) -> DenseOperator:
    """(-1)^N, the total fermion parity."""
    _check_size(n)
    return DenseOperator(entries=_parity(n).copy(), mode_count=n)


def quadratic_hamiltonian(t: HamiltonianMatrix, prefactor: float) -> DenseOperator:
    """Dense realization of prefactor * F* T F.

    The quadratic-form coefficients in the Majorana expansion of F* T F are
    half the Majorana-basis matrix of T, so the output is
    prefactor * sum_ij (T_maj / 2)_ij g_i g_j.  The master-equation convention
    corresponds to ``prefactor=0.5``.
    """
    n = t.mode_count
    _check_size(n)
    h = prefactor * 0.5 * convert_basis(t, BasisTag.MAJORANA).entries
    gs = _majoranas(n)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(2 * n):
        row = h[i]
        acc = np.zeros((dim, dim), dtype=complex)
        for j in range(2 * n):
            if row[j] != 0:
                acc += row[j] * gs[j]
        if np.any(acc):
            out += gs[i] @ acc
    out = (out + out.conj().T) / 2
    return DenseOperator(entries=out, mode_count=n)


def gibbs_state(h: DenseOperator, beta: float) -> DenseState:
    """exp(-beta H) / Z for a Hermitian dense Hamiltonian."""
    h.validate()
    m = h.entries
    res = float(np.abs(m - m.conj().T).max())
    if res > 1e-9 * max(1.0, float(np.abs(m).max())):
        raise StructureViolation("Gibbs Hamiltonian must be Hermitian", res)
    w, v = scipy.linalg.eigh(m)
    weights = np.exp(-beta * (w - w.min()))
    rho = (v * weights) @ v.conj().T
    rho /= np.trace(rho).real
    return DenseState(op=DenseOperator(entries=rho, mode_count=h.mode_count))


def quasifree_state(m: CovarianceMatrix) -> DenseState:
    """Dense quasi-free state with the given covariance matrix.

    Inverts the Gibbs closed form through the block reduction of M - I/2,
    which keeps the +-lambda pairing of the generator exact; covariance
    eigenvalues are clamped away from {0, 1} by 1e-12, so pinned covariances
    are realized up to that clamping error.
    """
    m.validate()
    mc = convert_basis(m, BasisTag.CREATION_ANNIHILATION).entries
    L = m.mode_count
    q = validate_qf(mc - 0.5 * np.eye(2 * L), BasisTag.CREATION_ANNIHILATION)
    u, lam = block_reduce(q)
    lam = np.clip(lam, 0.0, 0.5 - 1e-12)
    # T = (1/2) logit(1/2 + lam) per mode makes (I + e^{-2T})^{-1} = M
    g = 0.5 * (np.log(0.5 + lam) - np.log(0.5 - lam))
    diag = np.concatenate([g, -g])
    t_entries = (u.entries * diag) @ u.entries.conj().T
    t = HamiltonianMatrix(entries=t_entries, basis=BasisTag.CREATION_ANNIHILATION, mode_count=L)
    return gibbs_state(quadratic_hamiltonian(t, 1.0), 1.0)


def _b1sb2_permutation(L: int, K: int):
    """Index map and signs for the (first bath mode, system, rest) relabeling."""
    if K < 1:
        raise UnsupportedIso("E_B1SB2 needs at least one bath mode")
    dim_s, dim_r = 2**L, 2 ** (K - 1)
    perm = np.empty(dim_s * 2 * dim_r, dtype=np.int64)
    sign = np.empty(dim_s * 2 * dim_r)
    for u in range(dim_s):
        nu = bin(u).count("1")
        for v1 in range(2):
            for vr in range(dim_r):
                canon = (u * 2 + v1) * dim_r + vr
                perm[canon] = (v1 * dim_s + u) * dim_r + vr
                sign[canon] = (-1.0) ** (nu * v1)
    return perm, sign


def _parity_halves(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    par = _parity(n)
    flipped = par @ x @ par
    return (x + flipped) / 2, (x - flipped) / 2


def embed(op_s: DenseOperator, op_b: DenseOperator, iso: IsomorphismTag) -> DenseOperator:
    """Product of the system and bath images under the chosen identification.

    The identification maps system and bath operators into the 2^(L+K)
    space as a *-algebra morphism: under E_SB a system operator A goes to
    A x Id while the odd part of a bath operator picks up the system parity
    on the left factor; under E_BS it is the odd part of the system operator
    that is strung with the bath parity.  Images of system and bath
    annihilators therefore anticommute.  E_B1SB2 needs a factorized bath
    operator and is handled by :func:`embed_b1sb2`.
    """
    op_s.validate()
    op_b.validate()
    L, K = op_s.mode_count, op_b.mode_count
    _check_size(L + K)
    if iso is IsomorphismTag.E_SB:
        b_even, b_odd = _parity_halves(op_b.entries, K)
        joint = np.kron(op_s.entries, b_even) + np.kron(op_s.entries @ _parity(L), b_odd)
    elif iso is IsomorphismTag.E_BS:
        a_even, a_odd = _parity_halves(op_s.entries, L)
        joint = np.kron(a_even, op_b.entries) + np.kron(a_odd, _parity(K) @ op_b.entries)
    else:
        raise UnsupportedIso("embed supports E_SB and E_BS; use embed_b1sb2 for the split form")
    return DenseOperator(entries=joint, mode_count=L + K)


def embed_b1sb2(op_b1: DenseOperator, op_s: DenseOperator, op_br: DenseOperator) -> DenseOperator:
    """Joint realization of b1 x system x rest-of-bath under the split form.

    Pulls the product back from the (first bath mode, system, remaining bath)
    mode ordering to the canonical system-first space through the signed mode
    reordering; for even bath factors this is the inverse of the composed
    identification used for spin chains driven at both ends.
    """
    L = op_s.mode_count
    K = op_b1.mode_count + op_br.mode_count
    if op_b1.mode_count != 1:
        raise UnsupportedIso("E_B1SB2 splits off exactly one leading bath mode")
    _check_size(L + K)
    perm, sign = _b1sb2_permutation(L, K)
    big = np.kron(np.kron(op_b1.entries, op_s.entries), op_br.entries)
    joint = big[np.ix_(perm, perm)] * np.outer(sign, sign)
    return DenseOperator(entries=joint, mode_count=L + K)


def partial_trace_bath(rho: DenseState, system_modes: int, bath_modes: int) -> DenseState:
    """Trace out the bath factor of a state on the canonical joint space."""
    rho.validate()
    if rho.op.mode_count != system_modes + bath_modes:
        raise StructureViolation(
            f"state has {rho.op.mode_count} modes, expected {system_modes + bath_modes}"
        )
    dim_s, dim_b = 2**system_modes, 2**bath_modes
    m = rho.op.entries.reshape(dim_s, dim_b, dim_s, dim_b)
    reduced = np.einsum("ibjb->ij", m)
    return DenseState(op=DenseOperator(entries=reduced, mode_count=system_modes))


def covariance_of(rho: DenseState) -> CovarianceMatrix:
    """Covariance matrix tr(rho F F*) in the creation/annihilation basis."""
    rho.validate()
    n = rho.op.mode_count
    cs = _annihilators(n)
    f_ops = list(cs) + [c.conj().T for c in cs]
    m = rho.op.entries
    cov = np.empty((2 * n, 2 * n), dtype=complex)
    for k in range(2 * n):
        rho_fk = m @ f_ops[k]
        for l in range(2 * n):
            cov[k, l] = np.trace(rho_fk @ f_ops[l].conj().T)
    cov = (cov + cov.conj().T) / 2
    return CovarianceMatrix(entries=cov, basis=BasisTag.CREATION_ANNIHILATION, mode_count=n)


def field_operator(coords, n: int) -> DenseOperator:
    """phi(x) = sum_i x_i g_i for Majorana coordinates x."""
    coords = np.asarray(coords, dtype=complex)
    if coords.shape != (2 * n,):
        raise StructureViolation(f"coordinates have shape {coords.shape}, expected {(2 * n,)}")
    gs = _majoranas(n)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for x, g in zip(coords, gs):
        if x != 0:
            out += x * g
    return DenseOperator(entries=out, mode_count=n)
