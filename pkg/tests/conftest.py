"""Shared random-model builders for the test suite."""

import numpy as np

from fermicov import (
    BasisTag,
    CovarianceMatrix,
    HamiltonianMatrix,
    covariance_from_gibbs,
    make_semigroup,
    validate_coupling,
    validate_qf,
)


def random_qf(rng, modes: int) -> HamiltonianMatrix:
    """Random quadratic-form matrix in the creation/annihilation basis."""
    a = rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))
    a = (a + a.conj().T) / 2
    b = rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))
    b = (b - b.T) / 2
    blocks = np.block([[a, b], [-b.conj(), -a.conj()]])
    return validate_qf(blocks, BasisTag.CREATION_ANNIHILATION)


def random_coupling(rng, system_modes: int, bath_modes: int, scale: float = 1.0):
    w = scale * rng.standard_normal((2 * system_modes, 2 * bath_modes))
    return validate_coupling(1j * w, BasisTag.MAJORANA)


def random_covariance(rng, modes: int, beta: float = 1.0) -> CovarianceMatrix:
    """Strictly nondegenerate covariance, built as a Gibbs covariance."""
    return covariance_from_gibbs(random_qf(rng, modes), beta)


def random_semigroup(rng, system_modes: int, bath_modes: int, coupling_scale: float = 1.0):
    return make_semigroup(
        random_qf(rng, system_modes),
        random_coupling(rng, system_modes, bath_modes, coupling_scale),
        random_covariance(rng, bath_modes, beta=0.9),
    )
