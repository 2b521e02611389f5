import numpy as np
import pytest

from fermicov import (
    BasisTag,
    NonUniqueStationary,
    convert_basis,
    ergodicity,
    ergodicity_gauge_invariant,
    expm,
    full_from_small,
    lift_gauge_invariant,
    make_gauge_invariant,
    make_semigroup,
    one_end_chain,
    propagate,
    propagate_gauge_invariant,
    real_case_kalman,
    star_model,
    stationary,
    stationary_gauge_invariant,
    support_decomposition,
    thermalization_model,
    two_bath_chain,
    validate_coupling,
    validate_covariance,
    validate_qf,
    validate_small_covariance,
)
from fermicov.models import ChainParams, chain_hamiltonian

from conftest import random_covariance, random_qf, random_semigroup

CA = BasisTag.CREATION_ANNIHILATION
MAJ = BasisTag.MAJORANA


def _zero_coupling_spec(rng, modes, bath_modes=1):
    t = random_qf(rng, modes)
    theta = validate_coupling(np.zeros((2 * modes, 2 * bath_modes)), MAJ)
    m_b = random_covariance(rng, bath_modes)
    return make_semigroup(t, theta, m_b)


class TestPropagate:
    def test_zero_coupling_is_unitary_conjugation(self):
        rng = np.random.default_rng(0)
        spec = _zero_coupling_spec(rng, 2)
        m0 = random_covariance(rng, 2, beta=0.6)
        t = 0.8
        out = convert_basis(propagate(spec, m0, t), MAJ).entries
        t_maj = spec.t_s.entries
        u = expm(-1j * t * t_maj)
        expected = u @ convert_basis(m0, MAJ).entries @ u.conj().T
        assert np.abs(out - expected).max() < 1e-10
        spec_in = np.sort(np.linalg.eigvalsh(convert_basis(m0, MAJ).entries))
        spec_out = np.sort(np.linalg.eigvalsh(out))
        assert np.abs(spec_in - spec_out).max() < 1e-10

    def test_thermalization_relaxes_to_bath(self):
        rng = np.random.default_rng(1)
        t_s = random_qf(rng, 2)
        spec = thermalization_model(t_s, 1.0)
        m0 = random_covariance(rng, 2, beta=0.3)
        out = convert_basis(propagate(spec, m0, 50.0), MAJ).entries
        assert np.abs(out - spec.m_b.entries).max() < 1e-8

    @pytest.mark.parametrize("seed", range(3))
    def test_semigroup_law(self, seed):
        rng = np.random.default_rng(10 + seed)
        spec = random_semigroup(rng, rng.integers(1, 6), rng.integers(1, 4))
        m0 = random_covariance(rng, spec.mode_count, beta=0.5)
        s, t = 0.4, 0.9
        two_step = propagate(spec, propagate(spec, m0, s), t)
        one_step = propagate(spec, m0, s + t)
        assert np.abs(two_step.entries - one_step.entries).max() < 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_output_structure(self, seed):
        rng = np.random.default_rng(20 + seed)
        spec = random_semigroup(rng, 3, 2)
        m0 = random_covariance(rng, 3, beta=0.4)
        out = convert_basis(propagate(spec, m0, 1.3), MAJ)
        assert np.abs(out.entries.real - 0.5 * np.eye(6)).max() < 1e-9
        r = out.entries.imag
        assert np.abs(r + r.T).max() < 1e-9
        eigs = np.linalg.eigvalsh(out.entries)
        assert eigs.min() > -1e-9 and eigs.max() < 1 + 1e-9

    def test_rejects_negative_time(self):
        rng = np.random.default_rng(2)
        spec = random_semigroup(rng, 2, 1)
        with pytest.raises(ValueError):
            propagate(spec, random_covariance(rng, 2), -1.0)


class TestStationary:
    def test_thermalization_fixed_point(self):
        rng = np.random.default_rng(3)
        spec = thermalization_model(random_qf(rng, 3), 0.7)
        m_inf = stationary(spec)
        assert np.abs(m_inf.entries - spec.m_b.entries).max() < 1e-11

    def test_two_bath_chain_matches_closed_form(self):
        gi, pred = two_bath_chain(ChainParams(length=5, theta1=1.0, theta_l=1.0, n1=1.0, n_l=0.0))
        m_inf = stationary(lift_gauge_invariant(gi))
        small = convert_basis(m_inf, CA).entries[:5, :5]
        expected = np.diag([0.6, 0.5, 0.5, 0.5, 0.4]).astype(complex)
        d = np.diag(np.ones(4), 1)
        expected += 0.2j * (d - d.T)
        assert np.abs(small - expected).max() < 1e-11
        assert (pred.p1, pred.pm, pred.pL, pred.current) == (0.6, 0.5, 0.4, 0.2)

    def test_star_not_unique(self):
        spec = lift_gauge_invariant(star_model(3, 1.0, 0.5))
        with pytest.raises(NonUniqueStationary):
            stationary(spec)

    def test_residual_of_solution(self):
        rng = np.random.default_rng(4)
        spec = random_semigroup(rng, 3, 2)
        m = stationary(spec).entries
        res = spec.drift @ m + m @ spec.drift.conj().T + spec.pump
        assert np.abs(res).max() <= 1e-10 * np.abs(spec.pump).max()


class TestErgodicity:
    def test_one_end_chain_rank(self):
        # controllability columns e1, T e1 = e2, T^2 e1 = e1 + e3: full rank
        report = ergodicity_gauge_invariant(one_end_chain(3, 1.0, 0.5))
        assert report.kalman_rank == 3
        assert report.unique_stationary and report.converges
        t0 = chain_hamiltonian(3)
        e1 = np.array([1.0, 0.0, 0.0])
        cols = np.column_stack([e1, t0 @ e1, t0 @ t0 @ e1])
        assert np.linalg.matrix_rank(cols) == 3

    def test_star_converges_without_uniqueness(self):
        report = ergodicity_gauge_invariant(star_model(3, 1.0, 0.5))
        assert report.kalman_rank == 2
        assert not report.unique_stationary
        assert report.converges
        assert abs(report.spectral_abscissa) < 1e-10
        assert report.offending_eigenvalue is not None
        assert abs(report.offending_eigenvalue) < 1e-10  # kernel eigenvalue

    def test_unique_implies_hurwitz(self):
        from fermicov.lindblad import HURWITZ_TOL

        rng = np.random.default_rng(5)
        for _ in range(20):
            spec = random_semigroup(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
            report = ergodicity(spec)
            assert report.unique_stationary == report.kalman_full
            assert report.unique_stationary == (report.spectral_abscissa < HURWITZ_TOL)
            if report.unique_stationary:
                assert report.converges

    def test_zero_coupling(self):
        rng = np.random.default_rng(6)
        spec = _zero_coupling_spec(rng, 2)
        report = ergodicity(spec)
        assert report.kalman_rank == 0
        assert not report.unique_stationary


class TestGaugeInvariant:
    @pytest.mark.parametrize("seed", range(50))
    def test_lifted_agreement(self, seed):
        rng = np.random.default_rng(100 + seed)
        L = int(rng.integers(1, 7))
        K = int(rng.integers(1, 4))
        t0 = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
        t0 = (t0 + t0.conj().T) / 2
        th0 = rng.standard_normal((L, K)) + 1j * rng.standard_normal((L, K))
        mb0 = np.diag(rng.uniform(0.05, 0.95, size=K)).astype(complex)
        gi = make_gauge_invariant(t0, th0, mb0)
        reduced = ergodicity_gauge_invariant(gi)
        lifted = ergodicity(lift_gauge_invariant(gi))
        assert reduced.unique_stationary == lifted.unique_stationary
        assert reduced.converges == lifted.converges
        assert lifted.kalman_rank == 2 * reduced.kalman_rank

    @pytest.mark.parametrize("length", [3, 8, 20])
    def test_two_bath_chain_always_unique(self, length):
        rng = np.random.default_rng(7)
        gi, _ = two_bath_chain(
            ChainParams(
                length=length,
                theta1=float(rng.uniform(0.2, 3.0)),
                theta_l=float(rng.uniform(0.2, 3.0)),
                n1=0.8,
                n_l=0.1,
            )
        )
        assert ergodicity_gauge_invariant(gi).unique_stationary

    def test_zero_coupling_scalar_hamiltonian(self):
        gi = make_gauge_invariant(2.0 * np.eye(3), np.zeros((3, 1)), np.array([[0.5]]))
        report = ergodicity_gauge_invariant(gi)
        assert report.kalman_rank == 0
        assert not report.unique_stationary
        assert report.converges  # whole space is one eigenspace

    def test_zero_coupling_chain_does_not_converge(self):
        gi = make_gauge_invariant(chain_hamiltonian(3), np.zeros((3, 1)), np.array([[0.5]]))
        assert not ergodicity_gauge_invariant(gi).converges

    def test_pairing_block_stays_zero(self):
        rng = np.random.default_rng(8)
        gi = make_gauge_invariant(
            chain_hamiltonian(3), rng.standard_normal((3, 2)), 0.5 * np.eye(2)
        )
        m0 = validate_small_covariance(np.diag([0.9, 0.5, 0.2]))
        m_t, a_t = propagate_gauge_invariant(gi, m0, np.zeros((3, 3)), 2.0)
        assert np.abs(a_t).max() == 0.0
        m_t.validate()

    def test_matches_lifted_propagation(self):
        rng = np.random.default_rng(9)
        L = 3
        t0 = rng.standard_normal((L, L))
        t0 = (t0 + t0.T) / 2
        gi = make_gauge_invariant(t0, rng.standard_normal((L, 2)), 0.5 * np.eye(2))
        m0 = validate_small_covariance(np.diag([0.8, 0.5, 0.3]))
        m_t, _ = propagate_gauge_invariant(gi, m0, np.zeros((L, L)), 0.7)
        full_t = propagate(lift_gauge_invariant(gi), full_from_small(m0), 0.7)
        small = convert_basis(full_t, CA).entries[:L, :L]
        assert np.abs(small - m_t.entries).max() < 1e-9

    def test_pairing_block_decays_under_uniqueness(self):
        rng = np.random.default_rng(10)
        gi = make_gauge_invariant(
            chain_hamiltonian(3), np.array([[1.0], [0.0], [0.0]]), np.array([[0.4]])
        )
        a0 = rng.standard_normal((3, 3)) * 0.1
        _, a_t = propagate_gauge_invariant(
            gi, validate_small_covariance(0.5 * np.eye(3)), a0, 80.0
        )
        assert np.abs(a_t).max() < 1e-8

    def test_lifted_pairing_block_consistency(self):
        # the A block of the lifted flow obeys the same reduced equation
        rng = np.random.default_rng(11)
        L = 2
        gi = make_gauge_invariant(
            (lambda m: (m + m.conj().T) / 2)(
                rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
            ),
            rng.standard_normal((L, 1)),
            np.array([[0.3]]),
        )
        b = 0.1 * (rng.standard_normal((L, L)) - np.eye(L) * 0.0)
        a0 = b - b.T  # antisymmetric pairing block keeps M a covariance
        m0_small = validate_small_covariance(0.5 * np.eye(L))
        full0 = np.block(
            [[m0_small.entries, a0], [-a0.conj(), np.eye(L) - m0_small.entries.conj()]]
        )
        cov0 = validate_covariance(full0, CA)
        m_t, a_t = propagate_gauge_invariant(gi, m0_small, a0, 0.9)
        full_t = convert_basis(propagate(lift_gauge_invariant(gi), cov0, 0.9), CA).entries
        assert np.abs(full_t[:L, :L] - m_t.entries).max() < 1e-9
        assert np.abs(full_t[:L, L:] - a_t).max() < 1e-9

    def test_stationary_gauge_invariant_matches_lift(self):
        rng = np.random.default_rng(12)
        gi = make_gauge_invariant(
            chain_hamiltonian(4), rng.standard_normal((4, 2)), np.diag([0.9, 0.2]).astype(complex)
        )
        small = stationary_gauge_invariant(gi).entries
        full = stationary(lift_gauge_invariant(gi))
        assert np.abs(convert_basis(full, CA).entries[:4, :4] - small).max() < 1e-10


class TestRealCaseKalman:
    @staticmethod
    def _xy_blocks(length, kappa, h, theta1, theta2):
        d = np.diag(np.ones(length - 1), 1)
        c_t = h * np.eye(length) + 0.5 * (1 - kappa) * d + 0.5 * (1 + kappa) * d.T
        c_th = np.zeros((length, 2))
        c_th[0, 0] = -0.5 * (1 + kappa) * theta1
        c_th[-1, 1] = -0.5 * (1 - kappa) * theta2
        return c_t, c_th

    def test_xy_anisotropic_true(self):
        c_t, c_th = self._xy_blocks(4, 0.5, 0.0, 1.0, 1.0)
        assert real_case_kalman(c_t, c_th)

    def test_xy_ising_point_false(self):
        c_t, c_th = self._xy_blocks(4, 1.0, 0.0, 1.0, 1.0)
        assert not real_case_kalman(c_t, c_th)

    def test_square_invertible_coupling(self):
        rng = np.random.default_rng(13)
        c_t = rng.standard_normal((4, 4))
        c_th = np.eye(4) + 0.1 * rng.standard_normal((4, 4))
        assert real_case_kalman(c_t, c_th)

    @pytest.mark.parametrize("seed", range(10))
    def test_agrees_with_assembled_spec(self, seed):
        rng = np.random.default_rng(200 + seed)
        L, K = 3, 2
        c_t = rng.standard_normal((L, L))
        c_th = rng.standard_normal((L, K))
        if seed % 3 == 0:
            c_th[:, 1] = 0.0
            c_th[1:, 0] = 0.0  # often controllability-deficient
        zl, zk = np.zeros((L, L)), np.zeros((L, K))
        t = validate_qf(np.block([[zl, 1j * c_t], [-1j * c_t.T, zl]]), MAJ)
        theta = validate_coupling(np.block([[zk, 1j * c_th], [-1j * c_th, zk]]), MAJ)
        spec = make_semigroup(t, theta, random_covariance(rng, K))
        assert real_case_kalman(c_t, c_th) == ergodicity(spec).unique_stationary


class TestSupportDecomposition:
    def test_faithful_state(self):
        rng = np.random.default_rng(14)
        m = random_covariance(rng, 3, beta=0.8)
        a, c, u = support_decomposition(m)
        assert (a, c) == (0, 3)
        u.validate()

    def test_vacuum(self):
        zero = np.zeros((3, 3))
        vac = validate_covariance(np.block([[np.eye(3), zero], [zero, zero]]), CA)
        a, c, _ = support_decomposition(vac)
        assert (a, c) == (3, 0)

    def test_empty_bath_chain(self):
        gi, _ = two_bath_chain(ChainParams(length=3, theta1=1.0, theta_l=1.0, n1=1.0, n_l=1.0))
        m_inf = stationary(lift_gauge_invariant(gi))
        a, c, u = support_decomposition(m_inf)
        assert (a, c) == (3, 0)
        # the transform diagonalizes the stationary covariance with pinned modes first
        mc = convert_basis(m_inf, CA).entries
        diag = u.entries.conj().T @ mc @ u.entries
        assert np.abs(np.diag(diag)[:3].real - 1.0).max() < 1e-7

    def test_fully_occupied_modes_count_once(self):
        zero = np.zeros((2, 2))
        occupied = validate_covariance(np.block([[zero, zero], [zero, np.eye(2)]]), CA)
        a, c, _ = support_decomposition(occupied)
        assert (a, c) == (2, 0)


class TestChainPredictionAlgebra:
    @pytest.mark.parametrize("seed", range(20))
    def test_barycenter_weights_sum_to_one(self, seed):
        rng = np.random.default_rng(300 + seed)
        th1, thl = rng.uniform(0.2, 3.0, size=2)
        _, at_10 = two_bath_chain(ChainParams(5, th1, thl, 1.0, 0.0))
        _, at_01 = two_bath_chain(ChainParams(5, th1, thl, 0.0, 1.0))
        for field in ("p1", "pm", "pL"):
            assert abs(getattr(at_10, field) + getattr(at_01, field) - 1.0) < 1e-12

    def test_current_sign(self):
        _, up = two_bath_chain(ChainParams(4, 1.3, 0.7, 0.9, 0.2))
        _, down = two_bath_chain(ChainParams(4, 1.3, 0.7, 0.2, 0.9))
        assert up.current > 0 > down.current
