"""Tests for the quantum information toolbox.

Independent oracles used here:

- relative entropy against a direct ``scipy.linalg.logm`` evaluation on
  full-rank states;
- Uhlmann overlap against an explicit Kronecker-product inner product and
  against the closed-form fidelity of reduced states;
- hand-computed diagonal (classical) examples with frozen values.
"""

import math

import numpy as np
import pytest
import scipy.linalg

from anchorrep.games import ZeroMassError
from anchorrep.qinfo import (
    CQState,
    DensityMatrix,
    POVM,
    QuantumValidationError,
    check_chain_rule,
    check_density_matrix,
    check_fuchs_van_de_graaf,
    check_pinsker,
    check_povm,
    check_quantum_raz,
    cq_entropy,
    cq_max_relative_entropy,
    cq_relative_entropy,
    fidelity,
    max_relative_entropy,
    mutual_information,
    partial_trace,
    psd_power,
    psd_sqrt,
    random_cq_state,
    random_density_matrix,
    random_povm,
    random_pure_matrix,
    random_unitary,
    relative_entropy,
    trace_distance,
    trace_norm,
    uhlmann_unitary,
    vn_entropy,
)


def kron_state(t: np.ndarray) -> np.ndarray:
    """Flatten a coefficient matrix into the corresponding ket."""
    return t.reshape(-1)


class TestValidation:
    def test_density_matrix_accepts_valid(self):
        rho = np.array([[0.5, 0.25], [0.25, 0.5]], dtype=complex)
        dm = DensityMatrix(rho)
        assert dm.dim == 2

    def test_density_matrix_rejects_nonhermitian(self):
        with pytest.raises(QuantumValidationError, match="Hermitian"):
            check_density_matrix(np.array([[0.5, 0.3], [0.1, 0.5]]))

    def test_density_matrix_rejects_bad_trace(self):
        with pytest.raises(QuantumValidationError, match="trace"):
            check_density_matrix(np.eye(2))

    def test_density_matrix_rejects_negative(self):
        with pytest.raises(QuantumValidationError, match="negative"):
            check_density_matrix(np.diag([1.5, -0.5]))

    def test_povm_valid_and_labels(self):
        p = POVM({"0": np.diag([1.0, 0.0]), "1": np.diag([0.0, 1.0])})
        assert p.labels() == ("0", "1")
        assert p.dim == 2

    def test_povm_rejects_incomplete(self):
        with pytest.raises(QuantumValidationError, match="identity"):
            check_povm({"0": np.diag([1.0, 0.0]), "1": np.diag([0.0, 0.5])})

    def test_povm_rejects_negative_effect(self):
        with pytest.raises(QuantumValidationError, match="negative"):
            check_povm({"0": np.diag([1.0, -0.25]), "1": np.diag([0.0, 1.25])})

    def test_random_povm_is_valid(self):
        rng = np.random.default_rng(5)
        for d, k in [(2, 2), (3, 4), (4, 3)]:
            check_povm(random_povm(rng, d, k))

    def test_random_unitary_is_unitary(self):
        rng = np.random.default_rng(6)
        u = random_unitary(rng, 4)
        assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-10)


class TestEntropies:
    def test_vn_entropy_frozen(self):
        assert vn_entropy(np.diag([0.5, 0.5])) == pytest.approx(1.0, abs=1e-12)
        assert vn_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)
        # H(1/4, 3/4) = 2 - (3/4) log2 3
        expect = 2.0 - 0.75 * math.log2(3.0)
        assert vn_entropy(np.diag([0.25, 0.75])) == pytest.approx(expect, abs=1e-12)

    def test_relative_entropy_frozen_diagonal(self):
        # S(|0><0| || diag(1/4, 3/4)) = -log2(1/4) = 2
        rho = np.diag([1.0, 0.0])
        sigma = np.diag([0.25, 0.75])
        assert relative_entropy(rho, sigma) == pytest.approx(2.0, abs=1e-10)

    def test_relative_entropy_zero_iff_equal(self):
        rng = np.random.default_rng(7)
        rho = random_density_matrix(rng, 3)
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-9)
        sigma = random_density_matrix(rng, 3)
        assert relative_entropy(rho, sigma) > 1e-4

    def test_relative_entropy_support_mismatch(self):
        rho = np.diag([0.5, 0.5])
        sigma = np.diag([1.0, 0.0])
        assert relative_entropy(rho, sigma) == math.inf

    def test_relative_entropy_against_logm_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            d = int(rng.integers(2, 5))
            rho = random_density_matrix(rng, d)
            sigma = random_density_matrix(rng, d)
            oracle = float(
                np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(sigma))).real
            ) / math.log(2.0)
            assert relative_entropy(rho, sigma) == pytest.approx(oracle, abs=1e-8)

    def test_max_relative_entropy_frozen(self):
        rho = np.diag([0.75, 0.25])
        sigma = np.diag([0.5, 0.5])
        assert max_relative_entropy(rho, sigma) == pytest.approx(math.log2(1.5), abs=1e-10)

    def test_max_dominates_relative_entropy(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            d = int(rng.integers(2, 5))
            rho = random_density_matrix(rng, d)
            sigma = random_density_matrix(rng, d)
            assert relative_entropy(rho, sigma) <= max_relative_entropy(rho, sigma) + 1e-9

    def test_mutual_information_product_and_entangled(self):
        rng = np.random.default_rng(10)
        a = random_density_matrix(rng, 2)
        b = random_density_matrix(rng, 3)
        assert mutual_information(np.kron(a, b), (2, 3)) == pytest.approx(0.0, abs=1e-9)
        # maximally entangled qubit pair: I(A:B) = 2 bits
        t = np.eye(2) / math.sqrt(2.0)
        psi = kron_state(t)
        assert mutual_information(np.outer(psi, psi.conj()), (2, 2)) == pytest.approx(
            2.0, abs=1e-9
        )


class TestDistances:
    def test_trace_distance_frozen(self):
        rho = np.diag([1.0, 0.0])
        sigma = np.diag([0.25, 0.75])
        assert trace_distance(rho, sigma) == pytest.approx(0.75, abs=1e-12)

    def test_fidelity_frozen(self):
        rho = np.diag([1.0, 0.0])
        sigma = np.diag([0.25, 0.75])
        assert fidelity(rho, sigma) == pytest.approx(0.5, abs=1e-12)

    def test_fidelity_pure_states_overlap(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            w = rng.normal(size=3) + 1j * rng.normal(size=3)
            v /= np.linalg.norm(v)
            w /= np.linalg.norm(w)
            rho = np.outer(v, v.conj())
            sigma = np.outer(w, w.conj())
            assert fidelity(rho, sigma) == pytest.approx(abs(np.vdot(v, w)), abs=1e-10)

    def test_psd_sqrt_and_power(self):
        rng = np.random.default_rng(12)
        rho = random_density_matrix(rng, 4)
        root = psd_sqrt(rho)
        assert np.allclose(root @ root, rho, atol=1e-10)
        inv = psd_power(rho, -1.0)
        assert np.allclose(inv @ rho, np.eye(4), atol=1e-8)

    def test_psd_power_pseudoinverse_on_singular(self):
        m = np.diag([2.0, 0.0])
        inv = psd_power(m, -1.0)
        assert np.allclose(inv, np.diag([0.5, 0.0]), atol=1e-12)

    def test_partial_trace_of_product(self):
        rng = np.random.default_rng(13)
        a = random_density_matrix(rng, 2)
        b = random_density_matrix(rng, 3)
        joint = np.kron(a, b)
        assert np.allclose(partial_trace(joint, (2, 3), 0), a, atol=1e-12)
        assert np.allclose(partial_trace(joint, (2, 3), 1), b, atol=1e-12)

    def test_pinsker_and_fvdg_random(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            d = int(rng.integers(2, 5))
            rho = random_density_matrix(rng, d)
            sigma = random_density_matrix(rng, d)
            pin = check_pinsker(rho, sigma)
            assert pin.holds, (pin.lhs, pin.rhs)
            fv = check_fuchs_van_de_graaf(rho, sigma)
            assert fv.holds, fv

    def test_fvdg_frozen_example(self):
        rho = np.diag([1.0, 0.0])
        sigma = np.diag([0.25, 0.75])
        fv = check_fuchs_van_de_graaf(rho, sigma)
        assert fv.lower == pytest.approx(0.5, abs=1e-12)
        assert fv.middle == pytest.approx(0.75, abs=1e-12)
        assert fv.upper == pytest.approx(math.sqrt(0.75), abs=1e-12)


class TestCQStates:
    def build_pair(self, seed=15, keys=("u", "v", "w"), d=3):
        rng = np.random.default_rng(seed)
        return random_cq_state(rng, keys, d), random_cq_state(rng, keys, d)

    def test_pmf_and_trace(self):
        rho, _ = self.build_pair()
        pmf = rho.pmf()
        assert sum(pmf.values()) == pytest.approx(1.0, abs=1e-9)
        assert rho.trace() == pytest.approx(1.0, abs=1e-9)

    def test_conditioning_exact_log_identity(self):
        # restricting to an event E and renormalizing gives
        # S(conditioned || original) = log2(1 / P(E)) exactly
        rho, _ = self.build_pair(seed=16)
        event = lambda k: k in ("u", "v")
        mass = sum(rho.pmf()[k] for k in ("u", "v"))
        cond = rho.conditioned(event)
        assert cq_relative_entropy(cond, rho) == pytest.approx(
            math.log2(1.0 / mass), abs=1e-9
        )

    def test_conditioning_zero_mass_raises(self):
        rho, _ = self.build_pair(seed=17)
        with pytest.raises(ZeroMassError):
            rho.conditioned(lambda k: False)

    def test_classical_kl_frozen(self):
        one = np.array([[1.0]])
        first = CQState({"a": 0.5 * one, "b": 0.5 * one})
        second = CQState({"a": 0.25 * one, "b": 0.75 * one})
        expect = 0.5 * math.log2(2.0) + 0.5 * math.log2(0.5 / 0.75)
        assert cq_relative_entropy(first, second) == pytest.approx(expect, abs=1e-12)

    def test_missing_block_is_infinite(self):
        one = np.array([[1.0]])
        first = CQState({"a": 0.5 * one, "b": 0.5 * one})
        second = CQState({"a": 1.0 * one})
        assert cq_relative_entropy(first, second) == math.inf

    def test_cq_entropy_splits_classical_quantum(self):
        rng = np.random.default_rng(18)
        rho = random_cq_state(rng, ["a", "b"], 2)
        pmf = rho.pmf()
        expect = -sum(p * math.log2(p) for p in pmf.values())
        expect += sum(p * vn_entropy(rho.blocks[k] / p) for k, p in pmf.items())
        assert cq_entropy(rho) == pytest.approx(expect, abs=1e-9)

    def test_cq_max_relative_entropy_dominates(self):
        rho, sigma = self.build_pair(seed=19)
        assert cq_relative_entropy(rho, sigma) <= cq_max_relative_entropy(rho, sigma) + 1e-9


class TestChainRule:
    def test_random_instances(self):
        rng = np.random.default_rng(20)
        for _ in range(40):
            d = int(rng.integers(2, 5))
            keys = ["k%d" % j for j in range(int(rng.integers(2, 5)))]
            rho = random_cq_state(rng, keys, d)
            sigma = random_cq_state(rng, keys, d)
            res = check_chain_rule(rho, sigma)
            assert res.consistent, res

    def test_support_mismatch_consistent(self):
        one = np.array([[1.0]])
        first = CQState({"a": 0.5 * one, "b": 0.5 * one})
        second = CQState({"a": 1.0 * one})
        res = check_chain_rule(first, second)
        assert res.lhs == math.inf and res.rhs == math.inf and res.consistent

    def test_handmade_equality(self):
        first = CQState({"a": 0.5 * np.diag([0.5, 0.5]), "b": 0.5 * np.diag([1.0, 0.0])})
        second = CQState({"a": 0.25 * np.diag([0.25, 0.75]), "b": 0.75 * np.diag([0.5, 0.5])})
        res = check_chain_rule(first, second)
        assert res.consistent
        kl = 0.5 * math.log2(2.0) + 0.5 * math.log2(0.5 / 0.75)
        inner_a = relative_entropy(np.diag([0.5, 0.5]), np.diag([0.25, 0.75]))
        inner_b = relative_entropy(np.diag([1.0, 0.0]), np.diag([0.5, 0.5]))
        assert res.lhs == pytest.approx(kl + 0.5 * inner_a + 0.5 * inner_b, abs=1e-9)


class TestQuantumRaz:
    def random_instance(self, rng, n, alphabet=2, d=2):
        keys = []

        def fill(prefix):
            if len(prefix) == n:
                keys.append(tuple(prefix))
                return
            for v in range(alphabet):
                fill(prefix + [v])

        fill([])
        rho = random_cq_state(rng, keys, d)
        return rho

    def marginals_of(self, rho, n):
        out = []
        for i in range(n):
            pmf = rho.map_keys(lambda k, i=i: k[i]).pmf()
            out.append(pmf)
        return out

    def test_random_instances_hold(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(2, 4))
            rho = self.random_instance(rng, n)
            margs = self.marginals_of(rho, n)
            sigma_a = random_density_matrix(rng, 2)
            res = check_quantum_raz(rho, margs, sigma_a)
            assert res.holds, res

    def test_own_marginals_reference(self):
        rng = np.random.default_rng(22)
        rho = self.random_instance(rng, 3)
        margs = self.marginals_of(rho, 3)
        res = check_quantum_raz(rho, margs, rho.quantum_marginal())
        assert res.holds and res.slack >= -1e-8

    def test_missing_support_infinite(self):
        rng = np.random.default_rng(23)
        rho = self.random_instance(rng, 2)
        margs = self.marginals_of(rho, 2)
        margs[0] = {k: (1.0 if k == 0 else 0.0) for k in margs[0]}
        res = check_quantum_raz(rho, margs, rho.quantum_marginal())
        assert res.divergence == math.inf and res.holds

    def test_rejects_wrong_arity(self):
        rng = np.random.default_rng(24)
        rho = self.random_instance(rng, 2)
        with pytest.raises(QuantumValidationError, match="marginals"):
            check_quantum_raz(rho, [{0: 1.0}], rho.quantum_marginal())


class TestUhlmann:
    def reduced(self, t, side):
        if side == "left":
            # unitary acts on the left register; untouched register is right
            return (t.conj().T @ t).T
        return t @ t.conj().T

    def test_overlap_matches_fidelity_oracle(self):
        rng = np.random.default_rng(25)
        for trial in range(60):
            da = int(rng.integers(2, 5))
            db = int(rng.integers(2, 5))
            side = "left" if trial % 2 == 0 else "right"
            t1 = random_pure_matrix(rng, da, db)
            t2 = random_pure_matrix(rng, da, db)
            res = uhlmann_unitary(t1, t2, side)
            oracle = fidelity(self.reduced(t1, side), self.reduced(t2, side))
            assert res.overlap == pytest.approx(oracle, abs=1e-8)

    def test_achieved_overlap_rotated_positive(self):
        rng = np.random.default_rng(26)
        for side in ("left", "right"):
            t1 = random_pure_matrix(rng, 3, 4)
            t2 = random_pure_matrix(rng, 3, 4)
            res = uhlmann_unitary(t1, t2, side)
            u = res.unitary
            assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-10)
            if side == "left":
                moved = u @ t1
            else:
                moved = t1 @ u.T
            inner = np.vdot(kron_state(t2), kron_state(moved))
            assert abs(inner.imag) <= 1e-9
            assert inner.real == pytest.approx(res.overlap, abs=1e-9)

    def test_identical_states_align_perfectly(self):
        rng = np.random.default_rng(27)
        t = random_pure_matrix(rng, 2, 2)
        res = uhlmann_unitary(t, t, "left")
        assert res.overlap == pytest.approx(1.0, abs=1e-10)

    def test_rejects_bad_side(self):
        t = np.eye(2) / math.sqrt(2.0)
        with pytest.raises(QuantumValidationError, match="side"):
            uhlmann_unitary(t, t, "middle")

    def test_trace_norm_frozen(self):
        assert trace_norm(np.diag([3.0, -4.0])) == pytest.approx(7.0, abs=1e-12)
