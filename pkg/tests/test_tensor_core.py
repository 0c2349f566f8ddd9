import itertools
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qdel.tensor_core import (
    DensityOp,
    DimensionMismatchError,
    NotNormalizedError,
    QubitState,
    StateVector,
    density_of,
    expectation,
    partial_trace,
    tensor_product,
    validate_density,
)

KET0 = StateVector([1, 0], (2,))
KET1 = StateVector([0, 1], (2,))


def brute_partial_trace(mat, dims, keep_idx):
    """Loop-based reduced operator; the slow independent reference."""
    n = len(dims)
    kept = [dims[i] for i in keep_idx]
    out = np.zeros((int(np.prod(kept)),) * 2, dtype=complex)
    full = list(itertools.product(*[range(d) for d in dims]))
    flat = {idx: k for k, idx in enumerate(full)}
    for i in full:
        for j in full:
            if any(i[k] != j[k] for k in range(n) if k not in keep_idx):
                continue
            r = np.ravel_multi_index([i[k] for k in keep_idx], kept)
            c = np.ravel_multi_index([j[k] for k in keep_idx], kept)
            out[r, c] += mat[flat[i], flat[j]]
    return out


def random_density(rng, dims, rank=3):
    n = int(np.prod(dims))
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return DensityOp(rho / np.trace(rho), dims)


class TestTensorProduct:
    def test_basis_product(self):
        out = tensor_product([KET0, KET0])
        assert out.dims == (2, 2)
        np.testing.assert_array_equal(out.amplitudes, [1, 0, 0, 0])

    def test_identity_embedding(self):
        v = StateVector(np.array([0.6, 0.8j, 0.0]), (3,))
        out = tensor_product([QubitState(1.0, 0.0).vector(), v])
        np.testing.assert_allclose(out.amplitudes[:3], v.amplitudes)
        np.testing.assert_array_equal(out.amplitudes[3:], 0)

    def test_three_fifths_four_fifths(self):
        psi = QubitState(3 / 5, 4 / 5).vector()
        out = tensor_product([psi, psi])
        # (a, b) x (a, b) by hand: a*a, a*b, b*a, b*b
        np.testing.assert_allclose(out.amplitudes, [9 / 25, 12 / 25, 12 / 25, 16 / 25], atol=1e-15)

    def test_empty_list(self):
        with pytest.raises(ValueError):
            tensor_product([])

    def test_norm_is_product_of_norms(self):
        a = StateVector([1.0, 2.0], (2,))
        b = StateVector([3.0, 0.0, 4.0], (3,))
        assert tensor_product([a, b]).norm() == pytest.approx(a.norm() * b.norm())

    @given(st.integers(0, 10_000))
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        vs = [StateVector(rng.normal(size=d) + 1j * rng.normal(size=d), (d,)) for d in (2, 2, 3)]
        left = tensor_product([tensor_product(vs[:2]), vs[2]])
        right = tensor_product([vs[0], tensor_product(vs[1:])])
        assert left.dims == right.dims == (2, 2, 3)
        assert np.max(np.abs(left.amplitudes - right.amplitudes)) <= 1e-15 * max(1, left.norm())


def test_state_vector_rejects_wrong_length():
    with pytest.raises(DimensionMismatchError):
        StateVector(np.zeros(5), (2, 2))


def test_state_vector_is_immutable():
    v = StateVector([1, 0], (2,))
    with pytest.raises(ValueError):
        v.amplitudes[0] = 2


class TestDensityOf:
    def test_ket0(self):
        np.testing.assert_array_equal(density_of(KET0).matrix, [[1, 0], [0, 0]])

    def test_plus(self):
        plus = StateVector(np.array([1, 1]) / sqrt(2), (2,))
        np.testing.assert_allclose(density_of(plus).matrix, 0.5 * np.ones((2, 2)))

    @given(arrays(np.float64, 6, elements=st.floats(-1, 1)))
    def test_rank_one_projector(self, raw):
        if np.linalg.norm(raw) < 1e-3:
            return
        s = StateVector(raw / np.linalg.norm(raw), (2, 3))
        rho = density_of(s)
        w = np.linalg.eigvalsh(rho.matrix)
        assert abs(np.trace(rho.matrix) - 1) < 1e-12
        assert abs(w[0]) < 1e-12 and abs(w[-1] - 1) < 1e-12

    def test_unnormalized(self):
        with pytest.raises(NotNormalizedError):
            density_of(StateVector([1, 1], (2,)))


class TestPartialTrace:
    def test_bell_state(self):
        bell = StateVector(np.array([1, 0, 0, 1]) / sqrt(2), (2, 2))
        out = partial_trace(density_of(bell), {1})
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)
        assert out.modes == (1,)

    def test_product_factorizes(self):
        rng = np.random.default_rng(1)
        ra, rb = random_density(rng, (2,), 2), random_density(rng, (3,), 2)
        joint = DensityOp(np.kron(ra.matrix, rb.matrix), (2, 3))
        np.testing.assert_allclose(partial_trace(joint, {1}).matrix, ra.matrix, atol=1e-14)
        np.testing.assert_allclose(partial_trace(joint, {2}).matrix, rb.matrix, atol=1e-14)

    def test_keep_all_is_identity(self):
        rho = random_density(np.random.default_rng(2), (2, 2, 3))
        assert partial_trace(rho, {1, 2, 3}) is rho

    def test_absent_mode(self):
        rho = random_density(np.random.default_rng(3), (2, 2))
        with pytest.raises(KeyError):
            partial_trace(rho, {3})
        with pytest.raises(ValueError):
            partial_trace(rho, set())

    @pytest.mark.parametrize("keep", [{1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}])
    def test_matches_brute_force(self, keep):
        dims = (2, 2, 3)
        rho = random_density(np.random.default_rng(4), dims)
        idx = [i for i, m in enumerate((1, 2, 3)) if m in keep]
        expected = brute_partial_trace(rho.matrix, dims, idx)
        np.testing.assert_allclose(partial_trace(rho, keep).matrix, expected, atol=1e-14)

    @settings(max_examples=50)
    @given(st.integers(0, 10_000), st.integers(1, 5))
    def test_trace_hermiticity_and_two_step(self, seed, d):
        rho = random_density(np.random.default_rng(seed), (2, 2, d))
        for keep in ({1}, {2}, {3}, {1, 2}, {2, 3}):
            red = partial_trace(rho, keep)
            assert abs(red.trace() - rho.trace()) < 1e-12
            assert np.max(np.abs(red.matrix - red.matrix.conj().T)) < 1e-12
        two_step = partial_trace(partial_trace(rho, {1, 2}), {1})
        np.testing.assert_allclose(two_step.matrix, partial_trace(rho, {1}).matrix, atol=1e-12)


class TestExpectation:
    def test_ket0(self):
        assert expectation(density_of(KET0), KET0) == 1.0

    @given(st.floats(0, 1), st.floats(0, 2 * np.pi))
    def test_maximally_mixed(self, a2, phase):
        psi = QubitState.from_alpha2(a2, phase).vector()
        assert expectation(DensityOp(np.eye(2) / 2, (2,)), psi) == pytest.approx(0.5, abs=1e-15)

    def test_modified_retained_state_at_ket0(self):
        c = 1 / (2 * sqrt(2))
        rho = DensityOp(np.array([[0.25, c], [c, 0.75]]), (2,))
        assert expectation(rho, KET0) == pytest.approx(0.25, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            expectation(DensityOp(np.eye(4) / 4, (2, 2)), KET0)

    @given(st.integers(0, 10_000))
    def test_real_for_hermitian(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, (2, 3))
        phi = rng.normal(size=6) + 1j * rng.normal(size=6)
        phi /= np.linalg.norm(phi)
        raw = np.vdot(phi, rho.matrix @ phi)
        assert abs(raw.imag) < 1e-12
        assert -1e-10 <= expectation(rho, phi) <= 1 + 1e-10


class TestValidateDensity:
    def test_maximally_mixed_passes(self):
        diag = validate_density(DensityOp(np.eye(2) / 2, (2,)))
        assert diag.passed
        assert diag.min_eigenvalue == pytest.approx(0.5)

    def test_non_hermitian_fails(self):
        diag = validate_density(np.array([[1, 1], [0, 0]]))
        assert not diag.hermitian
        assert not diag.passed

    def test_negative_eigenvalue_fails(self):
        diag = validate_density(np.diag([1.2, -0.2]))
        assert diag.hermitian and diag.unit_trace and not diag.positive


class TestQubitState:
    def test_beta(self):
        q = QubitState.from_alpha2(0.25, np.pi / 2)
        assert q.alpha == pytest.approx(0.5)
        assert q.beta == pytest.approx(1j * sqrt(0.75))

    def test_unnormalized(self):
        with pytest.raises(NotNormalizedError):
            QubitState(0.5, 0.5)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            QubitState.from_alpha2(1.5)
