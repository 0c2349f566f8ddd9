from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdel.machine_space import (
    INDEX,
    NAMES,
    InfeasibleParamsError,
    MachineParams,
    build_gram,
    check_feasible,
    realize_vectors,
    standard_state,
)

FINALS = ("A0", "A1", "B0", "B1", "C0", "D0")


def block_min_eig(lam, y):
    """Smallest eigenvalue of the (A, A0, A1, D0) block, written out by hand."""
    s = 1 - 2 * lam
    block = np.array(
        [[1, y, y, y], [y, s, 0, 0], [y, 0, s, 0], [y, 0, 0, s]], dtype=float
    )
    return np.linalg.eigvalsh(block)[0]


def feasible_points(n=20):
    rng = np.random.default_rng(7)
    pts = [(0.0, 0.0), (0.5, 0.0), (0.25, 0.0), (0.25, 0.1)]
    while len(pts) < n:
        lam = rng.uniform(0, 0.5)
        pts.append((lam, rng.uniform(0, sqrt((1 - 2 * lam) / 3))))
    return pts


class TestMachineParams:
    def test_defaults(self):
        p = MachineParams(0.2)
        assert p.y == 0.0 and p.m1 == pytest.approx(1 / sqrt(2))
        assert p.feasible

    @pytest.mark.parametrize("kwargs", [{"lam": -0.1}, {"lam": 0.6}, {"lam": 0.2, "y": -1}, {"lam": 0.2, "m1": 1, "m2": 0.1}])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            MachineParams(**kwargs)

    def test_infeasible_flag(self):
        assert not MachineParams(0.4, 0.3).feasible
        assert MachineParams(0.4, 0.2).feasible


class TestBuildGram:
    def test_lambda_zero(self):
        g = build_gram(MachineParams(0.0, 0.0)).entries
        np.testing.assert_array_equal(g, np.diag([1, 1, 1, 0, 0, 0, 1]))

    def test_quarter(self):
        g = build_gram(MachineParams(0.25, 0.1))
        np.testing.assert_allclose(np.diag(g.entries).real, [1, 0.5, 0.5, 0.25, 0.25, 0.5, 0.5])
        for name in ("A0", "A1", "D0"):
            assert g["A", name] == g[name, "A"] == 0.1
        off = g.entries - np.diag(np.diag(g.entries))
        assert np.count_nonzero(off) == 6

    def test_half(self):
        g = build_gram(MachineParams(0.5, 0.0)).entries
        np.testing.assert_array_equal(g, np.diag([1, 0, 0, 0.5, 0.5, 1, 0]))

    def test_hermitian(self):
        g = build_gram(MachineParams(0.3, 0.2)).entries
        assert np.array_equal(g, g.conj().T)


class TestCheckFeasible:
    def test_infeasible(self):
        rec = check_feasible(build_gram(MachineParams(0.4, 0.3)))
        assert block_min_eig(0.4, 0.3) < 0
        assert not rec.feasible and not rec.analytic_feasible and rec.agree
        assert rec.min_eigenvalue == pytest.approx(block_min_eig(0.4, 0.3), abs=1e-12)

    def test_feasible(self):
        rec = check_feasible(build_gram(MachineParams(0.4, 0.2)))
        assert block_min_eig(0.4, 0.2) > 0
        assert rec.feasible and rec.analytic_feasible

    def test_half_lambda_rank(self):
        # A, B0, B1, C0 carry nonzero norm at lambda = 1/2
        rec = check_feasible(build_gram(MachineParams(0.5, 0.0)))
        assert rec.feasible
        assert rec.rank == 4

    @pytest.mark.parametrize("lam", [0.0, 0.1, 0.25, 0.4, 0.49])
    def test_boundary_flip(self, lam):
        edge = sqrt((1 - 2 * lam) / 3)
        below = check_feasible(build_gram(MachineParams(lam, edge - 1e-6)))
        above = check_feasible(build_gram(MachineParams(lam, edge + 1e-6)))
        assert below.feasible and not above.feasible


class TestRealizeVectors:
    def test_quarter_no_overlap(self):
        basis = realize_vectors(build_gram(MachineParams(0.25, 0.0)))
        v = basis.matrix()
        gram = v.conj().T @ v
        off = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off)) < 1e-12
        assert basis.d == 7

    def test_lambda_zero_zero_vectors(self):
        basis = realize_vectors(build_gram(MachineParams(0.0, 0.0)))
        assert basis.d == 4
        for name in ("B0", "B1", "C0"):
            assert np.all(basis[name] == 0)

    @pytest.mark.parametrize("lam,y", feasible_points())
    def test_reconstruction(self, lam, y):
        gram = build_gram(MachineParams(lam, y))
        basis = realize_vectors(gram)
        assert basis.reconstruction_residual() < 1e-12
        assert basis.d == int(np.sum(np.linalg.eigvalsh(gram.entries.real) >= 1e-13))

    @pytest.mark.parametrize("lam,y", feasible_points())
    def test_orthogonality_structure(self, lam, y):
        basis = realize_vectors(build_gram(MachineParams(lam, y)))
        for i, a in enumerate(FINALS):
            for b in FINALS[i + 1 :]:
                assert abs(np.vdot(basis[a], basis[b])) < 1e-12
        for name in ("B0", "B1", "C0"):
            assert abs(np.vdot(basis["A"], basis[name])) < 1e-12

    def test_deterministic(self):
        gram = build_gram(MachineParams(0.3, 0.15))
        a, b = realize_vectors(gram), realize_vectors(gram)
        for name in NAMES:
            np.testing.assert_array_equal(a[name], b[name])

    def test_real_vectors(self):
        basis = realize_vectors(build_gram(MachineParams(0.3, 0.15)))
        assert all(not np.any(basis[n].imag) for n in NAMES)

    def test_infeasible_raises(self):
        with pytest.raises(InfeasibleParamsError) as err:
            realize_vectors(build_gram(MachineParams(0.4, 0.3)))
        assert err.value.record is not None and not err.value.record.feasible

    @settings(max_examples=60)
    @given(st.floats(0, 0.5), st.floats(0, 1))
    def test_round_trip_property(self, lam, frac):
        y = frac * sqrt((1 - 2 * lam) / 3)
        basis = realize_vectors(build_gram(MachineParams(lam, y)))
        assert basis.reconstruction_residual() < 1e-12

    def test_complex_gram_entries(self):
        gram = build_gram(MachineParams(0.25, 0.0)).with_entry("B0", "C0", 0.05j)
        basis = realize_vectors(gram)
        assert basis.reconstruction_residual() < 1e-12
        assert np.vdot(basis["B0"], basis["C0"]) == pytest.approx(0.05j)


class TestStandardState:
    def test_computational(self):
        s = standard_state(1.0, 0.0)
        np.testing.assert_allclose(s.sigma, [1, 0])
        np.testing.assert_allclose(s.sigma_perp, [0, 1])
        np.testing.assert_allclose(s.sigma_prime, np.array([1, 1]) / sqrt(2))

    def test_equal_weights(self):
        r = 1 / sqrt(2)
        s = standard_state(r, r)
        np.testing.assert_allclose(s.sigma, [r, r])
        np.testing.assert_allclose(s.sigma_perp, [-r, r])
        np.testing.assert_allclose(s.sigma_prime, [0, 1], atol=1e-15)

    def test_imaginary_m2(self):
        s = standard_state(0.0, 1j)
        np.testing.assert_allclose(s.sigma, [0, 1j])
        np.testing.assert_allclose(s.sigma_perp, [1j, 0])
        assert abs(np.vdot(s.sigma, s.sigma_perp)) < 1e-12

    @given(st.floats(0, np.pi / 2), st.floats(0, 2 * np.pi))
    def test_orthonormal(self, theta, phase):
        s = standard_state(np.cos(theta), np.sin(theta) * np.exp(1j * phase))
        assert abs(np.vdot(s.sigma, s.sigma) - 1) < 1e-12
        assert abs(np.vdot(s.sigma_perp, s.sigma_perp) - 1) < 1e-12
        assert abs(np.vdot(s.sigma, s.sigma_perp)) < 1e-12

    def test_unnormalized(self):
        with pytest.raises(ValueError):
            standard_state(0.7, 0.7)
