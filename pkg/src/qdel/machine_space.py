"""Machine parameters and concrete machine vectors realized from their Gram matrix."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from numpy.typing import NDArray

NAMES = ("A", "A0", "A1", "B0", "B1", "C0", "D0")
INDEX = {name: i for i, name in enumerate(NAMES)}

UNIT_TOL = 1e-12
EIG_TOL = 1e-12
# an order below the reconstruction tolerance so dropped eigenvalues never breach it
RANK_TOL = 1e-13


class InfeasibleParamsError(ValueError):
    """No set of machine vectors realizes the requested inner products."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class MachineParams:
    """Free parameters of a deletion machine.

    ``lam`` sets the norms of the final machine vectors, ``y`` is the overlap of
    the initial machine state with A0, A1 and D0, and (m1, m2) fix the
    standard state m1|0> + m2|1>.
    """

    lam: float
    y: float = 0.0
    m1: float = 1 / sqrt(2)
    m2: complex = 1 / sqrt(2)

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "m1", float(self.m1))
        object.__setattr__(self, "m2", complex(self.m2))
        if not 0.0 <= self.lam <= 0.5:
            raise ValueError(f"lambda must lie in [0, 1/2], got {self.lam}")
        if self.y < 0.0:
            raise ValueError(f"Y must be non-negative, got {self.y}")
        norm = self.m1**2 + abs(self.m2) ** 2
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"m1^2 + |m2|^2 = {norm!r}, expected 1")

    @property
    def feasible(self) -> bool:
        return analytic_feasible(self.lam, self.y)


def analytic_feasible(lam: float, y: float) -> bool:
    # |A> has component y/sqrt(1-2 lam) along each of three orthogonal directions
    return 3.0 * y * y <= (1.0 - 2.0 * lam) + EIG_TOL


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: NDArray[np.complex128]
    lam: float
    y: float

    def __post_init__(self):
        g = np.array(self.entries, dtype=np.complex128)
        if g.shape != (7, 7):
            raise ValueError(f"Gram matrix must be 7x7, got {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "entries", g)

    def __getitem__(self, pair) -> complex:
        a, b = pair
        return complex(self.entries[INDEX[a], INDEX[b]])

    def with_entry(self, a: str, b: str, value: complex) -> GramMatrix:
        """Copy with <a|b> = value and <b|a> = conj(value)."""
        g = self.entries.copy()
        g[INDEX[a], INDEX[b]] = value
        g[INDEX[b], INDEX[a]] = np.conj(value)
        return GramMatrix(g, self.lam, self.y)


def build_gram(params: MachineParams) -> GramMatrix:
    lam, y = params.lam, params.y
    g = np.zeros((7, 7), dtype=np.complex128)
    diag = {
        "A": 1.0,
        "A0": 1 - 2 * lam,
        "A1": 1 - 2 * lam,
        "D0": 1 - 2 * lam,
        "B0": lam,
        "B1": lam,
        "C0": 2 * lam,
    }
    for name, value in diag.items():
        g[INDEX[name], INDEX[name]] = value
    for name in ("A0", "A1", "D0"):
        g[INDEX["A"], INDEX[name]] = y
        g[INDEX[name], INDEX["A"]] = y
    return GramMatrix(g, lam, y)


@dataclass(frozen=True)
class FeasibilityRecord:
    min_eigenvalue: float
    rank: int
    feasible: bool
    analytic_feasible: bool

    @property
    def agree(self) -> bool:
        return self.feasible == self.analytic_feasible


def _eigh(gram: GramMatrix):
    g = gram.entries
    if not np.any(g.imag):
        return np.linalg.eigh(g.real)
    return np.linalg.eigh(g)


def check_feasible(gram: GramMatrix) -> FeasibilityRecord:
    w, _ = _eigh(gram)
    return FeasibilityRecord(
        min_eigenvalue=float(w[0]),
        rank=int(np.sum(w >= RANK_TOL)),
        feasible=bool(w[0] >= -EIG_TOL),
        analytic_feasible=analytic_feasible(gram.lam, gram.y),
    )


@dataclass(frozen=True, eq=False)
class MachineBasis:
    vectors: dict[str, NDArray[np.complex128]]
    d: int
    gram: GramMatrix

    def __getitem__(self, name: str) -> NDArray[np.complex128]:
        return self.vectors[name]

    def matrix(self) -> NDArray[np.complex128]:
        """Column stack of the seven vectors in canonical order."""
        return np.column_stack([self.vectors[n] for n in NAMES])

    def reconstruction_residual(self) -> float:
        v = self.matrix()
        return float(np.max(np.abs(v.conj().T @ v - self.gram.entries)))


def realize_vectors(gram: GramMatrix) -> MachineBasis:
    """Vectors whose pairwise inner products reproduce ``gram``.

    Uses the spectral decomposition G = Q diag(w) Q^dagger and takes the rows
    sqrt(w) Q^dagger for the nonzero eigenvalues, largest first. Each
    eigenvector is rephased so its largest-magnitude entry is real positive,
    which makes the output deterministic.
    """
    record = check_feasible(gram)
    if not record.feasible:
        raise InfeasibleParamsError(
            f"Gram matrix is not PSD (min eigenvalue {record.min_eigenvalue:.3e})",
            record,
        )
    w, q = _eigh(gram)
    order = np.argsort(w)[::-1]
    w, q = w[order], q[:, order].astype(np.complex128)
    keep = w >= RANK_TOL
    w, q = w[keep], q[:, keep]
    for k in range(q.shape[1]):
        pivot = q[np.argmax(np.abs(q[:, k])), k]
        q[:, k] *= np.conj(pivot) / abs(pivot)
    rows = np.sqrt(w)[:, None] * q.conj().T
    vectors = {}
    for name in NAMES:
        vec = rows[:, INDEX[name]].copy()
        vec.setflags(write=False)
        vectors[name] = vec
    return MachineBasis(vectors, rows.shape[0], gram)


@dataclass(frozen=True, eq=False)
class StandardState:
    sigma: NDArray[np.complex128]
    sigma_perp: NDArray[np.complex128]
    sigma_prime: NDArray[np.complex128]


def standard_state(m1: float, m2: complex) -> StandardState:
    m2 = complex(m2)
    if abs(m1 * m1 + abs(m2) ** 2 - 1.0) > UNIT_TOL:
        raise ValueError(f"standard state (m1={m1}, m2={m2}) is not normalized")
    sigma = np.array([m1, m2], dtype=np.complex128)
    perp = np.array([-np.conj(m2), m1], dtype=np.complex128)
    prime = (sigma + perp) / sqrt(2)
    for v in (sigma, perp, prime):
        v.setflags(write=False)
    return StandardState(sigma, perp, prime)
