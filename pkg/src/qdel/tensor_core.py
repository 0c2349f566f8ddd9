"""Dense complex linear algebra over small labeled tensor-product spaces.

Modes are labeled by integers. The deletion pipeline uses the fixed order
(1, 2, 3) = (retained qubit, deleted qubit, machine) and flattens amplitudes
row-major over that order.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from math import prod

import numpy as np
from numpy.typing import NDArray

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = -1e-10


class NotNormalizedError(ValueError):
    """Raised when an operation requires a unit vector and gets something else."""


class DimensionMismatchError(ValueError):
    pass


def _frozen(array: NDArray) -> NDArray[np.complex128]:
    out = np.array(array, dtype=np.complex128)
    out.setflags(write=False)
    return out


def _default_modes(n: int) -> tuple[int, ...]:
    return tuple(range(1, n + 1))


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: NDArray[np.complex128]
    dims: tuple[int, ...]
    modes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"factor dimensions must be >= 1, got {dims}")
        if amps.size != prod(dims):
            raise DimensionMismatchError(
                f"{amps.size} amplitudes do not fit dims {dims}"
            )
        modes = tuple(self.modes) or _default_modes(len(dims))
        if len(modes) != len(dims) or len(set(modes)) != len(modes):
            raise ValueError(f"modes {modes} do not label dims {dims}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "modes", modes)

    @classmethod
    def basis(cls, index: int, dim: int = 2) -> StateVector:
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, (dim,))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def tensor(self) -> NDArray[np.complex128]:
        """Amplitudes reshaped to one axis per mode."""
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class DensityOp:
    matrix: NDArray[np.complex128]
    dims: tuple[int, ...]
    modes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        mat = _frozen(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        n = prod(dims)
        if mat.shape != (n, n):
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match dims {dims}"
            )
        modes = tuple(self.modes) or _default_modes(len(dims))
        if len(modes) != len(dims) or len(set(modes)) != len(modes):
            raise ValueError(f"modes {modes} do not label dims {dims}")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "modes", modes)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


@dataclass(frozen=True)
class QubitState:
    """alpha|0> + beta|1> with alpha real and beta = beta_modulus * exp(i beta_phase)."""

    alpha: float
    beta_modulus: float
    beta_phase: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 <= self.beta_modulus <= 1.0:
            raise ValueError("alpha and |beta| must lie in [0, 1]")
        if abs(self.alpha**2 + self.beta_modulus**2 - 1.0) > NORM_TOL:
            raise NotNormalizedError(
                f"alpha^2 + |beta|^2 = {self.alpha**2 + self.beta_modulus**2!r}"
            )

    @classmethod
    def from_alpha2(cls, alpha2: float, beta_phase: float = 0.0) -> QubitState:
        if not 0.0 <= alpha2 <= 1.0:
            raise ValueError(f"alpha^2 must lie in [0, 1], got {alpha2}")
        return cls(float(np.sqrt(alpha2)), float(np.sqrt(1.0 - alpha2)), beta_phase)

    @property
    def alpha2(self) -> float:
        return self.alpha**2

    @property
    def beta(self) -> complex:
        return self.beta_modulus * complex(np.exp(1j * self.beta_phase))

    def vector(self) -> StateVector:
        return StateVector(np.array([self.alpha, self.beta]), (2,))


def tensor_product(factors: list[StateVector]) -> StateVector:
    """Kronecker product of the factors; the result's modes are relabeled 1..n."""
    if not factors:
        raise ValueError("tensor_product needs at least one factor")
    amps = factors[0].amplitudes
    dims = list(factors[0].dims)
    for f in factors[1:]:
        amps = np.kron(amps, f.amplitudes)
        dims.extend(f.dims)
    return StateVector(amps, tuple(dims))


def density_of(state: StateVector) -> DensityOp:
    if not state.is_normalized():
        raise NotNormalizedError(f"state has squared norm {state.norm() ** 2!r}")
    amps = state.amplitudes
    return DensityOp(np.outer(amps, amps.conj()), state.dims, state.modes)


def partial_trace(rho: DensityOp, keep) -> DensityOp:
    """Trace out every mode of ``rho`` not listed in ``keep``.

    Kept modes stay in the order they have in ``rho``.
    """
    keep = set(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")
    missing = keep - set(rho.modes)
    if missing:
        raise KeyError(f"modes {sorted(missing)} not present in {rho.modes}")
    if keep == set(rho.modes):
        return rho

    n = len(rho.dims)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    kept_idx = [i for i, m in enumerate(rho.modes) if m in keep]
    for i in range(n):
        if i not in kept_idx:
            col[i] = row[i]
    out = "".join(row[i] for i in kept_idx) + "".join(col[i] for i in kept_idx)
    spec = "".join(row) + "".join(col) + "->" + out

    tensor = rho.matrix.reshape(rho.dims + rho.dims)
    reduced = np.einsum(spec, tensor)
    kept_dims = tuple(rho.dims[i] for i in kept_idx)
    side = prod(kept_dims)
    return DensityOp(
        reduced.reshape(side, side),
        kept_dims,
        tuple(rho.modes[i] for i in kept_idx),
    )


def expectation(rho: DensityOp, phi) -> float:
    """<phi|rho|phi> for a unit vector phi (StateVector or plain array)."""
    vec = phi.amplitudes if isinstance(phi, StateVector) else np.asarray(phi)
    vec = vec.astype(np.complex128).ravel()
    if vec.size != rho.matrix.shape[0]:
        raise DimensionMismatchError(
            f"vector of length {vec.size} against operator of size {rho.matrix.shape[0]}"
        )
    if abs(np.vdot(vec, vec).real - 1.0) > NORM_TOL:
        raise NotNormalizedError("expectation needs a normalized vector")
    return float(np.vdot(vec, rho.matrix @ vec).real)


@dataclass(frozen=True)
class DensityDiagnostics:
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: float

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_deviation <= HERMITIAN_TOL

    @property
    def unit_trace(self) -> bool:
        return self.trace_deviation <= TRACE_TOL

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue >= PSD_TOL

    @property
    def passed(self) -> bool:
        return self.hermitian and self.unit_trace and self.positive


def validate_density(rho) -> DensityDiagnostics:
    """Check Hermiticity, unit trace and positivity. Never raises on bad input."""
    mat = np.asarray(rho.matrix if isinstance(rho, DensityOp) else rho, dtype=complex)
    herm_dev = float(np.max(np.abs(mat - mat.conj().T)))
    trace_dev = float(abs(np.trace(mat) - 1.0))
    sym = 0.5 * (mat + mat.conj().T)
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    return DensityDiagnostics(herm_dev, trace_dev, min_eig)
