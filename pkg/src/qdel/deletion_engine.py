"""Deleter isometry, transformer gate and the two deletion pipelines."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import sqrt
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .machine_space import (
    GramMatrix,
    InfeasibleParamsError,
    MachineBasis,
    MachineParams,
    StandardState,
    build_gram,
    check_feasible,
    realize_vectors,
    standard_state,
)
from .tensor_core import (
    DensityOp,
    DimensionMismatchError,
    NotNormalizedError,
    QubitState,
    StateVector,
    density_of,
    partial_trace,
)

LABELS = ("00", "01", "10", "11")
ISOMETRY_TOL = 1e-12

_KET0 = np.array([1.0, 0.0], dtype=np.complex128)
_KET1 = np.array([0.0, 1.0], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class DeleterMap:
    images: dict[str, StateVector]
    d: int


@dataclass(frozen=True)
class IsometryRecord:
    residual: float
    worst_pair: tuple[str, str]
    passed: bool


@dataclass(frozen=True, eq=False)
class TransformerGate:
    matrix: NDArray[np.complex128]


def _term(a, b, machine) -> NDArray[np.complex128]:
    return np.einsum("i,j,k->ijk", a, b, machine)


def build_deleter(basis: MachineBasis, std: StandardState) -> DeleterMap:
    vecs = basis.vectors
    d = basis.d
    if any(v.shape != (d,) for v in vecs.values()):
        raise DimensionMismatchError("machine vectors do not share one dimension")
    sig, perp = std.sigma, std.sigma_perp
    flip = _term(_KET0, _KET1, vecs["B0"]) + _term(_KET1, _KET0, vecs["B0"])
    flip1 = _term(_KET0, _KET1, vecs["B1"]) + _term(_KET1, _KET0, vecs["B1"])
    raw = {
        "00": _term(_KET0, sig, vecs["A0"]) + flip,
        "01": _term(_KET0, perp, vecs["D0"]) + _term(_KET1, _KET0, vecs["C0"]),
        "10": _term(_KET1, sig, vecs["D0"]) + _term(_KET0, _KET1, vecs["C0"]),
        "11": _term(_KET1, perp, vecs["A1"]) + flip1,
    }
    images = {k: StateVector(v, (2, 2, d)) for k, v in raw.items()}
    return DeleterMap(images, d)


def verify_isometry(deleter: DeleterMap) -> IsometryRecord:
    """Largest deviation of the image overlaps from the identity."""
    worst, pair = 0.0, ("00", "00")
    for label in LABELS:
        v = deleter.images[label].amplitudes
        dev = abs(np.vdot(v, v) - 1.0)
        if dev > worst:
            worst, pair = dev, (label, label)
    for a, b in combinations(LABELS, 2):
        dev = abs(np.vdot(deleter.images[a].amplitudes, deleter.images[b].amplitudes))
        if dev > worst:
            worst, pair = dev, (a, b)
    return IsometryRecord(float(worst), pair, bool(worst < ISOMETRY_TOL))


def apply_deleter(psi: QubitState, deleter: DeleterMap) -> StateVector:
    """U(|psi>|psi>|A>) by linear extension over the four basis images."""
    if not psi.vector().is_normalized():
        raise NotNormalizedError("input qubit is not normalized")
    a, b = psi.alpha, psi.beta
    coeffs = {"00": a * a, "01": a * b, "10": a * b, "11": b * b}
    out = sum(coeffs[k] * deleter.images[k].amplitudes for k in LABELS)
    return StateVector(out, (2, 2, deleter.d))


def build_transformer() -> TransformerGate:
    psi_plus = np.array([0, 1, 1, 0]) / sqrt(2)
    psi_minus = np.array([0, 1, -1, 0]) / sqrt(2)
    ket11 = np.array([0, 0, 0, 1])
    ket00 = np.array([1, 0, 0, 0])
    mat = np.column_stack([psi_plus, ket11, psi_minus, ket00]).astype(np.complex128)
    mat.setflags(write=False)
    return TransformerGate(mat)


def apply_transformer(rho: DensityOp, gate: TransformerGate) -> DensityOp:
    """Conjugate by (gate on modes 1, 2) tensored with identity on the machine."""
    if len(rho.dims) != 3 or rho.dims[:2] != (2, 2):
        raise DimensionMismatchError(f"expected dims (2, 2, d), got {rho.dims}")
    full = np.kron(gate.matrix, np.eye(rho.dims[2]))
    return DensityOp(full @ rho.matrix @ full.conj().T, rho.dims, rho.modes)


@dataclass(frozen=True, eq=False)
class Machine:
    """Everything derived from one parameter point, ready to run inputs through."""

    params: MachineParams
    gram: GramMatrix
    basis: MachineBasis
    std: StandardState
    deleter: DeleterMap


def assemble_machine(
    params: MachineParams,
    gram_hook: Callable[[GramMatrix], GramMatrix] | None = None,
) -> Machine:
    gram = build_gram(params)
    if gram_hook is not None:
        gram = gram_hook(gram)
    record = check_feasible(gram)
    if not record.feasible or (gram_hook is None and not params.feasible):
        raise InfeasibleParamsError(
            f"infeasible: 3Y² > 1−2λ (lambda={params.lam:g}, Y={params.y:g})", record
        )
    basis = realize_vectors(gram)
    std = standard_state(params.m1, params.m2)
    return Machine(params, gram, basis, std, build_deleter(basis, std))


@lru_cache(maxsize=512)
def build_machine(params: MachineParams) -> Machine:
    return assemble_machine(params)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    state: DensityOp
    reduced: dict[int, DensityOp]
    machine: Machine
    with_transformer: bool


def run_pipeline(
    psi: QubitState,
    params: MachineParams,
    with_transformer: bool = False,
    *,
    gate: TransformerGate | None = None,
    machine: Machine | None = None,
) -> PipelineResult:
    if machine is None:
        machine = build_machine(params)
    out = apply_deleter(psi, machine.deleter)
    rho = density_of(out)
    if with_transformer:
        rho = apply_transformer(rho, gate if gate is not None else _GATE)
    reduced = {mode: partial_trace(rho, {mode}) for mode in (1, 2, 3)}
    return PipelineResult(rho, reduced, machine, with_transformer)


_GATE = build_transformer()
