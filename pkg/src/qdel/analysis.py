"""Closed-form reduced states and fidelities, averaging, and machine classification.

The closed forms here are written out term by term in (alpha^2, lambda, m1, m2)
and are checked against the numeric pipeline, which is treated as ground truth.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .deletion_engine import Machine, TransformerGate, build_machine, run_pipeline
from .machine_space import MachineParams, StandardState
from .tensor_core import DensityOp, QubitState, expectation

DEFAULT_QUAD_NODES = 8001
CONSTANCY_TOL = 1e-9
MEASUREMENT_BOUND = 2 / 3
DELETION_BOUND = 3 / 4

PROBE_ALPHA2 = tuple(np.linspace(0.0, 1.0, 11))
PROBE_PHASES = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)


def _check_ranges(alpha2: float, lam: float) -> None:
    if not 0.0 <= alpha2 <= 1.0:
        raise ValueError(f"alpha^2 must lie in [0, 1], got {alpha2}")
    if not 0.0 <= lam <= 0.5:
        raise ValueError(f"lambda must lie in [0, 1/2], got {lam}")


def _m(std: StandardState) -> tuple[float, complex]:
    return float(std.sigma[0].real), complex(std.sigma[1])


# conventional machine


def closed_F1(alpha2: float, lam: float) -> float:
    _check_ranges(alpha2, lam)
    return (1 - lam) + 2 * alpha2 * (1 - alpha2) * (2 * lam - 1)


def closed_rho1(alpha2: float, lam: float) -> DensityOp:
    _check_ranges(alpha2, lam)
    a4, ab, b4 = alpha2**2, alpha2 * (1 - alpha2), (1 - alpha2) ** 2
    p0 = a4 * (1 - lam) + ab + b4 * lam
    p1 = a4 * lam + ab + b4 * (1 - lam)
    return DensityOp(np.diag([p0, p1]), (2,), (1,))


def closed_rho2(alpha2: float, lam: float, std: StandardState) -> DensityOp:
    _check_ranges(alpha2, lam)
    a4, ab, b4 = alpha2**2, alpha2 * (1 - alpha2), (1 - alpha2) ** 2
    flat = a4 * lam + 2 * ab * lam + b4 * lam
    sig = np.outer(std.sigma, std.sigma.conj())
    perp = np.outer(std.sigma_perp, std.sigma_perp.conj())
    mat = (
        flat * np.eye(2)
        + alpha2 * (1 - 2 * lam) * sig
        + (1 - alpha2) * (1 - 2 * lam) * perp
    )
    return DensityOp(mat, (2,), (2,))


def closed_K(std: StandardState) -> tuple[complex, complex]:
    """The two overlap sums whose total enters the deletion fidelity.

    Squared overlaps are taken as squared moduli; with plain squares the sum
    is 2 only for real m2.
    """
    s, p = std.sigma, std.sigma_perp
    k1 = abs(s[0]) ** 2 + abs(s[1]) ** 2 + np.conj(s[0]) * p[0] + np.conj(s[1]) * p[1]
    k2 = abs(p[0]) ** 2 + abs(p[1]) ** 2 + np.conj(p[0]) * s[0] + np.conj(p[1]) * s[1]
    return complex(k1), complex(k2)


def closed_F2(lam: float, std: StandardState) -> float:
    _check_ranges(0.0, lam)
    k1, k2 = closed_K(std)
    return float((0.5 * ((1 - 2 * lam) + (k1 + k2) * lam)).real)


def machine_overlap(rho3: DensityOp, a_vec) -> float:
    """<A|rho3|A> for the initial machine vector A."""
    return expectation(rho3, a_vec)


# modified machine


def closed_rho1_prime(
    alpha2: float, lam: float, std: StandardState, beta_phase: float = 0.0
) -> DensityOp:
    """Retained-qubit state after the transformer.

    ``beta_phase`` is accepted for signature symmetry; the state does not
    depend on it.
    """
    _check_ranges(alpha2, lam)
    m1, m2 = _m(std)
    a4, ab, b4 = alpha2**2, alpha2 * (1 - alpha2), (1 - alpha2) ** 2
    s = 1 - 2 * lam
    re2 = m2 + m2.conjugate()
    q2 = abs(m2) ** 2
    r00 = 0.5 * (
        a4 * (m1**2 * s + lam)
        + ab * ((3 * q2 - m1 * re2 + m1**2) * s + 2 * lam)
        + b4 * ((q2 + 2 * m1**2) * s + lam)
    )
    r01 = (1 / sqrt(2)) * (
        a4 * (m1 * m2.conjugate() * s + lam)
        + ab * (2 * lam + (m1**2 - m2**2 - m1 * re2) * s)
        + b4 * (lam + m1 * m2 * s)
    )
    r10 = (1 / sqrt(2)) * (
        a4 * (m1 * m2 * s + lam)
        + ab * (2 * lam + (m1**2 - m2.conjugate() ** 2 - m1 * re2) * s)
        + b4 * (lam + m1 * m2.conjugate() * s)
    )
    r11 = 0.5 * (
        a4 * ((m1**2 + 2 * q2) * s + 3 * lam)
        + ab * ((q2 + m1 * re2 + 3 * m1**2) * s + 6 * lam)
        + b4 * (q2 * s + 3 * lam)
    )
    return DensityOp(np.array([[r00, r01], [r10, r11]]), (2,), (1,))


def closed_F3(alpha: float, beta: complex) -> float:
    """Retained-qubit fidelity of the modified machine in the lambda -> 1/2 limit."""
    if not 0.0 <= alpha <= 1.0 or abs(alpha**2 + abs(beta) ** 2 - 1.0) > 1e-12:
        raise ValueError(f"(alpha={alpha}, beta={beta}) is not a normalized qubit")
    return float(0.75 - alpha**2 / 2 + alpha * (2 * complex(beta).real) / (2 * sqrt(2)))


def closed_rho2_prime(
    alpha2: float, lam: float, std: StandardState, beta_phase: float = 0.0
) -> DensityOp:
    _check_ranges(alpha2, lam)
    m1, m2 = _m(std)
    a4, ab, b4 = alpha2**2, alpha2 * (1 - alpha2), (1 - alpha2) ** 2
    s = 1 - 2 * lam
    re2 = m2 + m2.conjugate()
    q2 = abs(m2) ** 2
    r00 = 0.5 * (
        a4 * (m1**2 * s + lam)
        + ab * ((3 * q2 + m1 * re2 + m1**2) * s + 2 * lam)
        + b4 * ((q2 + 2 * m1**2) * s + lam)
    )
    r01 = (1 / sqrt(2)) * (
        a4 * (m1 * m2.conjugate() * s - lam)
        - ab * ((m1**2 + m2**2 + m1 * (m2.conjugate() - m2)) * s + 2 * lam)
        - b4 * (lam + m1 * m2 * s)
    )
    r10 = (1 / sqrt(2)) * (
        a4 * (m1 * m2 * s - lam)
        - ab * ((m1**2 + m2.conjugate() ** 2 + m1 * (m2 - m2.conjugate())) * s + 2 * lam)
        - b4 * (lam + m1 * m2.conjugate() * s)
    )
    r11 = 0.5 * (
        a4 * ((m1**2 + 2 * q2) * s + 3 * lam)
        + ab * ((q2 - m1 * re2 + 3 * m1**2) * s + 6 * lam)
        + b4 * (q2 * s + 3 * lam)
    )
    return DensityOp(np.array([[r00, r01], [r10, r11]]), (2,), (2,))


def closed_R(alpha2: float, lam: float, std: StandardState) -> tuple[complex, ...]:
    """The four coefficients R1..R4 of the deleted-qubit fidelity.

    R1 and R2 are stated for real m2 and real beta; the |m2|^2 and m1(m2 + m2*)
    forms used here reduce to them in that case.
    """
    _check_ranges(alpha2, lam)
    m1, m2 = _m(std)
    mc = m2.conjugate()
    a4, ab, b4 = alpha2**2, alpha2 * (1 - alpha2), (1 - alpha2) ** 2
    s = 1 - 2 * lam
    q2 = abs(m2) ** 2
    r1 = 0.5 * (
        a4 * (m1**2 * s + lam)
        + ab * ((3 * q2 + m1 * (m2 + mc) + m1**2) * s + 2 * lam)
        + b4 * ((q2 + 2 * m1**2) * s + lam)
    )
    r2 = 0.5 * (
        a4 * ((m1**2 + 2 * q2) * s + 3 * lam)
        + ab * ((q2 - m1 * (m2 + mc) + 3 * m1**2) * s + 6 * lam)
        + b4 * (q2 * s + 3 * lam)
    )
    r3 = (1 / sqrt(2)) * (
        a4 * (m1 * mc * s - lam)
        - ab * ((m1**2 + m2**2 + m1 * (mc - m2)) * s + 2 * lam)
        - b4 * (lam + m1 * m2 * s)
    )
    r4 = (1 / sqrt(2)) * (
        a4 * (m1 * m2 * s - lam)
        - ab * ((m1**2 + mc**2 + m1 * (m2 - mc)) * s + 2 * lam)
        - b4 * (lam + m1 * mc * s)
    )
    return complex(r1), complex(r2), complex(r3), complex(r4)


def closed_F4(
    alpha2: float, lam: float, std: StandardState, beta_phase: float = 0.0
) -> float:
    m1, m2 = _m(std)
    mc = m2.conjugate()
    r1, r2, r3, r4 = closed_R(alpha2, lam, std)
    total = 0.5 * (
        r1 * (m1 - m2) * (m1 - mc)
        + r2 * (m1 + m2) * (m1 + mc)
        + r3 * (m1 - m2) * (m1 + m2)
        + r4 * (m1 - mc) * (m1 + mc)
    )
    return float(total.real)


# averaging


def quad_nodes() -> int:
    return int(os.environ.get("QDEL_QUAD_NODES", DEFAULT_QUAD_NODES))


def average_fidelity(f: Callable[[float], float], nodes: int | None = None) -> float:
    """Composite Simpson average of f over alpha^2 in [0, 1]."""
    nodes = quad_nodes() if nodes is None else int(nodes)
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError(f"Simpson needs an odd node count >= 3, got {nodes}")
    xs = np.linspace(0.0, 1.0, nodes)
    ys = np.array([f(float(x)) for x in xs])
    return float(simpson(ys, x=xs))


# fidelities at one point


def fidelities(result, psi: QubitState) -> tuple[float, float, float]:
    """(F_a, F_b, F_c) read off a pipeline result."""
    m = result.machine
    fa = expectation(result.reduced[1], psi.vector())
    fb = expectation(result.reduced[2], m.std.sigma_prime)
    fc = machine_overlap(result.reduced[3], m.basis["A"])
    return fa, fb, fc


@dataclass(frozen=True)
class FidelityValue:
    numeric: float
    closed: float | None = None

    @property
    def diff(self) -> float | None:
        return None if self.closed is None else abs(self.numeric - self.closed)

    def as_dict(self) -> dict:
        return {"numeric": self.numeric, "closed": self.closed, "diff": self.diff}


@dataclass(frozen=True)
class MachineClass:
    classification: str
    spreads: dict[str, float] = field(default_factory=dict)
    note: str = ""


@dataclass(frozen=True)
class FidelityReport:
    inputs: dict
    conventional: dict[str, FidelityValue]
    modified: dict[str, FidelityValue]
    classification: str

    def as_dict(self) -> dict:
        return {
            "inputs": dict(self.inputs),
            "conventional": {k: v.as_dict() for k, v in self.conventional.items()},
            "modified": {k: v.as_dict() for k, v in self.modified.items()},
            "classification": self.classification,
        }


def fidelity_report(
    psi: QubitState,
    params: MachineParams,
    with_transformer: bool = False,
    *,
    classify: bool = True,
) -> FidelityReport:
    machine = build_machine(params)
    std, lam, a2 = machine.std, params.lam, psi.alpha2
    conv = run_pipeline(psi, params, False, machine=machine)
    mod = run_pipeline(psi, params, True, machine=machine)
    f1, f2, fc = fidelities(conv, psi)
    f3, f4, fc_mod = fidelities(mod, psi)
    y2 = params.y**2
    rho1p = closed_rho1_prime(a2, lam, std)
    inputs = {
        "alpha2": a2,
        "beta_phase": psi.beta_phase,
        "lambda": lam,
        "y": params.y,
        "m1": params.m1,
        "m2re": params.m2.real,
        "m2im": params.m2.imag,
        "transform": with_transformer,
    }
    cls = classify_machine(params, with_transformer).classification if classify else ""
    return FidelityReport(
        inputs,
        {
            "F1": FidelityValue(f1, closed_F1(a2, lam)),
            "F2": FidelityValue(f2, closed_F2(lam, std)),
            "Fc": FidelityValue(fc, y2),
        },
        {
            "F3": FidelityValue(f3, expectation(rho1p, psi.vector())),
            "F4": FidelityValue(f4, closed_F4(a2, lam, std)),
            "Fc": FidelityValue(fc_mod, y2),
        },
        cls,
    )


def classify_machine(
    params: MachineParams,
    with_transformer: bool = False,
    *,
    threshold: float = CONSTANCY_TOL,
    gate: TransformerGate | None = None,
    machine: Machine | None = None,
    observer: Callable | None = None,
) -> MachineClass:
    """Sort a machine into state-dependent / universal / ideal.

    F_a, F_b and F_c are probed over 11 values of alpha^2 and 4 phases of
    beta; a fidelity counts as input independent when its spread over the
    probes is below ``threshold``. ``observer`` sees every pipeline result.
    """
    machine = machine or build_machine(params)
    samples = []
    for a2 in PROBE_ALPHA2:
        for phase in PROBE_PHASES:
            psi = QubitState.from_alpha2(float(a2), phase)
            res = run_pipeline(psi, params, with_transformer, gate=gate, machine=machine)
            if observer is not None:
                observer(res)
            samples.append(fidelities(res, psi))
    arr = np.array(samples)
    spreads = dict(zip(("Fa", "Fb", "Fc"), (np.ptp(arr, axis=0)).tolist()))
    const = {k: v < threshold for k, v in spreads.items()}
    if all(const.values()):
        label = "ideal"
    elif const["Fb"] and const["Fc"]:
        label = "universal"
    else:
        label = "state-dependent"
    fb = float(arr[:, 1].mean())
    if const["Fb"] and abs(fb - DELETION_BOUND) < 1e-6:
        note = "deletion fidelity at the 3/4 bound"
    else:
        note = f"not optimal: mean F_b = {fb:.6g} < 3/4"
    return MachineClass(label, spreads, note)
