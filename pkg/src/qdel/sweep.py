"""Parameter sweeps, the lambda -> 1/2 limit study, and table emission."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import pi, sqrt

import numpy as np

from .analysis import closed_F3, closed_F4, fidelities, fidelity_report
from .deletion_engine import build_machine, run_pipeline
from .machine_space import MachineParams, analytic_feasible, standard_state
from .tensor_core import QubitState

CSV_HEADER = (
    "swept_param,swept_value,alpha2,beta_phase,lambda,y,m1,m2re,m2im,"
    "F1,F2,F3,F4,Fc,class,note"
).split(",")

SWEEPABLE = ("lambda", "alpha2", "y", "beta_phase")
LIMIT_TOL = 1e-10


def fmt(x) -> str:
    """Decimal text with 12 significant digits; '' for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, float, np.floating, np.integer)):
        out = f"{float(x):.12g}"
        return "0" if out == "-0" else out
    return str(x)


def rounded(obj):
    """Round every float in a JSON-ready structure to 12 significant digits."""
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    return obj


@dataclass(frozen=True)
class Point:
    """One evaluation point: machine parameters plus the input qubit."""

    lam: float = 0.0
    y: float = 0.0
    m1: float = 1 / sqrt(2)
    m2: complex = 1 / sqrt(2)
    alpha2: float = 0.5
    beta_phase: float = 0.0

    def with_value(self, param: str, value: float) -> Point:
        key = "lam" if param == "lambda" else param
        return replace(self, **{key: float(value)})

    def params(self) -> MachineParams:
        return MachineParams(self.lam, self.y, self.m1, self.m2)

    def qubit(self) -> QubitState:
        return QubitState.from_alpha2(self.alpha2, self.beta_phase)


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    steps: int
    base: Point = field(default_factory=Point)
    transform: bool = False
    fmt: str = "csv"
    out: str | None = None

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.param!r}; choose from {SWEEPABLE}")
        if self.steps < 2:
            raise ValueError("a sweep needs at least 2 steps")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        lo, hi = {
            "lambda": (0.0, 0.5),
            "alpha2": (0.0, 1.0),
            "y": (0.0, np.inf),
            "beta_phase": (0.0, 2 * pi),
        }[self.param]
        for v in (self.start, self.stop):
            if not lo <= v <= hi:
                raise ValueError(f"{self.param} value {v} outside [{lo}, {hi}]")

    def values(self) -> list[float]:
        return np.linspace(self.start, self.stop, self.steps).tolist()


def evaluate_row(spec: SweepSpec, value: float) -> dict:
    point = spec.base.with_value(spec.param, value)
    row = {
        "swept_param": spec.param,
        "swept_value": value,
        "alpha2": point.alpha2,
        "beta_phase": point.beta_phase,
        "lambda": point.lam,
        "y": point.y,
        "m1": point.m1,
        "m2re": complex(point.m2).real,
        "m2im": complex(point.m2).imag,
        "report": None,
        "note": "",
    }
    if not analytic_feasible(point.lam, point.y):
        row["note"] = "infeasible: 3Y² > 1−2λ"
        return row
    try:
        report = fidelity_report(point.qubit(), point.params(), spec.transform)
    except ValueError as exc:
        row["note"] = str(exc)
        return row
    row["report"] = report
    return row


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    """Evaluate every swept value; rows come back in sweep order."""
    workers = workers or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda v: evaluate_row(spec, v), spec.values()))


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        rep = row["report"]
        if rep is not None:
            fc = rep.modified["Fc"] if rep.inputs["transform"] else rep.conventional["Fc"]
            fids = [
                rep.conventional["F1"].numeric,
                rep.conventional["F2"].numeric,
                rep.modified["F3"].numeric,
                rep.modified["F4"].numeric,
                fc.numeric,
            ]
            cls = rep.classification
        else:
            fids, cls = [None] * 5, ""
        head = [row[k] for k in CSV_HEADER[:9]]
        writer.writerow([fmt(v) for v in head + fids] + [cls, row["note"]])
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    out = []
    for row in rows:
        if row["report"] is not None:
            entry = row["report"].as_dict()
        else:
            entry = {
                "inputs": {k: row[k] for k in CSV_HEADER[2:9]},
                "note": row["note"],
            }
        entry["swept_param"] = row["swept_param"]
        entry["swept_value"] = row["swept_value"]
        out.append(rounded(entry))
    return json.dumps(out, indent=2) + "\n"


def render(spec: SweepSpec, rows: list[dict]) -> str:
    return rows_to_csv(rows) if spec.fmt == "csv" else rows_to_json(rows)


@dataclass(frozen=True)
class LimitSeries:
    name: str
    values: list[float]
    exact: float
    anchor: float
    extrapolated: float
    monotone: bool

    @property
    def continuous(self) -> bool:
        return abs(self.extrapolated - self.exact) <= LIMIT_TOL

    @property
    def on_anchor(self) -> bool:
        return abs(self.exact - self.anchor) <= LIMIT_TOL

    @property
    def passed(self) -> bool:
        return self.monotone and self.continuous and self.on_anchor


@dataclass(frozen=True)
class LimitReport:
    eps: list[float]
    point: Point
    series: list[LimitSeries]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.series)

    def as_dict(self) -> dict:
        return rounded(
            {
                "eps": self.eps,
                "inputs": {
                    "alpha2": self.point.alpha2,
                    "beta_phase": self.point.beta_phase,
                    "m1": self.point.m1,
                    "m2re": complex(self.point.m2).real,
                    "m2im": complex(self.point.m2).imag,
                },
                "series": [
                    {
                        "name": s.name,
                        "values": s.values,
                        "exact": s.exact,
                        "anchor": s.anchor,
                        "extrapolated": s.extrapolated,
                        "monotone": s.monotone,
                        "continuous": s.continuous,
                        "passed": s.passed,
                    }
                    for s in self.series
                ],
                "passed": self.passed,
            }
        )


def limit_report(point: Point, eps=(1e-2, 1e-3, 1e-4)) -> LimitReport:
    """F3 and F4 at lambda = 1/2 - eps, compared with the exact lambda = 1/2 value.

    Y is forced to 0, the only value feasible at lambda = 1/2.
    """
    eps = [float(e) for e in eps]
    if len(eps) < 2:
        raise ValueError("need at least two eps values")
    if any(e <= 0 or e > 0.5 for e in eps) or any(
        b >= a for a, b in zip(eps, eps[1:])
    ):
        raise ValueError("eps must be a strictly decreasing sequence in (0, 1/2]")
    point = replace(point, y=0.0)
    psi = point.qubit()

    def f34(lam):
        params = replace(point, lam=lam).params()
        res = run_pipeline(psi, params, True, machine=build_machine(params))
        fa, fb, _ = fidelities(res, psi)
        return fa, fb

    seq = [f34(0.5 - e) for e in eps]
    exact = f34(0.5)
    std = standard_state(point.m1, point.m2)
    anchors = (closed_F3(psi.alpha, psi.beta), closed_F4(point.alpha2, 0.5, std))
    series = []
    for k, name in enumerate(("F3", "F4")):
        vals = [s[k] for s in seq]
        gaps = [abs(v - exact[k]) for v in vals]
        monotone = all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))
        e1, e2 = eps[-2], eps[-1]
        v1, v2 = vals[-2], vals[-1]
        extrap = v2 - (v2 - v1) * e2 / (e2 - e1)
        series.append(LimitSeries(name, vals, exact[k], anchors[k], extrap, monotone))
    return LimitReport(eps, point, series)
