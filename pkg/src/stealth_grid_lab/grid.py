"""MATPOWER case parsing and the DC measurement Jacobian.

Only the ``baseMVA``, ``bus`` and ``branch`` blocks of a case file are read.
The measurement set is the active-power injection at every bus followed by
the active-power flow on every in-service branch, oriented from ``from_bus``
to ``to_bus``. State variables are the voltage angles of the non-slack buses.
"""

from __future__ import annotations

import dataclasses
import re
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ModelError, ParseError

__all__ = [
    "BusType",
    "Bus",
    "Branch",
    "GridCase",
    "Injection",
    "Flow",
    "MeasurementModel",
    "parse_case",
    "load_case",
    "bundled_case",
    "build_jacobian",
]


class BusType(Enum):
    PQ = 1
    PV = 2
    SLACK = 3


class Bus(NamedTuple):
    bus_id: int
    bus_type: BusType


class Branch(NamedTuple):
    from_bus: int
    to_bus: int
    reactance_pu: float
    tap_ratio: float = 1.0
    in_service: bool = True
    shift_deg: float = 0.0


class Injection(NamedTuple):
    bus_id: int


class Flow(NamedTuple):
    from_bus: int
    to_bus: int


@dataclasses.dataclass(frozen=True)
class GridCase:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_mva: float = 100.0

    def __post_init__(self):
        ids = [b.bus_id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate bus ids")
        n_slack = sum(b.bus_type is BusType.SLACK for b in self.buses)
        if n_slack != 1:
            raise ModelError(f"expected exactly one slack bus, found {n_slack}")
        known = set(ids)
        for k, br in enumerate(self.branches):
            if br.from_bus not in known or br.to_bus not in known:
                raise ModelError(f"branch {k + 1} references an unknown bus")
            if br.in_service and not br.reactance_pu > 0:
                raise ModelError(
                    f"branch {k + 1} ({br.from_bus}-{br.to_bus}) is in service "
                    f"with non-positive reactance {br.reactance_pu}"
                )
            if not br.tap_ratio > 0:
                raise ModelError(f"branch {k + 1} has non-positive tap ratio")

    @property
    def slack_bus(self) -> int:
        return next(b.bus_id for b in self.buses if b.bus_type is BusType.SLACK)

    @property
    def in_service_branches(self) -> tuple[Branch, ...]:
        return tuple(br for br in self.branches if br.in_service)


@dataclasses.dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Linear observation model ``y = H x + z`` with ``z ~ N(0, noise_variance I)``."""

    jacobian: np.ndarray
    noise_variance: float
    labels: tuple = ()
    state_labels: tuple = ()

    def __post_init__(self):
        H = np.array(self.jacobian, dtype=float, ndmin=2)
        H.setflags(write=False)
        object.__setattr__(self, "jacobian", H)
        if not self.noise_variance > 0:
            raise ModelError("noise variance must be positive")
        if self.labels and len(self.labels) != H.shape[0]:
            raise ModelError("one label per measurement row is required")
        if self.state_labels and len(self.state_labels) != H.shape[1]:
            raise ModelError("one label per state column is required")

    @property
    def m(self) -> int:
        return self.jacobian.shape[0]

    @property
    def n(self) -> int:
        return self.jacobian.shape[1]

    def with_noise(self, noise_variance: float) -> MeasurementModel:
        return dataclasses.replace(self, noise_variance=float(noise_variance))


# ---------------------------------------------------------------------------
# parsing

_COMMENT = re.compile(r"%.*$")
_SCALAR = re.compile(r"^\s*mpc\.(\w+)\s*=\s*([^\[;]+?)\s*;?\s*$")
_MATRIX_OPEN = re.compile(r"^\s*mpc\.(\w+)\s*=\s*\[(.*)$")


def _split_blocks(text: str) -> tuple[dict, dict]:
    """Return ``(scalars, matrices)``; matrix rows carry their source line."""
    scalars: dict[str, tuple[str, int]] = {}
    matrices: dict[str, list[tuple[list[str], int]]] = {}
    current = None
    start_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT.sub("", raw)
        if current is None:
            opened = _MATRIX_OPEN.match(line)
            if opened:
                current, rest = opened.group(1), opened.group(2)
                start_line = lineno
                matrices[current] = []
                line = rest
            else:
                scalar = _SCALAR.match(line)
                if scalar:
                    scalars[scalar.group(1)] = (scalar.group(2), lineno)
                continue
        closed = "]" in line
        if closed:
            line, tail = line.split("]", 1)
            if tail.strip() not in ("", ";"):
                raise ParseError(f"unexpected text after ']': {tail.strip()!r}", lineno)
        for chunk in line.split(";"):
            tokens = chunk.replace(",", " ").split()
            if tokens:
                matrices[current].append((tokens, lineno))
        if closed:
            current = None
    if current is not None:
        raise ParseError(f"matrix block '{current}' is never closed", start_line)
    return scalars, matrices


def _numeric_rows(rows, name: str, min_cols: int) -> list[tuple[list[float], int]]:
    out = []
    width = None
    for tokens, lineno in rows:
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"non-numeric entry in '{name}' block", lineno) from None
        if len(values) < min_cols:
            raise ParseError(
                f"'{name}' row has {len(values)} columns, need at least {min_cols}", lineno
            )
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"ragged '{name}' block: expected {width} columns", lineno)
        out.append((values, lineno))
    return out


def _as_int(value: float, what: str, lineno: int) -> int:
    if value != int(value):
        raise ParseError(f"{what} must be an integer, got {value}", lineno)
    return int(value)


def parse_case(text: str) -> GridCase:
    """Parse MATPOWER plain-text case content into a :class:`GridCase`."""
    scalars, matrices = _split_blocks(text)
    for block in ("bus", "branch"):
        if block not in matrices:
            raise ParseError(f"missing '{block}' block")

    base_mva = 100.0
    if "baseMVA" in scalars:
        token, lineno = scalars["baseMVA"]
        try:
            base_mva = float(token)
        except ValueError:
            raise ParseError("baseMVA is not numeric", lineno) from None

    buses = []
    for values, lineno in _numeric_rows(matrices["bus"], "bus", 2):
        bus_id = _as_int(values[0], "bus id", lineno)
        code = _as_int(values[1], "bus type", lineno)
        try:
            bus_type = BusType(code)
        except ValueError:
            raise ParseError(f"unsupported bus type {code}", lineno) from None
        buses.append(Bus(bus_id, bus_type))

    branches = []
    for values, lineno in _numeric_rows(matrices["branch"], "branch", 4):
        tap = values[8] if len(values) > 8 else 0.0
        shift = values[9] if len(values) > 9 else 0.0
        status = values[10] if len(values) > 10 else 1.0
        branches.append(
            Branch(
                from_bus=_as_int(values[0], "from bus", lineno),
                to_bus=_as_int(values[1], "to bus", lineno),
                reactance_pu=values[3],
                # MATPOWER writes 0 for a plain line
                tap_ratio=tap if tap != 0 else 1.0,
                in_service=status != 0,
                shift_deg=shift,
            )
        )
    if not buses:
        raise ParseError("empty 'bus' block")
    return GridCase(tuple(buses), tuple(branches), base_mva)


def load_case(path) -> GridCase:
    return parse_case(Path(path).read_text())


def bundled_case(name: str) -> GridCase:
    """Load one of the case files shipped with the package (``case30``, ``case2``)."""
    ref = resources.files(__package__).joinpath("data").joinpath(f"{name}.m")
    return parse_case(ref.read_text())


# ---------------------------------------------------------------------------
# Jacobian


def build_jacobian(case: GridCase, noise_variance: float) -> MeasurementModel:
    """DC Jacobian: injections (bus order) stacked over flows (branch order)."""
    live = case.in_service_branches
    for br in live:
        if br.shift_deg != 0:
            raise ModelError(
                f"phase-shifting branch {br.from_bus}-{br.to_bus} is not supported"
            )

    bus_pos = {b.bus_id: i for i, b in enumerate(case.buses)}
    nb = len(case.buses)
    if live:
        rows = [bus_pos[br.from_bus] for br in live]
        cols = [bus_pos[br.to_bus] for br in live]
        adj = coo_matrix((np.ones(len(live)), (rows, cols)), shape=(nb, nb))
        n_comp, _ = connected_components(adj, directed=False)
    else:
        n_comp = nb
    if n_comp != 1:
        raise ModelError(
            f"network splits into {n_comp} islands; angles are unobservable"
        )

    slack = case.slack_bus
    state_ids = [b.bus_id for b in case.buses if b.bus_id != slack]
    col = {bid: j for j, bid in enumerate(state_ids)}

    flows = np.zeros((len(live), nb - 1))
    for r, br in enumerate(live):
        b = 1.0 / (br.reactance_pu * br.tap_ratio)
        if br.from_bus in col:
            flows[r, col[br.from_bus]] += b
        if br.to_bus in col:
            flows[r, col[br.to_bus]] -= b

    # accumulated in branch order so each row is the exact signed sum of flows
    injections = np.zeros((nb, nb - 1))
    for r, br in enumerate(live):
        injections[bus_pos[br.from_bus]] += flows[r]
        injections[bus_pos[br.to_bus]] -= flows[r]

    labels = tuple(Injection(b.bus_id) for b in case.buses) + tuple(
        Flow(br.from_bus, br.to_bus) for br in live
    )
    return MeasurementModel(
        jacobian=np.vstack([injections, flows]),
        noise_variance=noise_variance,
        labels=labels,
        state_labels=tuple(state_ids),
    )
