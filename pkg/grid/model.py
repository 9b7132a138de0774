"""Immutable value objects describing a transmission grid"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from utils.errors import DimensionMismatch


class BusType(Enum):
    """Bus roles, valued with their MATPOWER type codes"""
    PQ = 1
    PV = 2
    SLACK = 3


@dataclass(frozen=True)
class Bus:
    id: int
    bus_type: BusType
    pd: float
    qd: float
    gs: float
    bs: float
    vm_init: float
    va_init: float
    original_id: int = 0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    tap_ratio: float = 1.0
    phase_shift: float = 0.0
    status: bool = True


@dataclass(frozen=True)
class Generator:
    bus: int
    pg: float
    qg: float
    vset: float
    status: bool = True


@dataclass(frozen=True)
class GridModel:
    base_mva: float
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    gens: Tuple[Generator, ...] = ()
    name: str = "case"

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "gens", tuple(self.gens))
        if len(self.buses) < 2:
            raise ValueError(f"A grid needs at least 2 buses, got {len(self.buses)}")
        n = len(self.buses)
        for position, bus in enumerate(self.buses, start=1):
            if bus.id != position:
                raise ValueError(f"Bus ids must be contiguous 1..N; position {position} holds id {bus.id}")
        for idx, br in enumerate(self.branches, start=1):
            if not (1 <= br.from_bus <= n and 1 <= br.to_bus <= n):
                raise ValueError(f"Branch {idx} references a bus outside 1..{n}")
            if br.from_bus == br.to_bus:
                raise ValueError(f"Branch {idx} connects bus {br.from_bus} to itself")

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def slack_index(self) -> int:
        """0-based position of the slack bus"""
        for k, bus in enumerate(self.buses):
            if bus.bus_type is BusType.SLACK:
                return k
        raise ValueError("grid has no slack bus")

    def bus_indices(self, bus_type: BusType) -> np.ndarray:
        return np.array([k for k, b in enumerate(self.buses) if b.bus_type is bus_type], dtype=int)

    def demand(self) -> Tuple[np.ndarray, np.ndarray]:
        pd = np.array([b.pd for b in self.buses], dtype=float)
        qd = np.array([b.qd for b in self.buses], dtype=float)
        return pd, qd

    def generation(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-bus in-service generation (p.u.)"""
        pg = np.zeros(self.n_buses)
        qg = np.zeros(self.n_buses)
        for gen in self.gens:
            if gen.status:
                pg[gen.bus - 1] += gen.pg
                qg[gen.bus - 1] += gen.qg
        return pg, qg

    def voltage_setpoints(self) -> np.ndarray:
        """Magnitude setpoints: gen Vset at PV/slack buses, case Vm elsewhere"""
        vm = np.array([b.vm_init for b in self.buses], dtype=float)
        seen = set()
        for gen in self.gens:
            k = gen.bus - 1
            if gen.status and k not in seen and self.buses[k].bus_type is not BusType.PQ:
                vm[k] = gen.vset
                seen.add(k)
        return vm

    def with_loads(self, pd, qd) -> "GridModel":
        """Copy of the grid with per-bus demands replaced (p.u.)"""
        pd = np.asarray(pd, dtype=float)
        qd = np.asarray(qd, dtype=float)
        if pd.shape != (self.n_buses,) or qd.shape != (self.n_buses,):
            raise ValueError(f"load vectors must have length {self.n_buses}")
        buses = tuple(replace(b, pd=float(p), qd=float(q)) for b, p, q in zip(self.buses, pd, qd))
        return replace(self, buses=buses)

    def original_ids(self) -> np.ndarray:
        return np.array([b.original_id or b.id for b in self.buses], dtype=int)


@dataclass(frozen=True)
class StateVector:
    """Rectangular voltages [v_1^r, v_1^i, ..., v_N^r, v_N^i] in per-unit"""
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size % 2:
            raise ValueError(f"state length must be even, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("state vector has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def n_buses(self) -> int:
        return self.values.size // 2

    @classmethod
    def from_complex(cls, voltages) -> "StateVector":
        voltages = np.asarray(voltages, dtype=complex)
        values = np.empty(2 * voltages.size)
        values[0::2] = voltages.real
        values[1::2] = voltages.imag
        return cls(values)

    @classmethod
    def flat(cls, n_buses: int) -> "StateVector":
        return cls.from_complex(np.ones(n_buses, dtype=complex))

    @classmethod
    def ones(cls, n_buses: int) -> "StateVector":
        return cls(np.ones(2 * n_buses))

    def to_complex(self) -> np.ndarray:
        return self.values[0::2] + 1j * self.values[1::2]

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.to_complex())

    def angles(self) -> np.ndarray:
        return np.angle(self.to_complex())


def state_array(v, dim: Optional[int] = None) -> np.ndarray:
    """Return the raw float array behind a StateVector or array-like"""
    values = v.values if isinstance(v, StateVector) else np.asarray(v, dtype=float)
    if dim is not None and values.shape[-1] != dim:
        raise DimensionMismatch(f"expected state dimension {dim}, got {values.shape[-1]}",
                                expected=dim, got=values.shape[-1])
    return values
