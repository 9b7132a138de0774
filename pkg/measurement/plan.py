"""Measurement plans: which quantities are metered where"""
import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from utils.errors import PlanLocationInvalid, SchemaMismatch, UnderdeterminedPlan

logger = logging.getLogger(__name__)

PLAN_SCHEMA = "plan/1"


class MeasurementKind(Enum):
    VMAG2 = "Vmag2"
    PINJ = "Pinj"
    QINJ = "Qinj"
    PFLOW_F = "Pflow_f"
    QFLOW_F = "Qflow_f"
    PFLOW_T = "Pflow_t"
    QFLOW_T = "Qflow_t"

    @property
    def is_nodal(self):
        return self in (MeasurementKind.VMAG2, MeasurementKind.PINJ, MeasurementKind.QINJ)

    @property
    def is_flow(self):
        return not self.is_nodal


@dataclass(frozen=True)
class MeasurementPlan:
    """Ordered (kind, location) entries; locations are 1-based bus or branch ids"""
    entries: Tuple[Tuple[MeasurementKind, int], ...]
    reference_bus: int = 1

    def __post_init__(self):
        entries = tuple((MeasurementKind(kind), int(loc)) for kind, loc in self.entries)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def kinds(self):
        return [kind for kind, _ in self.entries]

    def indices_of(self, *kinds):
        return [m for m, (kind, _) in enumerate(self.entries) if kind in kinds]

    def validate(self, grid):
        """Check locations against the grid and the M >= 2N observability count"""
        n = grid.n_buses
        for m, (kind, loc) in enumerate(self.entries):
            if kind.is_nodal:
                if not 1 <= loc <= n:
                    raise PlanLocationInvalid(f"entry {m}: {kind.value} at bus {loc} outside 1..{n}",
                                              entry=m, location=loc)
            else:
                if not 1 <= loc <= grid.n_branches:
                    raise PlanLocationInvalid(
                        f"entry {m}: {kind.value} on branch {loc} outside 1..{grid.n_branches}",
                        entry=m, location=loc)
                if not grid.branches[loc - 1].status:
                    raise PlanLocationInvalid(f"entry {m}: {kind.value} on out-of-service branch {loc}",
                                              entry=m, location=loc)
        if not 1 <= self.reference_bus <= n:
            raise PlanLocationInvalid(f"reference bus {self.reference_bus} outside 1..{n}",
                                      location=self.reference_bus)
        if len(self.entries) < 2 * n:
            raise UnderdeterminedPlan(f"plan has {len(self.entries)} measurements, need at least {2 * n}",
                                      measurements=len(self.entries), required=2 * n)
        return True


def default_plan(grid, include_injections=False):
    """All forwarding-end P/Q flows plus all squared voltage magnitudes"""
    entries = []
    in_service = [l for l, br in enumerate(grid.branches, start=1) if br.status]
    entries += [(MeasurementKind.PFLOW_F, l) for l in in_service]
    entries += [(MeasurementKind.QFLOW_F, l) for l in in_service]
    entries += [(MeasurementKind.VMAG2, n) for n in range(1, grid.n_buses + 1)]
    if include_injections:
        entries += [(MeasurementKind.PINJ, n) for n in range(1, grid.n_buses + 1)]
        entries += [(MeasurementKind.QINJ, n) for n in range(1, grid.n_buses + 1)]
    plan = MeasurementPlan(entries=tuple(entries), reference_bus=grid.slack_index + 1)
    plan.validate(grid)
    logger.debug(f"Default plan: {len(plan)} measurements for {grid.n_buses} buses")
    return plan


def full_plan(grid):
    """Every quantity family at every location (small test systems)"""
    entries = []
    for kind in (MeasurementKind.VMAG2, MeasurementKind.PINJ, MeasurementKind.QINJ):
        entries += [(kind, n) for n in range(1, grid.n_buses + 1)]
    in_service = [l for l, br in enumerate(grid.branches, start=1) if br.status]
    for kind in (MeasurementKind.PFLOW_F, MeasurementKind.QFLOW_F, MeasurementKind.PFLOW_T, MeasurementKind.QFLOW_T):
        entries += [(kind, l) for l in in_service]
    plan = MeasurementPlan(entries=tuple(entries), reference_bus=grid.slack_index + 1)
    plan.validate(grid)
    return plan


def plan_to_json(plan, indent=2):
    return json.dumps({
        "schema": PLAN_SCHEMA,
        "reference_bus": plan.reference_bus,
        "entries": [{"kind": kind.value, "location": loc} for kind, loc in plan.entries],
    }, indent=indent)


def plan_from_json(text):
    data = json.loads(text)
    if data.get("schema") != PLAN_SCHEMA:
        raise SchemaMismatch(f"expected schema {PLAN_SCHEMA}, found {data.get('schema')}",
                             expected=PLAN_SCHEMA, found=data.get("schema"))
    entries = tuple((MeasurementKind(e["kind"]), int(e["location"])) for e in data["entries"])
    return MeasurementPlan(entries=entries, reference_bus=int(data.get("reference_bus", 1)))
