"""Normalized grid JSON (`grid/1`) and content fingerprints"""
import hashlib
import json

from grid.model import Branch, Bus, BusType, Generator, GridModel
from utils.errors import SchemaMismatch

GRID_SCHEMA = "grid/1"


def grid_to_dict(grid):
    return {
        "schema": GRID_SCHEMA,
        "name": grid.name,
        "base_mva": grid.base_mva,
        "units": {"power": "p.u.", "angle": "rad"},
        "buses": [
            {
                "id": b.id,
                "original_id": b.original_id,
                "type": b.bus_type.name,
                "pd": b.pd, "qd": b.qd, "gs": b.gs, "bs": b.bs,
                "vm_init": b.vm_init, "va_init": b.va_init,
            }
            for b in grid.buses
        ],
        "branches": [
            {
                "from": br.from_bus, "to": br.to_bus,
                "r": br.r, "x": br.x, "b_charging": br.b_charging,
                "tap_ratio": br.tap_ratio, "phase_shift": br.phase_shift,
                "status": br.status,
            }
            for br in grid.branches
        ],
        "gens": [
            {"bus": g.bus, "pg": g.pg, "qg": g.qg, "vset": g.vset, "status": g.status}
            for g in grid.gens
        ],
    }


def grid_from_dict(data):
    schema = data.get("schema")
    if schema != GRID_SCHEMA:
        raise SchemaMismatch(f"expected schema {GRID_SCHEMA}, found {schema}", expected=GRID_SCHEMA, found=schema)
    buses = [
        Bus(id=b["id"], bus_type=BusType[b["type"]], pd=b["pd"], qd=b["qd"], gs=b["gs"], bs=b["bs"],
            vm_init=b["vm_init"], va_init=b["va_init"], original_id=b.get("original_id", 0))
        for b in data["buses"]
    ]
    branches = [
        Branch(from_bus=br["from"], to_bus=br["to"], r=br["r"], x=br["x"], b_charging=br["b_charging"],
               tap_ratio=br["tap_ratio"], phase_shift=br["phase_shift"], status=br["status"])
        for br in data["branches"]
    ]
    gens = [Generator(bus=g["bus"], pg=g["pg"], qg=g["qg"], vset=g["vset"], status=g["status"])
            for g in data.get("gens", [])]
    return GridModel(base_mva=data["base_mva"], buses=buses, branches=branches, gens=gens,
                     name=data.get("name", "case"))


def grid_to_json(grid, indent=2):
    return json.dumps(grid_to_dict(grid), indent=indent)


def grid_from_json(text):
    return grid_from_dict(json.loads(text))


def grid_fingerprint(grid):
    """SHA-256 over the canonical (sorted, compact) grid JSON"""
    canonical = json.dumps(grid_to_dict(grid), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
