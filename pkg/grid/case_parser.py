"""Reader and writer for the MATPOWER `.m` case subset

Only the `baseMVA`, `bus`, `branch` and `gen` blocks are interpreted.
Powers are converted to per-unit on `baseMVA` and angles to radians here;
everything past this boundary works in per-unit and radians.
"""
import logging
import math
import re

from grid.model import Branch, Bus, BusType, Generator, GridModel
from utils.errors import DuplicateBusId, IoError, MalformedRow, MissingBlock, MultipleSlackBuses, NoSlackBus

logger = logging.getLogger(__name__)

# Minimum column counts (MATPOWER case format version 2)
BUS_COLUMNS = 13
BRANCH_COLUMNS = 11
GEN_COLUMNS = 8

_BASE_RE = re.compile(r"\bbaseMVA\s*=\s*([-+0-9.eE]+)")
_BLOCK_RE = re.compile(r"\b(?:mpc\.)?([A-Za-z_]\w*)\s*=\s*\[(.*?)\]", re.DOTALL)
_KNOWN_BLOCKS = ("bus", "branch", "gen")


def _strip_comments(text):
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _parse_rows(block_name, body):
    rows = []
    for raw in re.split(r"[;\n]", body):
        tokens = [tok for tok in re.split(r"[\s,]+", raw.strip()) if tok]
        if not tokens:
            continue
        try:
            rows.append([float(tok) for tok in tokens])
        except ValueError:
            raise MalformedRow(f"non-numeric entry in {block_name} row {len(rows) + 1}: {raw.strip()!r}",
                               block=block_name, row=len(rows) + 1)
    return rows


def _check_columns(block_name, rows, minimum):
    for i, row in enumerate(rows, start=1):
        if len(row) < minimum:
            raise MalformedRow(
                f"{block_name} row {i} has {len(row)} columns, expected at least {minimum}",
                block=block_name, row=i, columns=len(row), expected=minimum)
    if rows and max(len(r) for r in rows) > minimum:
        logger.debug(f"Extra {block_name} columns beyond {minimum} ignored")


def parse_matpower_case(text, name="case"):
    """Parse MATPOWER case text into a GridModel with contiguous bus ids"""
    clean = _strip_comments(text)

    match = _BASE_RE.search(clean)
    if match is None:
        raise MissingBlock("case has no baseMVA assignment", block="baseMVA")
    base_mva = float(match.group(1))

    blocks = {}
    for block_match in _BLOCK_RE.finditer(clean):
        block_name = block_match.group(1)
        if block_name in _KNOWN_BLOCKS:
            blocks[block_name] = _parse_rows(block_name, block_match.group(2))
        else:
            logger.warning(f"Unsupported case block '{block_name}' ignored")

    for required in ("bus", "branch"):
        if not blocks.get(required):
            raise MissingBlock(f"case has no {required} table", block=required)

    bus_rows = blocks["bus"]
    branch_rows = blocks["branch"]
    gen_rows = blocks.get("gen", [])
    _check_columns("bus", bus_rows, BUS_COLUMNS)
    _check_columns("branch", branch_rows, BRANCH_COLUMNS)
    _check_columns("gen", gen_rows, GEN_COLUMNS)

    # Internal numbering follows row order
    index_of = {}
    for position, row in enumerate(bus_rows, start=1):
        original = int(row[0])
        if original in index_of:
            raise DuplicateBusId(f"bus id {original} appears twice", bus=original)
        index_of[original] = position

    def internal(original, block_name, row_number):
        try:
            return index_of[int(original)]
        except KeyError:
            raise MalformedRow(f"{block_name} row {row_number} references unknown bus {int(original)}",
                               block=block_name, row=row_number, bus=int(original))

    gen_buses = {internal(row[0], "gen", i) for i, row in enumerate(gen_rows, start=1) if row[7] > 0}

    buses = []
    for position, row in enumerate(bus_rows, start=1):
        code = int(row[1])
        if code == 3:
            bus_type = BusType.SLACK
        elif code == 2 and position in gen_buses:
            bus_type = BusType.PV
        else:
            if code == 2:
                logger.warning(f"PV bus {int(row[0])} has no in-service generator; treated as PQ")
            elif code == 4:
                logger.warning(f"Isolated bus {int(row[0])} treated as PQ")
            bus_type = BusType.PQ
        buses.append(Bus(
            id=position,
            bus_type=bus_type,
            pd=row[2] / base_mva,
            qd=row[3] / base_mva,
            gs=row[4] / base_mva,
            bs=row[5] / base_mva,
            vm_init=row[7],
            va_init=math.radians(row[8]),
            original_id=int(row[0]),
        ))

    slack_count = sum(1 for b in buses if b.bus_type is BusType.SLACK)
    if slack_count == 0:
        raise NoSlackBus("case has no reference (type 3) bus")
    if slack_count > 1:
        raise MultipleSlackBuses(f"case has {slack_count} reference buses", count=slack_count)

    branches = []
    for i, row in enumerate(branch_rows, start=1):
        f = internal(row[0], "branch", i)
        t = internal(row[1], "branch", i)
        if f == t:
            raise MalformedRow(f"branch row {i} connects bus {int(row[0])} to itself", block="branch", row=i)
        ratio = row[8] if row[8] != 0 else 1.0
        branches.append(Branch(
            from_bus=f,
            to_bus=t,
            r=row[2],
            x=row[3],
            b_charging=row[4],
            tap_ratio=ratio,
            phase_shift=math.radians(row[9]),
            status=row[10] > 0,
        ))

    gens = []
    for i, row in enumerate(gen_rows, start=1):
        gens.append(Generator(
            bus=internal(row[0], "gen", i),
            pg=row[1] / base_mva,
            qg=row[2] / base_mva,
            vset=row[5],
            status=row[7] > 0,
        ))

    out_of_service = sum(1 for br in branches if not br.status)
    if out_of_service:
        logger.info(f"{out_of_service} out-of-service branches kept and flagged")

    grid = GridModel(base_mva=base_mva, buses=buses, branches=branches, gens=gens, name=name)
    logger.debug(f"Parsed case '{name}': {grid.n_buses} buses, {grid.n_branches} branches, {len(gens)} generators")
    return grid


def _fmt(value):
    return repr(float(value))


def format_matpower_case(grid):
    """Serialize a GridModel back to MATPOWER case text (original bus ids)"""
    ids = grid.original_ids()
    base = grid.base_mva
    lines = [
        f"function mpc = {grid.name}",
        "mpc.version = '2';",
        f"mpc.baseMVA = {_fmt(base)};",
        "",
        "%% bus data",
        "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin",
        "mpc.bus = [",
    ]
    for bus in grid.buses:
        fields = [str(ids[bus.id - 1]), str(bus.bus_type.value), _fmt(bus.pd * base), _fmt(bus.qd * base),
                  _fmt(bus.gs * base), _fmt(bus.bs * base), "1", _fmt(bus.vm_init),
                  _fmt(math.degrees(bus.va_init)), "0", "1", "1.1", "0.9"]
        lines.append("\t" + "\t".join(fields) + ";")
    lines += ["];", "", "%% generator data",
              "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus",
              "mpc.gen = ["]
    for gen in grid.gens:
        fields = [str(ids[gen.bus - 1]), _fmt(gen.pg * base), _fmt(gen.qg * base), "9999", "-9999",
                  _fmt(gen.vset), _fmt(base), "1" if gen.status else "0"]
        lines.append("\t" + "\t".join(fields) + ";")
    lines += ["];", "", "%% branch data",
              "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus",
              "mpc.branch = ["]
    for br in grid.branches:
        ratio = "0" if br.tap_ratio == 1.0 else _fmt(br.tap_ratio)
        fields = [str(ids[br.from_bus - 1]), str(ids[br.to_bus - 1]), _fmt(br.r), _fmt(br.x),
                  _fmt(br.b_charging), "0", "0", "0", ratio, _fmt(math.degrees(br.phase_shift)),
                  "1" if br.status else "0"]
        lines.append("\t" + "\t".join(fields) + ";")
    lines.append("];")
    return "\n".join(lines) + "\n"


def read_case_file(path):
    """Parse a MATPOWER case file from disk"""
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise IoError(f"cannot read case file {path}: {e}", path=str(path))
    name = re.sub(r"\.m$", "", path.replace("\\", "/").rsplit("/", 1)[-1])
    return parse_matpower_case(text, name=name)
