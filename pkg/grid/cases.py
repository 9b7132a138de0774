"""Bundled IEEE benchmark cases

Case data comes from PYPOWER's case modules; each is rendered to MATPOWER
text and read back through the regular parser so bundled and user-supplied
cases follow the same path.
"""
import importlib
import logging
from functools import lru_cache

from grid.case_parser import parse_matpower_case, read_case_file

logger = logging.getLogger(__name__)

BUILTIN_CASES = ("case14", "case30", "case57", "case118")


def _matrix_block(name, rows):
    body = "\n".join("\t" + "\t".join(repr(float(v)) for v in row) + ";" for row in rows)
    return f"mpc.{name} = [\n{body}\n];"


def ppc_to_matpower_text(ppc, name="case"):
    """Render a PYPOWER case dict as MATPOWER case text"""
    parts = [
        f"function mpc = {name}",
        "mpc.version = '2';",
        f"mpc.baseMVA = {float(ppc['baseMVA'])!r};",
        _matrix_block("bus", ppc["bus"]),
        _matrix_block("gen", ppc["gen"]),
        _matrix_block("branch", ppc["branch"]),
    ]
    return "\n".join(parts) + "\n"


@lru_cache(maxsize=None)
def builtin_case_text(name):
    if name not in BUILTIN_CASES:
        raise KeyError(f"unknown built-in case '{name}'; available: {', '.join(BUILTIN_CASES)}")
    module = importlib.import_module(f"pypower.{name}")
    ppc = getattr(module, name)()
    return ppc_to_matpower_text(ppc, name=name)


def load_builtin_case(name):
    """GridModel for one of the bundled IEEE cases"""
    logger.debug(f"Loading built-in case {name}")
    return parse_matpower_case(builtin_case_text(name), name=name)


def load_case(source):
    """Load a case by built-in name or from a MATPOWER file path"""
    if source in BUILTIN_CASES:
        return load_builtin_case(source)
    return read_case_file(source)
