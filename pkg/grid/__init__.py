from grid.model import Branch, Bus, BusType, Generator, GridModel, StateVector
from grid.case_parser import format_matpower_case, parse_matpower_case, read_case_file
from grid.admittance import AdmittanceModel, build_admittance
from grid.power_flow import PowerFlowResult, newton_power_flow, solve_power_flow
from grid.serialization import grid_fingerprint, grid_from_json, grid_to_json
from grid.cases import load_builtin_case, load_case

__all__ = [
    'Branch', 'Bus', 'BusType', 'Generator', 'GridModel', 'StateVector',
    'format_matpower_case', 'parse_matpower_case', 'read_case_file',
    'AdmittanceModel', 'build_admittance',
    'PowerFlowResult', 'newton_power_flow', 'solve_power_flow',
    'grid_fingerprint', 'grid_from_json', 'grid_to_json',
    'load_builtin_case', 'load_case',
]
