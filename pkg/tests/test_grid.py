import dataclasses

import numpy as np
import pytest

from grid.admittance import build_admittance
from grid.case_parser import format_matpower_case, parse_matpower_case, read_case_file
from grid.cases import BUILTIN_CASES, load_builtin_case, load_case
from grid.model import Branch, BusType, GridModel, StateVector
from grid.power_flow import newton_power_flow, nodal_injections, solve_power_flow
from grid.serialization import grid_fingerprint, grid_from_json, grid_to_json
from utils.errors import (
    Diverged,
    DuplicateBusId,
    IoError,
    MalformedRow,
    MissingBlock,
    MultipleSlackBuses,
    NoSlackBus,
    SchemaMismatch,
    ZeroImpedanceBranch,
)


def test_parse_two_bus_case_converts_to_per_unit(two_bus_grid):
    assert two_bus_grid.n_buses == 2
    assert two_bus_grid.n_branches == 1
    assert two_bus_grid.buses[0].bus_type is BusType.SLACK
    assert two_bus_grid.buses[1].pd == pytest.approx(0.5)
    assert two_bus_grid.buses[1].qd == pytest.approx(0.2)
    assert two_bus_grid.branches[0].tap_ratio == 1.0


def test_parse_ieee57_counts():
    grid = load_builtin_case("case57")
    assert grid.n_buses == 57
    assert grid.n_branches == 80
    assert sum(1 for b in grid.buses if b.bus_type is BusType.SLACK) == 1


@pytest.mark.parametrize("name", BUILTIN_CASES)
def test_builtin_cases_have_contiguous_ids(name):
    grid = load_case(name)
    assert [b.id for b in grid.buses] == list(range(1, grid.n_buses + 1))


def test_short_bus_row_is_malformed(two_bus_text):
    text = two_bus_text.replace("\t2\t1\t50\t20\t0\t0\t1\t1\t0\t1\t1\t1.1\t0.9;", "\t2\t1\t50\t20\t0\t0\t1\t1\t0\t1\t1\t1.1;")
    with pytest.raises(MalformedRow):
        parse_matpower_case(text)


def test_missing_branch_table(two_bus_text):
    text = two_bus_text.split("mpc.branch")[0]
    with pytest.raises(MissingBlock):
        parse_matpower_case(text)


def test_slack_count_is_checked(two_bus_text):
    no_slack = two_bus_text.replace("\t1\t3\t0\t0", "\t1\t1\t0\t0")
    with pytest.raises(NoSlackBus):
        parse_matpower_case(no_slack)
    two_slacks = two_bus_text.replace("\t2\t1\t50", "\t2\t3\t50")
    with pytest.raises(MultipleSlackBuses):
        parse_matpower_case(two_slacks)


def test_duplicate_bus_id(two_bus_text):
    text = two_bus_text.replace("\t2\t1\t50", "\t1\t1\t50")
    with pytest.raises(DuplicateBusId):
        parse_matpower_case(text)


def test_pv_bus_without_generator_becomes_pq(three_bus_grid, three_bus_text):
    assert three_bus_grid.buses[2].bus_type is BusType.PV
    text = three_bus_text.replace("\t3\t20\t0\t300\t-300\t1.01\t100\t1", "\t3\t20\t0\t300\t-300\t1.01\t100\t0")
    grid = parse_matpower_case(text)
    assert grid.buses[2].bus_type is BusType.PQ


def test_noncontiguous_ids_are_renumbered(two_bus_text):
    text = two_bus_text.replace("\t2\t1\t50", "\t7\t1\t50").replace("\t1\t2\t0\t0.1", "\t1\t7\t0\t0.1")
    grid = parse_matpower_case(text)
    assert [b.id for b in grid.buses] == [1, 2]
    np.testing.assert_array_equal(grid.original_ids(), [1, 7])
    assert grid.branches[0].to_bus == 2


def test_missing_case_file_raises_io_error(tmp_path):
    with pytest.raises(IoError):
        read_case_file(str(tmp_path / "nope.m"))


def test_formatted_case_parses_back(tmp_path, three_bus_grid):
    path = tmp_path / "threebus.m"
    path.write_text(format_matpower_case(three_bus_grid))
    again = read_case_file(str(path))
    assert again.n_buses == three_bus_grid.n_buses
    assert [b.bus_type for b in again.buses] == [b.bus_type for b in three_bus_grid.buses]
    for a, b in zip(again.buses, three_bus_grid.buses):
        assert a.pd == pytest.approx(b.pd)
        assert a.bs == pytest.approx(b.bs)
    assert [(br.from_bus, br.to_bus) for br in again.branches] == [(br.from_bus, br.to_bus) for br in three_bus_grid.branches]



def _assert_same_records(left, right):
    assert len(left) == len(right)
    for a, b in zip(left, right):
        for f in dataclasses.fields(a):
            x, y = getattr(a, f.name), getattr(b, f.name)
            if isinstance(x, float):
                assert x == pytest.approx(y, rel=1e-12, abs=1e-14), f.name
            else:
                assert x == y, f.name


@pytest.mark.parametrize("name", BUILTIN_CASES)
def test_builtin_case_survives_format_and_parse(name):
    grid = load_case(name)
    again = parse_matpower_case(format_matpower_case(grid), name=grid.name)
    assert again.name == grid.name
    assert again.base_mva == grid.base_mva
    _assert_same_records(again.buses, grid.buses)
    _assert_same_records(again.branches, grid.branches)
    _assert_same_records(again.gens, grid.gens)

def test_grid_json_and_schema_check(three_bus_grid):
    assert grid_fingerprint(grid_from_json(grid_to_json(three_bus_grid))) == grid_fingerprint(three_bus_grid)
    with pytest.raises(SchemaMismatch):
        grid_from_json(grid_to_json(three_bus_grid).replace('"grid/1"', '"grid/0"'))


def test_grid_rejects_self_loop(two_bus_grid):
    with pytest.raises(ValueError):
        GridModel(base_mva=100, buses=two_bus_grid.buses, branches=[Branch(1, 1, 0.0, 0.1)])


def test_ybus_two_bus_line(two_bus_grid):
    ybus = build_admittance(two_bus_grid).ybus.toarray()
    np.testing.assert_allclose(ybus, [[-10j, 10j], [10j, -10j]], atol=1e-12)


def test_ybus_triangle_is_symmetric(three_bus_grid):
    adm = build_admittance(three_bus_grid)
    ybus = adm.ybus.toarray()
    y_series = 1.0 / complex(0.01, 0.1)
    np.testing.assert_allclose(ybus, ybus.T, atol=1e-12)
    shunts = np.array([0.0, 0.05j, 0.0])
    np.testing.assert_allclose(np.diag(ybus), 2 * y_series + shunts, atol=1e-12)


def test_ybus_rows_sum_to_shunt_without_charging(three_bus_grid):
    ybus = build_admittance(three_bus_grid).ybus.toarray()
    np.testing.assert_allclose(ybus.sum(axis=1), [0.0, 0.05j, 0.0], atol=1e-12)



def test_ybus_follows_bus_renumbering(case14):
    perm = np.random.default_rng(7).permutation(case14.n_buses)
    new_of_old = np.empty_like(perm)
    new_of_old[perm] = np.arange(perm.size)

    def renumber(bus):
        return int(new_of_old[bus - 1]) + 1

    permuted = GridModel(
        base_mva=case14.base_mva,
        buses=[dataclasses.replace(case14.buses[old], id=k + 1) for k, old in enumerate(perm)],
        branches=[dataclasses.replace(br, from_bus=renumber(br.from_bus), to_bus=renumber(br.to_bus))
                  for br in case14.branches],
        gens=[dataclasses.replace(gen, bus=renumber(gen.bus)) for gen in case14.gens],
        name="case14_permuted",
    )
    original = build_admittance(case14)
    renumbered = build_admittance(permuted)
    np.testing.assert_allclose(renumbered.ybus.toarray(), original.ybus.toarray()[np.ix_(perm, perm)], atol=1e-12)
    np.testing.assert_array_equal(renumbered.y_ff, original.y_ff)
    np.testing.assert_array_equal(perm[renumbered.from_idx], original.from_idx)

def test_zero_impedance_branch_is_rejected(two_bus_text):
    text = two_bus_text.replace("\t1\t2\t0\t0.1", "\t1\t2\t0\t0")
    with pytest.raises(ZeroImpedanceBranch):
        build_admittance(parse_matpower_case(text))


def test_two_bus_power_flow_matches_closed_form(two_bus_grid, two_bus_state):
    result = newton_power_flow(two_bus_grid, init="flat")
    assert result.converged
    assert result.mismatch <= 1e-8
    np.testing.assert_allclose(result.state.values, two_bus_state, atol=1e-9)


def test_ieee57_power_flow_converges_quickly():
    grid = load_builtin_case("case57")
    result = newton_power_flow(grid)
    assert result.iterations <= 10
    assert result.mismatch <= 1e-8


def test_power_flow_reproduces_specified_loads(case14):
    state = solve_power_flow(case14)
    s = nodal_injections(case14, state)
    pd, qd = case14.demand()
    pq = case14.bus_indices(BusType.PQ)
    np.testing.assert_allclose(s.real[pq], -pd[pq], atol=1e-7)
    np.testing.assert_allclose(s.imag[pq], -qd[pq], atol=1e-7)


def test_power_flow_gives_up_after_max_iter(case14):
    with pytest.raises(Diverged):
        newton_power_flow(case14, max_iter=1, init="flat")


def test_power_flow_rejects_bad_tolerance(case14):
    with pytest.raises(ValueError):
        newton_power_flow(case14, tol=0.0)


def test_state_vector_layout():
    v = StateVector.from_complex([1.0, 0.9 - 0.1j])
    np.testing.assert_array_equal(v.values, [1.0, 0.0, 0.9, -0.1])
    assert v.n_buses == 2
    np.testing.assert_allclose(v.magnitudes(), [1.0, abs(0.9 - 0.1j)])
    with pytest.raises(ValueError):
        StateVector([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        StateVector([1.0, np.nan])
