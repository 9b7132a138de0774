"""Newton-Raphson AC power flow (polar formulation)"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from grid.admittance import build_admittance
from grid.model import BusType, StateVector
from utils.errors import Diverged, SingularJacobian

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20


@dataclass(frozen=True)
class PowerFlowResult:
    state: StateVector
    iterations: int
    mismatch: float
    converged: bool


def _power_derivatives(ybus, v):
    """dS/dVa and dS/dVm in MATPOWER's formulation"""
    ibus = ybus @ v
    diag_v = sp.diags(v)
    diag_i = sp.diags(ibus)
    diag_vnorm = sp.diags(v / np.abs(v))
    ds_dvm = diag_v @ (ybus @ diag_vnorm).conj() + diag_i.conj() @ diag_vnorm
    ds_dva = 1j * diag_v @ (diag_i - ybus @ diag_v).conj()
    return ds_dva.tocsr(), ds_dvm.tocsr()


def _mismatch(ybus, v, sbus, pvpq, pq):
    mis = v * np.conj(ybus @ v) - sbus
    return np.concatenate([mis[pvpq].real, mis[pq].imag])


def initial_voltage(grid, init="case"):
    vm = grid.voltage_setpoints()
    va = np.array([b.va_init for b in grid.buses], dtype=float)
    if init == "flat":
        pq = grid.bus_indices(BusType.PQ)
        vm[pq] = 1.0
        va[:] = grid.buses[grid.slack_index].va_init
    elif init != "case":
        raise ValueError(f"unknown power flow initialization '{init}' (use 'case' or 'flat')")
    return vm * np.exp(1j * va)


def newton_power_flow(grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, init="case", adm=None):
    """Solve the AC power flow; raise Diverged when the mismatch stays above tol"""
    if tol <= 0:
        raise ValueError("tol must be positive")
    adm = adm or build_admittance(grid)
    ybus = adm.ybus.tocsc()

    pv = grid.bus_indices(BusType.PV)
    pq = grid.bus_indices(BusType.PQ)
    pvpq = np.sort(np.concatenate([pv, pq]))
    n_pvpq = pvpq.size

    pd, qd = grid.demand()
    pg, qg = grid.generation()
    sbus = (pg - pd) + 1j * (qg - qd)

    v = initial_voltage(grid, init)
    vm = np.abs(v)
    va = np.angle(v)

    f = _mismatch(ybus, v, sbus, pvpq, pq)
    norm = np.linalg.norm(f, np.inf) if f.size else 0.0
    iterations = 0
    logger.debug(f"Power flow iteration 0: mismatch {norm:.3e}")

    while norm > tol and iterations < max_iter:
        iterations += 1
        ds_dva, ds_dvm = _power_derivatives(ybus, v)
        j11 = ds_dva[pvpq][:, pvpq].real
        j12 = ds_dvm[pvpq][:, pq].real
        j21 = ds_dva[pq][:, pvpq].imag
        j22 = ds_dvm[pq][:, pq].imag
        jac = sp.vstack([sp.hstack([j11, j12]), sp.hstack([j21, j22])], format="csc")

        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                dx = -spsolve(jac, f)
            except (MatrixRankWarning, RuntimeError) as e:
                raise SingularJacobian(f"power flow Jacobian is singular at iteration {iterations}: {e}",
                                       iteration=iterations)
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian(f"power flow Jacobian is singular at iteration {iterations}",
                                   iteration=iterations)

        va[pvpq] += dx[:n_pvpq]
        vm[pq] += dx[n_pvpq:]
        v = vm * np.exp(1j * va)

        f = _mismatch(ybus, v, sbus, pvpq, pq)
        norm = np.linalg.norm(f, np.inf)
        logger.debug(f"Power flow iteration {iterations}: mismatch {norm:.3e}")

    if not np.isfinite(norm) or norm > tol:
        raise Diverged(f"power flow did not converge in {max_iter} iterations (mismatch {norm:.3e})",
                       iterations=iterations, mismatch=float(norm))

    return PowerFlowResult(state=StateVector.from_complex(v), iterations=iterations,
                           mismatch=float(norm), converged=True)


def solve_power_flow(grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, init="case"):
    """Ground-truth rectangular state for the grid's current loading"""
    return newton_power_flow(grid, tol=tol, max_iter=max_iter, init=init).state


def nodal_injections(grid, state, adm=None):
    """Complex injections V * conj(Ybus V) at a given state"""
    adm = adm or build_admittance(grid)
    v = state.to_complex()
    return v * np.conj(adm.ybus @ v)
