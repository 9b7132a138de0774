"""Bus admittance matrix and per-branch two-port coefficients"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from utils.errors import ZeroImpedanceBranch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmittanceModel:
    """Ybus plus the branch coefficients used for flow evaluation

    Branch l carries I_f = y_ff[l] V_f + y_ft[l] V_t at its forwarding end and
    I_t = y_tf[l] V_f + y_tt[l] V_t at its terminal end. Out-of-service
    branches keep zero coefficients.
    """
    ybus: sp.csr_matrix
    y_ff: np.ndarray
    y_ft: np.ndarray
    y_tf: np.ndarray
    y_tt: np.ndarray
    from_idx: np.ndarray
    to_idx: np.ndarray
    in_service: np.ndarray
    shunt: np.ndarray

    @property
    def n_buses(self):
        return self.ybus.shape[0]

    @property
    def n_branches(self):
        return self.from_idx.size


def build_admittance(grid):
    """Assemble Ybus with MATPOWER branch conventions (tap at the from end)"""
    n = grid.n_buses
    nl = grid.n_branches

    f = np.array([br.from_bus - 1 for br in grid.branches], dtype=int)
    t = np.array([br.to_bus - 1 for br in grid.branches], dtype=int)
    status = np.array([br.status for br in grid.branches], dtype=bool)

    y_ff = np.zeros(nl, dtype=complex)
    y_ft = np.zeros(nl, dtype=complex)
    y_tf = np.zeros(nl, dtype=complex)
    y_tt = np.zeros(nl, dtype=complex)

    for l, br in enumerate(grid.branches):
        if not br.status:
            continue
        z = complex(br.r, br.x)
        if z == 0:
            raise ZeroImpedanceBranch(
                f"branch {l + 1} ({br.from_bus}->{br.to_bus}) has zero series impedance",
                branch=l + 1)
        ys = 1.0 / z
        tap = br.tap_ratio * np.exp(1j * br.phase_shift)
        ytt = ys + 1j * br.b_charging / 2
        y_tt[l] = ytt
        y_ff[l] = ytt / (tap * np.conj(tap))
        y_ft[l] = -ys / np.conj(tap)
        y_tf[l] = -ys / tap

    shunt = np.array([complex(b.gs, b.bs) for b in grid.buses])

    # Ybus = Cf'(Yff Cf + Yft Ct) + Ct'(Ytf Cf + Ytt Ct) + diag(Ysh)
    rows = np.concatenate([f, f, t, t, np.arange(n)])
    cols = np.concatenate([f, t, f, t, np.arange(n)])
    vals = np.concatenate([y_ff, y_ft, y_tf, y_tt, shunt])
    ybus = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    ybus.sum_duplicates()

    logger.debug(f"Built Ybus for {n} buses, {int(status.sum())}/{nl} branches in service")
    return AdmittanceModel(ybus=ybus, y_ff=y_ff, y_ft=y_ft, y_tf=y_tf, y_tt=y_tt,
                           from_idx=f, to_idx=t, in_service=status, shunt=shunt)
