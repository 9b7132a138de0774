"""Quadratic measurement model z_m = v^T H_m v in rectangular coordinates

The state v interleaves real and imaginary parts, v = [Re V_1, Im V_1, ...].
Each measured quantity is written as Re(V^H G V) with G = a Phi + conj(a) Phi^H,
where Phi is a sparse complex matrix built from Ybus rows or branch
coefficients and a = 1/2 for active power and |V|^2, a = j/2 for reactive.
"""
import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from grid.model import state_array
from measurement.plan import MeasurementKind
from utils.errors import DimensionMismatch, PlanLocationInvalid

logger = logging.getLogger(__name__)

_ALPHA = {
    MeasurementKind.VMAG2: 0.5,
    MeasurementKind.PINJ: 0.5,
    MeasurementKind.QINJ: 0.5j,
    MeasurementKind.PFLOW_F: 0.5,
    MeasurementKind.QFLOW_F: 0.5j,
    MeasurementKind.PFLOW_T: 0.5,
    MeasurementKind.QFLOW_T: 0.5j,
}

# rows evaluated per sparse product in batched evaluation
_BATCH_CHUNK = 64


@dataclass(frozen=True)
class QuadraticForm:
    h: sp.csr_matrix
    kind: MeasurementKind
    location: int

    @property
    def dim(self):
        return self.h.shape[0]

    def evaluate(self, v):
        v = state_array(v, self.dim)
        return float(v @ (self.h @ v))


@dataclass(frozen=True)
class QuadraticFormSet:
    """Ordered measurement forms plus the stacked (M*2N x 2N) operator"""
    forms: Tuple[QuadraticForm, ...]
    reference_coord: int = 1
    stacked: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        forms = tuple(self.forms)
        if not forms:
            raise DimensionMismatch("a measurement model needs at least one form")
        dim = forms[0].dim
        if any(f.dim != dim for f in forms):
            raise DimensionMismatch("measurement forms disagree on the state dimension")
        object.__setattr__(self, "forms", forms)
        object.__setattr__(self, "stacked", sp.vstack([f.h for f in forms], format="csr"))

    def __len__(self):
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)

    def __getitem__(self, item):
        return self.forms[item]

    @property
    def n_measurements(self):
        return len(self.forms)

    @property
    def n_state(self):
        return self.forms[0].dim

    @property
    def kinds(self):
        return [f.kind for f in self.forms]

    def free_coords(self):
        """State coordinates left after pinning the reference imaginary part"""
        return np.delete(np.arange(self.n_state), self.reference_coord)


def as_form_set(forms):
    if isinstance(forms, QuadraticFormSet):
        return forms
    return QuadraticFormSet(forms=tuple(forms))


def _phi_entries(adm, kind, location):
    """(row, col, value) triplets of the complex Phi matrix over bus indices"""
    if kind is MeasurementKind.VMAG2:
        k = location - 1
        return [(k, k, 1.0 + 0j)]
    if kind in (MeasurementKind.PINJ, MeasurementKind.QINJ):
        k = location - 1
        row = adm.ybus.getrow(k).tocoo()
        return [(k, int(j), complex(y)) for j, y in zip(row.col, row.data)]
    l = location - 1
    if not adm.in_service[l]:
        raise PlanLocationInvalid(f"{kind.value} on out-of-service branch {location}", location=location)
    f, t = int(adm.from_idx[l]), int(adm.to_idx[l])
    if kind in (MeasurementKind.PFLOW_F, MeasurementKind.QFLOW_F):
        return [(f, f, complex(adm.y_ff[l])), (f, t, complex(adm.y_ft[l]))]
    return [(t, f, complex(adm.y_tf[l])), (t, t, complex(adm.y_tt[l]))]


def _real_form(phi, alpha, dim):
    rows, cols, vals = [], [], []
    for k, j, p in phi:
        # G = alpha Phi + conj(alpha) Phi^H
        for r, c, g in ((k, j, alpha * p), (j, k, np.conj(alpha) * np.conj(p))):
            rows += [2 * r, 2 * r, 2 * r + 1, 2 * r + 1]
            cols += [2 * c, 2 * c + 1, 2 * c, 2 * c + 1]
            vals += [g.real, -g.imag, g.imag, g.real]
    h = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    h.sum_duplicates()
    h = ((h + h.T.tocsr()) * 0.5).tocsr()
    h.eliminate_zeros()
    return h


def build_measurement_matrices(adm, plan):
    """Symmetric H_m for every plan entry, in plan order"""
    n = adm.n_buses
    dim = 2 * n
    forms = []
    for m, (kind, loc) in enumerate(plan.entries):
        upper = n if kind.is_nodal else adm.n_branches
        if not 1 <= loc <= upper:
            raise PlanLocationInvalid(f"entry {m}: {kind.value} location {loc} outside 1..{upper}",
                                      entry=m, location=loc)
        h = _real_form(_phi_entries(adm, kind, loc), _ALPHA[kind], dim)
        forms.append(QuadraticForm(h=h, kind=kind, location=loc))
    if not 1 <= plan.reference_bus <= n:
        raise PlanLocationInvalid(f"reference bus {plan.reference_bus} outside 1..{n}",
                                  location=plan.reference_bus)
    form_set = QuadraticFormSet(forms=tuple(forms), reference_coord=2 * (plan.reference_bus - 1) + 1)
    logger.debug(f"Built {len(form_set)} measurement matrices of size {dim}x{dim}")
    return form_set


def jacobian_at(forms: Sequence[QuadraticForm], v):
    """M x 2N matrix whose row m is v^T H_m"""
    forms = as_form_set(forms)
    v = state_array(v, forms.n_state)
    return (forms.stacked @ v).reshape(forms.n_measurements, forms.n_state)


def evaluate_measurements(forms: Sequence[QuadraticForm], v):
    """Noiseless measurement vector h(v)"""
    forms = as_form_set(forms)
    v = state_array(v, forms.n_state)
    return jacobian_at(forms, v) @ v


def evaluate_batch(forms, states):
    """h(v) for each row of a (T, 2N) state array"""
    forms = as_form_set(forms)
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != forms.n_state:
        raise DimensionMismatch(f"expected states of shape (T, {forms.n_state}), got {states.shape}",
                                expected=forms.n_state, found=list(states.shape))
    out = np.empty((states.shape[0], forms.n_measurements))
    for start in range(0, states.shape[0], _BATCH_CHUNK):
        block = states[start:start + _BATCH_CHUNK]
        hv = (forms.stacked @ block.T).reshape(forms.n_measurements, forms.n_state, block.shape[0])
        out[start:start + block.shape[0]] = np.einsum("mkt,tk->tm", hv, block)
    return out
