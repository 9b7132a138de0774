"""Reduced-complexity prox-linear LAV solver

Outer iteration i linearizes the measurement model at v_i, inverts the
Jacobian (J_i -> B_i) and solves the resulting Lasso in u with ISTA. The
state update reads v_{i+1} = [B_i (u + z) + v_i] / 2.

Quadratic measurements do not see a global phase rotation, so the
reference bus imaginary coordinate is pinned to zero and B_i carries a
zero row there.
"""
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Union

import numpy as np

from grid.model import StateVector, state_array
from measurement.quadratic import as_form_set, evaluate_measurements, jacobian_at
from solvers.ista import ista_coefficients, ista_iterate
from solvers.lav import lav_objective
from solvers.linalg import lambda_max, pseudo_inverse
from utils.errors import DimensionMismatch, Diverged

logger = logging.getLogger(__name__)

READOUTS = ("average", "converged")
ACCEPT_RTOL = 1e-12
STALL_TOL = 1e-8


@dataclass
class ProxLinearConfig:
    outer_iters: int = 29
    inner_iters: int = 100
    mu: Optional[Union[float, Sequence[float]]] = None
    eta: Optional[float] = None
    init_state: Any = "ones"
    tol: float = 0.0
    max_backtracks: int = 20
    safeguard: bool = True
    readout: str = "average"
    path: Optional[Sequence[Any]] = None

    def __post_init__(self):
        if self.outer_iters < 0:
            raise ValueError("outer_iters must be >= 0")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")
        if self.mu is not None and np.any(np.asarray(self.mu, dtype=float) <= 0):
            raise ValueError("mu must be positive")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.readout not in READOUTS:
            raise ValueError(f"readout must be one of {READOUTS}")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be >= 0")

    @classmethod
    def from_config(cls, config, **overrides):
        kwargs = dict(
            outer_iters=int(config.get("outer_iters", 29)),
            inner_iters=int(config.get("inner_iters", 100)),
            mu=config.get("mu"),
            eta=config.get("eta"),
            init_state=config.get("init_state", "ones"),
            tol=float(config.get("solver_tol", 0.0) or 0.0),
            max_backtracks=int(config.get("max_backtracks", 20)),
            safeguard=bool(config.get("safeguard", True)),
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def mu_at(self, i, n_measurements):
        """Step size for outer iteration i; defaults to M/2"""
        if self.mu is None:
            return n_measurements / 2.0
        schedule = np.atleast_1d(np.asarray(self.mu, dtype=float))
        return float(schedule[min(i, schedule.size - 1)])


@dataclass
class SolveTrace:
    method: str
    states: List[np.ndarray] = field(default_factory=list)
    objectives: List[float] = field(default_factory=list)
    inner_residuals: List[float] = field(default_factory=list)
    step_sizes: List[float] = field(default_factory=list)
    backtracks: List[int] = field(default_factory=list)
    timings: List[float] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""

    @property
    def iterations(self):
        return max(len(self.states) - 1, 0)

    def record(self, state, objective, inner_residual=None, step_size=None, backtracks=0, elapsed=None):
        self.states.append(np.array(state, dtype=float))
        self.objectives.append(float(objective))
        if inner_residual is not None:
            self.inner_residuals.append(float(inner_residual))
        if step_size is not None:
            self.step_sizes.append(float(step_size))
            self.backtracks.append(int(backtracks))
        if elapsed is not None:
            self.timings.append(float(elapsed))

    def to_dict(self, include_states=False, include_timings=True):
        data = {
            "method": self.method,
            "iterations": self.iterations,
            "objectives": self.objectives,
            "inner_residuals": self.inner_residuals,
            "step_sizes": self.step_sizes,
            "backtracks": self.backtracks,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
        }
        if include_timings:
            data["timings"] = self.timings
        if include_states:
            data["states"] = [s.tolist() for s in self.states]
        return data

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(**kwargs), indent=2)


def initial_state(init, n_buses):
    """'ones' (all entries 1), 'flat' (1 + j0) or an explicit state"""
    if isinstance(init, str):
        if init == "ones":
            return StateVector.ones(n_buses).values.copy()
        if init == "flat":
            return StateVector.flat(n_buses).values.copy()
        raise ValueError(f"unknown initial state '{init}' (use 'ones', 'flat' or a state vector)")
    return np.array(state_array(init, 2 * n_buses), dtype=float)


def pin_reference(v, reference_coord):
    """Rotate v so the reference bus lies on the positive real axis"""
    v = np.array(v, dtype=float)
    k = reference_coord // 2
    ref = complex(v[2 * k], v[2 * k + 1])
    if ref.imag == 0.0:
        return v
    voltages = (v[0::2] + 1j * v[1::2]) * (abs(ref) / ref)
    v[0::2] = voltages.real
    v[1::2] = voltages.imag
    v[reference_coord] = 0.0
    return v


def reduced_inverse(forms, v):
    """B (2N x M) from the Jacobian with the reference coordinate removed"""
    forms = as_form_set(forms)
    jac = jacobian_at(forms, v)
    free = forms.free_coords()
    b_mat = np.zeros((forms.n_state, forms.n_measurements))
    b_mat[free] = pseudo_inverse(jac[:, free])
    return b_mat


def auto_eta(mu, n_measurements, lam):
    """Largest ISTA step with guaranteed descent: 2 mu / (M lambda_max(B^T B))"""
    return 2.0 * mu / (n_measurements * lam)


def _readout(b_mat, u, z, anchor, mode):
    recovered = b_mat @ (u + z)
    if mode == "converged":
        return recovered
    return (recovered + anchor) / 2.0


def check_measurements(forms, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (forms.n_measurements,):
        raise DimensionMismatch(f"expected {forms.n_measurements} measurements, got {z.shape}",
                                expected=forms.n_measurements, found=list(z.shape))
    return z


def prox_linear_lav(forms, z, cfg=None):
    """Run the double-loop solver; returns (StateVector, SolveTrace)

    With `cfg.path` set, J_i and the ISTA bias are taken at the frozen
    points path[i] instead of the running iterate, and the objective
    safeguard is skipped.
    """
    cfg = cfg or ProxLinearConfig()
    forms = as_form_set(forms)
    z = check_measurements(forms, z)
    m = forms.n_measurements
    n_buses = forms.n_state // 2
    ref = forms.reference_coord

    frozen = cfg.path is not None
    if frozen:
        path = [state_array(p, forms.n_state) for p in cfg.path]
        if len(path) < cfg.outer_iters + 1:
            raise DimensionMismatch(f"linearization path has {len(path)} points, need {cfg.outer_iters + 1}",
                                    expected=cfg.outer_iters + 1, found=len(path))

    v = pin_reference(initial_state(cfg.init_state, n_buses), ref)
    trace = SolveTrace(method="prox_linear")
    f_old = lav_objective(forms, z, v)
    trace.record(v, f_old)
    u = np.zeros(m)

    for i in range(cfg.outer_iters + 1):
        start = time.perf_counter()
        anchor = path[i] if frozen else v
        b_mat = reduced_inverse(forms, anchor)
        lam = lambda_max(b_mat)
        mu = cfg.mu_at(i, m)

        for attempt in range(cfg.max_backtracks + 1):
            eta = cfg.eta if cfg.eta is not None else auto_eta(mu, m, lam)
            coef = ista_coefficients(b_mat, anchor, mu, eta)
            u_new, residual = ista_iterate(coef, z, cfg.inner_iters, u)
            v_new = _readout(b_mat, u_new, z, anchor, cfg.readout)
            if not np.all(np.isfinite(v_new)):
                raise Diverged(f"non-finite iterate at outer iteration {i}", iteration=i)
            f_new = lav_objective(forms, z, v_new)
            if frozen or not cfg.safeguard or f_new <= f_old + ACCEPT_RTOL * max(1.0, f_old):
                break
            logger.debug(f"Outer iteration {i}: objective rose {f_old:.6e} -> {f_new:.6e}, halving mu")
            mu /= 2.0
        else:
            step = float(np.max(np.abs(v_new - v)))
            if step <= STALL_TOL:
                trace.converged = True
                trace.stop_reason = "stalled"
                logger.debug(f"Outer iteration {i}: no descent within {cfg.max_backtracks} halvings, "
                             f"step {step:.3e}; stopping")
                break
            raise Diverged(f"objective increased after {cfg.max_backtracks} step-size reductions "
                           f"at outer iteration {i}", iteration=i, objective=f_new, previous=f_old)

        step = float(np.max(np.abs(v_new - v)))
        u, v, f_old = u_new, v_new, f_new
        trace.record(v, f_new, inner_residual=residual, step_size=mu, backtracks=attempt,
                     elapsed=time.perf_counter() - start)
        logger.debug(f"Outer iteration {i}: objective {f_new:.6e}, step {step:.3e}, "
                     f"mu {mu:.3e}, ISTA residual {residual:.3e}")
        if cfg.tol > 0 and step <= cfg.tol:
            trace.converged = True
            trace.stop_reason = "tol"
            break
    else:
        trace.converged = True
        trace.stop_reason = "max_iter"

    return StateVector(v), trace


def linearization_path(forms, z_ref=None, cfg=None):
    """Iterates v_0..v_I of the solver run on z_ref (default h(v_0))

    These are the points at which the unrolled net's blocks are linearized.
    """
    cfg = cfg or ProxLinearConfig()
    forms = as_form_set(forms)
    if z_ref is None:
        v0 = pin_reference(initial_state(cfg.init_state, forms.n_state // 2), forms.reference_coord)
        z_ref = evaluate_measurements(forms, v0)
    run_cfg = dataclasses.replace(cfg, path=None, tol=0.0)
    _, trace = prox_linear_lav(forms, z_ref, run_cfg)
    points = list(trace.states[:cfg.outer_iters + 1])
    while len(points) < cfg.outer_iters + 1:
        points.append(points[-1])
    return points
