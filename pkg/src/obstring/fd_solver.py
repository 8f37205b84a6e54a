"""Implicit finite-difference time stepping for the penalized string.

Interior nodes j = 1..N-1 advance through

    (eta^{i+1} - 2 eta^i + eta^{i-1}) / dt^2
        - (alpha/dt) * [(L eta^{i+1})_j - (L eta^i)_j]
        - (L eta^{i+1})_j  =  F^i_j,

    (L u)_j = (u_{j+1} - 2 u_j + u_{j-1}) / dx^2,
    F^i_j   = (1/eps) * [eta^i_j < 0] * max(0, -(eta^i_j - eta^{i-1}_j)/dt),

with the endpoints pinned to the initial displacement's boundary values.
The damped-wave left-hand side is implicit, so the linear part is
unconditionally stable and the system matrix is constant in time; the
penalty force is explicit from the previous level.  Each step is one
tridiagonal solve with a factorization computed once per run.
"""

from __future__ import annotations

import logging

import numpy as np

from .core import (
    FieldSeries,
    NumericBlowupError,
    SimConfig,
    StringState,
    evaluate_initial,
    validate_config,
)
from .diagnostics import EnergyLedger
from .trisolve import ThomasFactorization, assemble_step_matrix

log = logging.getLogger(__name__)


def penalty_force(
    eta_curr: np.ndarray, eta_prev: np.ndarray, dt: float, epsilon: float
) -> np.ndarray:
    """Velocity-penalty force field F >= 0, zero at the boundary nodes.

    F_j = (1/epsilon) * [eta_curr_j < 0] * max(0, -(eta_curr_j - eta_prev_j)/dt).

    The indicator is strict (nodes at exactly zero feel no force) and only
    downward motion is penalized, so the force is repulsive everywhere.
    """
    if len(eta_curr) != len(eta_prev):
        raise ValueError("displacement frames have mismatched lengths")
    v = (eta_curr - eta_prev) / dt
    force = np.where(eta_curr < 0.0, np.maximum(0.0, -v) / epsilon, 0.0)
    force[0] = 0.0
    force[-1] = 0.0
    return force


def first_step(eta0: np.ndarray, v0: np.ndarray, dt: float) -> StringState:
    """Kinematic start-up: eta^1 = eta^0 + dt*v0 with endpoints re-pinned.

    The two-level scheme needs a second frame; a first-order start matches
    the scheme's overall first-order accuracy in time.
    """
    if len(eta0) != len(v0):
        raise ValueError("eta0 and v0 have mismatched lengths")
    eta1 = eta0 + dt * v0
    eta1[0] = eta0[0]
    eta1[-1] = eta0[-1]
    return StringState(step_index=1, eta_prev=eta0.copy(), eta_curr=eta1)


def _second_difference(eta: np.ndarray, dx: float) -> np.ndarray:
    """(L eta)_j over the interior nodes."""
    return (eta[2:] - 2.0 * eta[1:-1] + eta[:-2]) / dx**2


def _advance(
    state: StringState, factorization: ThomasFactorization, cfg: SimConfig
) -> tuple[StringState, np.ndarray]:
    """One implicit step; also returns the explicit force that drove it."""
    dt = cfg.time.dt
    dx = cfg.grid.dx
    alpha = cfg.physics.alpha
    eta_c = state.eta_curr
    eta_p = state.eta_prev

    force = penalty_force(eta_c, eta_p, dt, cfg.physics.epsilon)
    lap_c = _second_difference(eta_c, dx)
    rhs = (
        force[1:-1]
        + (2.0 * eta_c[1:-1] - eta_p[1:-1]) / dt**2
        - (alpha / dt) * lap_c
    )
    coupling = (alpha / dt + 1.0) / dx**2
    rhs[0] += coupling * cfg.boundary_left
    rhs[-1] += coupling * cfg.boundary_right

    eta_n = np.empty_like(eta_c)
    eta_n[0] = cfg.boundary_left
    eta_n[-1] = cfg.boundary_right
    eta_n[1:-1] = factorization.solve(rhs)

    new_state = StringState(
        step_index=state.step_index + 1, eta_prev=eta_c, eta_curr=eta_n
    )
    return new_state, force


def step(
    state: StringState, factorization: ThomasFactorization, cfg: SimConfig
) -> StringState:
    """Advance the state by one dt; cfg must be validated (pinned boundaries)."""
    new_state, _ = _advance(state, factorization, cfg)
    return new_state


def scheme_residual(series: FieldSeries, cfg: SimConfig) -> np.ndarray:
    """Substitute stored frames back into the step equation.

    Requires consecutively stored frames (stride 1).  Returns the interior
    residual matrix for time levels i = 1..S-2: row k corresponds to level
    i = k+1 and should vanish up to the linear-solve rounding floor.
    """
    times = series.times
    dt = cfg.time.dt
    if not np.allclose(np.diff(times), dt, rtol=1e-12, atol=0.0):
        raise ValueError("scheme_residual needs stride-1 storage")
    eta = series.fields["eta"]
    force = series.fields["penalty_force"]
    dx = cfg.grid.dx
    alpha = cfg.physics.alpha

    prev, curr, nxt = eta[:-2], eta[1:-1], eta[2:]

    def lap(mat):
        return (mat[:, 2:] - 2.0 * mat[:, 1:-1] + mat[:, :-2]) / dx**2

    return (
        (nxt[:, 1:-1] - 2.0 * curr[:, 1:-1] + prev[:, 1:-1]) / dt**2
        - (alpha / dt) * (lap(nxt) - lap(curr))
        - lap(nxt)
        - force[1:-1, 1:-1]
    )


def run(cfg: SimConfig) -> tuple[FieldSeries, EnergyLedger]:
    """Execute the configured experiment.

    Fields are stored every output_stride steps plus step 0 and the final
    step; the energy ledger gets one row per time step regardless of the
    stride.  A non-finite state aborts with the offending step index.
    """
    cfg = validate_config(cfg)
    grid, tgrid = cfg.grid, cfg.time
    dt = tgrid.dt
    eta0, v0 = evaluate_initial(cfg.init, grid)

    factorization = ThomasFactorization(assemble_step_matrix(grid, tgrid, cfg.physics))
    ledger = EnergyLedger.open(eta0, v0, cfg)

    steps_m = tgrid.steps_m
    stride = cfg.output_stride
    stored_times: list[float] = []
    stored_eta: list[np.ndarray] = []
    stored_vel: list[np.ndarray] = []
    stored_force: list[np.ndarray] = []

    def store(index: int, eta_curr, eta_prev, velocity=None):
        stored_times.append(index * dt)
        stored_eta.append(eta_curr.copy())
        if velocity is None:
            velocity = (eta_curr - eta_prev) / dt
        stored_vel.append(np.asarray(velocity, float).copy())
        stored_force.append(penalty_force(eta_curr, eta_prev, dt, cfg.physics.epsilon))

    log.info(
        "run: N=%d M=%d dt=%g alpha=%g eps=%g stride=%d",
        grid.cells_n, steps_m, dt, cfg.physics.alpha, cfg.physics.epsilon, stride,
    )

    # step 0: velocity row is the initial datum; the synthetic previous frame
    # eta0 - dt*v0 reproduces (v0)^- in the stored force field.
    store(0, eta0, eta0 - dt * v0, velocity=v0)

    state = first_step(eta0, v0, dt)
    force_prev = stored_force[0]
    ledger.append_step(state.eta_prev, state.eta_curr, force_prev)
    if steps_m >= 1 and (1 % stride == 0 or steps_m == 1):
        store(1, state.eta_curr, state.eta_prev)

    for i in range(1, steps_m):
        state, force_used = _advance(state, factorization, cfg)
        new_index = i + 1
        if not np.all(np.isfinite(state.eta_curr)):
            raise NumericBlowupError(new_index)
        ledger.append_step(state.eta_prev, state.eta_curr, force_used)
        if new_index % stride == 0 or new_index == steps_m:
            store(new_index, state.eta_curr, state.eta_prev)

    series = FieldSeries(
        times=np.array(stored_times),
        xs=grid.nodes(),
        fields={
            "eta": np.vstack(stored_eta),
            "velocity": np.vstack(stored_vel),
            "penalty_force": np.vstack(stored_force),
        },
    )
    series.validate()
    return series, ledger
