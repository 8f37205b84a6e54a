"""Domain types, grids, initial-data presets and configuration validation.

The model is a string of length ``l`` pinned at both endpoints, falling onto
the flat obstacle ``y = 0``.  The displacement ``eta(t, x)`` obeys the damped
wave equation

    d_tt eta - alpha * d_txx eta - d_xx eta = F,

where ``F`` is a contact force that is approximated by a velocity penalty:
``F = (1/epsilon) * [eta < 0] * (d_t eta)^-`` (see :mod:`obstring.fd_solver`).
Everything downstream — the finite-difference solver, the spectral oracle and
the diagnostics — shares the types defined here.  All types are immutable
after validation and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

PRESET_KINDS = ("example1", "example2")
INIT_KINDS = PRESET_KINDS + ("single_mode", "tabulated")


class ConfigurationError(ValueError):
    """A simulation configuration violates its contract."""


class NumericBlowupError(RuntimeError):
    """A solver produced a non-finite state; carries the offending step."""

    def __init__(self, step_index: int, message: str | None = None):
        self.step_index = step_index
        super().__init__(
            message or f"non-finite state detected at step {step_index}"
        )


class ProbeContractError(ValueError):
    """A diagnostic probe was invoked outside its contract."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid: nodes x_j = j*dx, j = 0..cells_n."""

    length_l: float
    cells_n: int

    @property
    def dx(self) -> float:
        return self.length_l / self.cells_n

    def nodes(self) -> np.ndarray:
        # linspace pins the last node to length_l exactly
        return np.linspace(0.0, self.length_l, self.cells_n + 1)

    def validate(self) -> None:
        if not (isinstance(self.cells_n, int) and self.cells_n >= 2):
            raise ConfigurationError(
                f"grid.cells_n must be an integer >= 2, got {self.cells_n!r}"
            )
        if not (np.isfinite(self.length_l) and self.length_l > 0):
            raise ConfigurationError(
                f"grid.length_l must be positive and finite, got {self.length_l!r}"
            )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid: t_i = i*dt, i = 0..steps_m."""

    horizon_T: float
    steps_m: int

    @property
    def dt(self) -> float:
        return self.horizon_T / self.steps_m

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon_T, self.steps_m + 1)

    def validate(self) -> None:
        if not (isinstance(self.steps_m, int) and self.steps_m >= 1):
            raise ConfigurationError(
                f"time.steps_m must be an integer >= 1, got {self.steps_m!r}"
            )
        if not (np.isfinite(self.horizon_T) and self.horizon_T > 0):
            raise ConfigurationError(
                f"time.horizon_T must be positive and finite, got {self.horizon_T!r}"
            )


@dataclass(frozen=True)
class Physics:
    """Material parameters: viscoelastic coefficient and penalty strength."""

    alpha: float
    epsilon: float

    def validate(self) -> None:
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigurationError(
                f"physics.alpha must be >= 0, got {self.alpha!r}"
            )
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigurationError(
                f"physics.epsilon must be > 0, got {self.epsilon!r}"
            )


@dataclass(frozen=True)
class InitialData:
    """Initial displacement/velocity selector.

    kind = "example1"    eta0 = 1 + sin^2(10 pi x)/2,  v0 = -50
    kind = "example2"    piecewise ramp/sine/ramp datum with a two-level
                         downward velocity (-50 left of x=0.6, -0.5 right)
    kind = "single_mode" eta0 = offset + amplitude*sin(mode*pi*x/l), v0 const
    kind = "tabulated"   explicit node tables (length cells_n + 1)

    The two named presets are evaluated verbatim, including Example 2's
    sign-changing sine plateau; only user-supplied kinds are subject to the
    nonnegativity screen in validate_config.
    """

    kind: str
    amplitude: float = 0.0
    mode: int = 1
    offset: float = 0.0
    v0: float = 0.0
    eta0_table: Optional[tuple[float, ...]] = None
    v0_table: Optional[tuple[float, ...]] = None

    def validate(self, grid: Grid1D) -> None:
        if self.kind not in INIT_KINDS:
            raise ConfigurationError(
                f"init.kind must be one of {INIT_KINDS}, got {self.kind!r}"
            )
        if self.kind == "single_mode":
            if not (isinstance(self.mode, int) and self.mode >= 1):
                raise ConfigurationError(
                    f"init.mode must be an integer >= 1, got {self.mode!r}"
                )
            for name in ("amplitude", "offset", "v0"):
                if not np.isfinite(getattr(self, name)):
                    raise ConfigurationError(f"init.{name} must be finite")
        if self.kind == "tabulated":
            want = grid.cells_n + 1
            for name, table in (("eta0", self.eta0_table), ("v0", self.v0_table)):
                if table is None:
                    raise ConfigurationError(f"init.{name} table is required")
                if len(table) != want:
                    raise ConfigurationError(
                        f"init.{name} table has length {len(table)}, "
                        f"expected cells_n + 1 = {want}"
                    )


@dataclass(frozen=True)
class SimConfig:
    """Full experiment description; immutable once validated."""

    grid: Grid1D
    time: TimeGrid
    physics: Physics
    init: InitialData
    boundary_left: Optional[float] = None
    boundary_right: Optional[float] = None
    output_stride: int = 0  # 0 = auto: max(1, steps_m // 300)


@dataclass
class StringState:
    """Two consecutive displacement frames; the discrete dynamical state."""

    step_index: int
    eta_prev: np.ndarray
    eta_curr: np.ndarray

    def velocity(self, dt: float) -> np.ndarray:
        return (self.eta_curr - self.eta_prev) / dt


@dataclass
class FieldSeries:
    """Strided space-time storage of named node fields.

    fields maps {"eta", "velocity", "penalty_force"} to arrays of shape
    (stored_steps, nodes); times is strictly increasing.
    """

    times: np.ndarray
    xs: np.ndarray
    fields: dict[str, np.ndarray]

    @property
    def dx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def validate(self) -> None:
        shape = (len(self.times), len(self.xs))
        for name, mat in self.fields.items():
            if mat.shape != shape:
                raise ValueError(
                    f"field {name!r} has shape {mat.shape}, expected {shape}"
                )
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def index_at_time(self, t: float) -> int:
        """Index of the stored step nearest to t."""
        return int(np.argmin(np.abs(self.times - t)))


def initial_callables(
    init: InitialData, grid: Grid1D
) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """Vectorized x -> eta0(x), x -> v0(x) evaluators for any init kind.

    Used by evaluate_initial on the solver nodes and by the spectral oracle
    on its quadrature points (tabulated data is interpolated linearly).
    """
    if init.kind == "example1":

        def eta_fn(x):
            return 1.0 + 0.5 * np.sin(10.0 * np.pi * np.asarray(x, float)) ** 2

        def v_fn(x):
            return np.full_like(np.asarray(x, float), -50.0)

    elif init.kind == "example2":

        def eta_fn(x):
            x = np.asarray(x, float)
            return np.select(
                [x < 0.2, x < 0.8],
                [x, np.sin(np.pi * (x - 0.2) / 0.3)],
                default=2.0 - x,
            )

        def v_fn(x):
            x = np.asarray(x, float)
            return np.where(x < 0.6, -50.0, -0.5)

    elif init.kind == "single_mode":
        k = init.mode
        length = grid.length_l

        def eta_fn(x):
            x = np.asarray(x, float)
            return init.offset + init.amplitude * np.sin(k * np.pi * x / length)

        def v_fn(x):
            return np.full_like(np.asarray(x, float), init.v0)

    elif init.kind == "tabulated":
        nodes = grid.nodes()
        eta_tab = np.asarray(init.eta0_table, float)
        v_tab = np.asarray(init.v0_table, float)

        def eta_fn(x):
            return np.interp(np.asarray(x, float), nodes, eta_tab)

        def v_fn(x):
            return np.interp(np.asarray(x, float), nodes, v_tab)

    else:  # pragma: no cover - guarded by InitialData.validate
        raise ConfigurationError(f"unknown init kind {init.kind!r}")

    return eta_fn, v_fn


def evaluate_initial(
    init: InitialData, grid: Grid1D
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the initial displacement and velocity on the grid nodes.

    Deterministic and pure.  For the symmetric preset (example1) the upper
    half of the vector is mirrored from the lower half so that
    eta0[j] == eta0[N-j] holds bitwise, which the solver's symmetry
    preservation checks rely on; mirrored values agree with direct
    evaluation to ~1 ulp.
    """
    grid.validate()
    init.validate(grid)
    x = grid.nodes()
    eta_fn, v_fn = initial_callables(init, grid)
    eta0 = np.asarray(eta_fn(x), float).copy()
    v0 = np.asarray(v_fn(x), float).copy()

    if init.kind == "example1":
        n = grid.cells_n
        half = np.arange(0, n // 2 + 1)
        eta0[n - half] = eta0[half]

    if init.kind == "tabulated":
        eta_tab = np.asarray(init.eta0_table, float)
        if np.any(eta_tab < 0):
            j = int(np.argmin(eta_tab))
            raise ConfigurationError(
                f"init.eta0 is negative at node {j} ({eta_tab[j]}); the string "
                "must start on or above the obstacle"
            )
        if np.any(eta_tab[1:-1] <= 0):
            j = 1 + int(np.argmin(eta_tab[1:-1]))
            raise ConfigurationError(
                f"init.eta0 touches the obstacle at interior node {j}; zeros "
                "are permitted at the endpoints only"
            )
        eta0 = eta_tab.copy()
        v0 = np.asarray(init.v0_table, float).copy()
    elif init.kind == "single_mode":
        interior = eta0[1:-1]
        if np.any(interior <= 0):
            raise ConfigurationError(
                "init single_mode produces a nonpositive interior displacement "
                f"(min {interior.min()}); require offset > |amplitude|"
            )

    return eta0, v0


def validate_config(cfg: SimConfig) -> SimConfig:
    """Check every invariant and materialize derived fields.

    Returns a new SimConfig with boundary values snapped to the evaluated
    initial displacement's endpoints and output_stride resolved.
    """
    cfg.grid.validate()
    cfg.time.validate()
    cfg.physics.validate()
    cfg.init.validate(cfg.grid)

    eta0, _ = evaluate_initial(cfg.init, cfg.grid)
    left, right = float(eta0[0]), float(eta0[-1])

    stride = cfg.output_stride
    if stride in (0, None):
        stride = max(1, cfg.time.steps_m // 300)
    if not (isinstance(stride, int) and stride >= 1):
        raise ConfigurationError(
            f"output_stride must be a positive integer, got {cfg.output_stride!r}"
        )

    return replace(
        cfg, boundary_left=left, boundary_right=right, output_stride=stride
    )


def example1_config(
    resolution: int = 5000, epsilon: float = 0.0005, alpha: float = 0.01,
    output_stride: int = 0,
) -> SimConfig:
    """Oscillatory symmetric datum dropped at speed 50; T = 0.3, l = 1.

    resolution sets dt = dx = 1/resolution (the reference runs use 5000).
    """
    steps = int(round(0.3 * resolution))
    return SimConfig(
        grid=Grid1D(1.0, resolution),
        time=TimeGrid(0.3, steps),
        physics=Physics(alpha, epsilon),
        init=InitialData("example1"),
        output_stride=output_stride,
    )


def example2_config(
    resolution: int = 5000, epsilon: float = 0.0005, alpha: float = 0.01,
    output_stride: int = 0,
) -> SimConfig:
    """Piecewise ramp/sine datum with a two-level velocity; T = 0.5, l = 1."""
    steps = int(round(0.5 * resolution))
    return SimConfig(
        grid=Grid1D(1.0, resolution),
        time=TimeGrid(0.5, steps),
        physics=Physics(alpha, epsilon),
        init=InitialData("example2"),
        output_stride=output_stride,
    )


def single_mode_config(
    resolution: int = 1000, amplitude: float = 0.5, mode: int = 1,
    offset: float = 1.0, v0: float = 0.0, alpha: float = 1.0,
    epsilon: float = 0.002, horizon_T: float = 0.3, output_stride: int = 0,
) -> SimConfig:
    """Single sine mode over a constant offset; stays off the obstacle when
    offset > |amplitude|, which makes it the analytic cross-check datum."""
    steps = int(round(horizon_T * resolution))
    return SimConfig(
        grid=Grid1D(1.0, resolution),
        time=TimeGrid(horizon_T, steps),
        physics=Physics(alpha, epsilon),
        init=InitialData(
            "single_mode", amplitude=amplitude, mode=mode, offset=offset, v0=v0
        ),
        output_stride=output_stride,
    )
