"""Verification probes for penalized-string runs.

Everything in this module consumes stored fields (displacement, backward-
difference velocity, penalty force) and produces scalar or tabular
diagnostics: an energy ledger, penetration metrics, contact-set geometry,
mollified dissipation estimates, and residuals of the weak-form identities
the solution is expected to satisfy (momentum balance, localized energy
decay, a renormalization identity for the positive velocity part, and
jump/trace identities across the contact boundary).

Space integrals use plain cell sums (sum * dx); time integrals use
trapezoidal weights over the stored instants, so probes remain meaningful
on strided output.  Test functions are compactly supported polynomial
bumps with analytic first derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import FieldSeries, ProbeContractError, SimConfig

__all__ = [
    "BumpTestFunction",
    "ContactReport",
    "EnergyLedger",
    "MollifierKernel",
    "builtin_test_functions",
    "dissipation_estimate",
    "extract_contact",
    "local_energy_residual",
    "mollify",
    "penetration_metrics",
    "renormalized_residual",
    "stress_jump_probe",
    "time_weights",
    "velocity_jump_probe",
    "weak_momentum_residual",
    "zero_trace_residual",
]


def time_weights(times: np.ndarray) -> np.ndarray:
    """Trapezoidal quadrature weights for a sorted sequence of instants."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("need at least two instants for time quadrature")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("instants must be strictly increasing")
    w = np.empty_like(times)
    w[0] = (times[1] - times[0]) / 2.0
    w[-1] = (times[-1] - times[-2]) / 2.0
    w[1:-1] = (times[2:] - times[:-2]) / 2.0
    return w


# ---------------------------------------------------------------------------
# energy accounting


class EnergyLedger:
    """Per-step energy bookkeeping for a run.

    Row i records, at time i*dt: kinetic and elastic energy of the frame,
    the accumulated viscous dissipation, the accumulated work done by the
    penalty force on the string, and the budget residual

        residual_i = (K + E)_i - (K + E)_0 + visc_cum_i - work_cum_i.

    Velocities are backward differences of consecutive frames (row 0 uses
    the initial velocity datum).  Row 1 follows the same formulas even
    though the first step is kinematic, so its imbalance lands in the
    residual column rather than being special-cased away.
    """

    def __init__(self, dt: float, dx: float, alpha: float):
        self.dt = dt
        self.dx = dx
        self.alpha = alpha
        self.times: list[float] = []
        self.kinetic: list[float] = []
        self.elastic: list[float] = []
        self.visc_cum: list[float] = []
        self.work_cum: list[float] = []

    @classmethod
    def open(cls, eta0: np.ndarray, v0: np.ndarray, cfg: SimConfig) -> "EnergyLedger":
        ledger = cls(cfg.time.dt, cfg.grid.dx, cfg.physics.alpha)
        ledger.times.append(0.0)
        ledger.kinetic.append(ledger._kinetic(v0))
        ledger.elastic.append(ledger._elastic(eta0))
        ledger.visc_cum.append(0.0)
        ledger.work_cum.append(0.0)
        return ledger

    def _kinetic(self, v: np.ndarray) -> float:
        return 0.5 * float(np.sum(v * v)) * self.dx

    def _elastic(self, eta: np.ndarray) -> float:
        slope = np.gradient(eta, self.dx)
        return 0.5 * float(np.sum(slope * slope)) * self.dx

    def append_step(
        self, eta_prev: np.ndarray, eta_new: np.ndarray, force_prev: np.ndarray
    ) -> None:
        """Account for one step eta_prev -> eta_new driven by force_prev."""
        v_new = (eta_new - eta_prev) / self.dt
        slope_v = np.gradient(v_new, self.dx)
        visc_inc = self.alpha * self.dt * float(np.sum(slope_v * slope_v)) * self.dx
        work_inc = self.dt * float(np.sum(force_prev * v_new)) * self.dx
        self.times.append(self.times[-1] + self.dt)
        self.kinetic.append(self._kinetic(v_new))
        self.elastic.append(self._elastic(eta_new))
        self.visc_cum.append(self.visc_cum[-1] + visc_inc)
        self.work_cum.append(self.work_cum[-1] + work_inc)

    def __len__(self) -> int:
        return len(self.times)

    def total_energy(self) -> np.ndarray:
        return np.asarray(self.kinetic) + np.asarray(self.elastic)

    def residual(self) -> np.ndarray:
        total = self.total_energy()
        return total - total[0] + np.asarray(self.visc_cum) - np.asarray(self.work_cum)

    def max_step_increase(self) -> float:
        """Largest single-step rise of K + E (negative if strictly decaying)."""
        total = self.total_energy()
        if len(total) < 2:
            return 0.0
        return float(np.max(np.diff(total)))

    def as_columns(self) -> dict[str, np.ndarray]:
        return {
            "time": np.asarray(self.times),
            "kinetic": np.asarray(self.kinetic),
            "elastic": np.asarray(self.elastic),
            "visc_cum": np.asarray(self.visc_cum),
            "work_cum": np.asarray(self.work_cum),
            "residual": self.residual(),
        }


def energy_step(
    ledger: EnergyLedger,
    eta_prev: np.ndarray,
    eta_new: np.ndarray,
    penalty: np.ndarray,
) -> EnergyLedger:
    """Append one accounting row for the step eta_prev -> eta_new."""
    ledger.append_step(eta_prev, eta_new, penalty)
    return ledger


# ---------------------------------------------------------------------------
# penetration and contact geometry


def penetration_metrics(series: FieldSeries) -> dict[str, float]:
    """Size of the negative displacement excursion over the stored frames.

    Returns the worst pointwise depth, the largest L1 mass of the negative
    part at any stored instant, the final-frame values of both, and the
    first stored time with any penetration (NaN when the string never dips
    below the obstacle).
    """
    eta = series.fields["eta"]
    dx = series.dx
    neg = np.maximum(-eta, 0.0)
    per_time_l1 = neg.sum(axis=1) * dx
    per_time_depth = neg.max(axis=1)
    hit = np.nonzero(per_time_depth > 0.0)[0]
    return {
        "depth_max": float(per_time_depth.max()),
        "l1_max": float(per_time_l1.max()),
        "depth_final": float(per_time_depth[-1]),
        "l1_final": float(per_time_l1[-1]),
        "first_penetration_time": float(series.times[hit[0]]) if len(hit) else math.nan,
    }


@dataclass
class ContactReport:
    """Contact-set geometry extracted from stored frames.

    mask
        Boolean (frames x nodes) array; a node is in contact when its
        displacement is <= 0 or the penalty force there is active.
        Boundary nodes are exempt (they are pinned, not in contact).
    boundary_graphs
        Polylines (k, 2) of (time, x) tracing the left/right edges of
        contact components through time, longest-lived first.
    """

    mask: np.ndarray
    components_per_time: np.ndarray
    first_contact_time: float | None
    total_penalty_impulse: float
    boundary_graphs: list[np.ndarray] = field(default_factory=list)
    graph_sides: list[str] = field(default_factory=list)

    @property
    def max_components(self) -> int:
        return int(self.components_per_time.max()) if len(self.components_per_time) else 0


def _mask_runs(row: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, stop) index pairs of the True runs of a 1-D mask."""
    idx = np.nonzero(row)[0]
    if len(idx) == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    stops = np.concatenate((idx[breaks], [idx[-1]]))
    return list(zip(starts.tolist(), stops.tolist()))


def extract_contact(
    series: FieldSeries, link_cells: int = 12, min_duration: int = 2
) -> ContactReport:
    """Locate the contact set and trace its component edges through time.

    Edges of contact components are linked frame-to-frame to the nearest
    edge of the same side within link_cells grid cells; chains shorter
    than min_duration frames are dropped.
    """
    eta = series.fields["eta"]
    force = series.fields["penalty_force"]
    xs = series.xs
    times = series.times
    mask = (eta <= 0.0) | (force > 0.0)
    mask[:, 0] = False
    mask[:, -1] = False

    tol = link_cells * series.dx
    chains: list[dict] = []
    components = np.zeros(len(times), dtype=int)

    for s, t in enumerate(times):
        runs = _mask_runs(mask[s])
        components[s] = len(runs)
        for side, pos in (("left", 0), ("right", 1)):
            edges = [float(xs[r[pos]]) for r in runs]
            taken = [False] * len(edges)
            for chain in chains:
                if not chain["active"] or chain["side"] != side:
                    continue
                best, best_d = -1, tol
                for k, x in enumerate(edges):
                    d = abs(x - chain["pts"][-1][1])
                    if not taken[k] and d <= best_d:
                        best, best_d = k, d
                if best >= 0:
                    taken[best] = True
                    chain["pts"].append((float(t), edges[best]))
                else:
                    chain["active"] = False
            for k, x in enumerate(edges):
                if not taken[k]:
                    chains.append(
                        {"side": side, "pts": [(float(t), x)], "active": True}
                    )

    kept = [c for c in chains if len(c["pts"]) >= min_duration]
    kept.sort(key=lambda c: len(c["pts"]), reverse=True)

    any_contact = np.nonzero(mask.any(axis=1))[0]
    first_time = float(times[any_contact[0]]) if len(any_contact) else None
    impulse = float(
        np.sum(force * time_weights(times)[:, None]) * series.dx
    )

    return ContactReport(
        mask=mask,
        components_per_time=components,
        first_contact_time=first_time,
        total_penalty_impulse=impulse,
        boundary_graphs=[np.array(c["pts"]) for c in kept],
        graph_sides=[c["side"] for c in kept],
    )


# ---------------------------------------------------------------------------
# mollification and dissipation


@dataclass(frozen=True)
class MollifierKernel:
    """Separable compactly supported smoothing kernel of radius omega.

    Per-axis taps are samples of exp(-1/(1 - s^2)) on |s| < 1, scaled so
    that discrete convolution approximates the unit-mass integral
    (weights already include the cell size).  Fields are extended by
    zero outside their domain, which is the intended behavior for
    quantities supported in the interior.
    """

    omega: float
    taps_t: np.ndarray
    taps_x: np.ndarray

    @staticmethod
    def _axis_taps(omega: float, delta: float) -> np.ndarray:
        radius = int(math.ceil(omega / delta)) - 1
        offsets = np.arange(-radius, radius + 1) * delta
        s = offsets / omega
        weights = np.exp(-1.0 / (1.0 - s * s))
        weights /= weights.sum() * delta
        return weights * delta

    @classmethod
    def build(cls, omega: float, dt: float, dx: float) -> "MollifierKernel":
        if omega < 2.0 * max(dt, dx):
            raise ProbeContractError(
                f"mollifier width {omega:g} below twice the grid spacing "
                f"max(dt={dt:g}, dx={dx:g})"
            )
        return cls(
            omega=omega,
            taps_t=cls._axis_taps(omega, dt),
            taps_x=cls._axis_taps(omega, dx),
        )


def mollify(field2d: np.ndarray, kernel: MollifierKernel) -> np.ndarray:
    """Smooth a (frames x nodes) field along both axes (zero extension)."""
    out = np.apply_along_axis(
        lambda col: np.convolve(col, kernel.taps_t, mode="same"), 0, field2d
    )
    return np.apply_along_axis(
        lambda row: np.convolve(row, kernel.taps_x, mode="same"), 1, out
    )


def dissipation_estimate(series: FieldSeries, kernel: MollifierKernel) -> dict:
    """Contact dissipation density force * (-smoothed velocity).

    The unsmoothed product is nonnegative by construction of the penalty;
    smoothing the velocity leaks sign changes into the density.  The
    negative_fraction entry reports how much of the total mass (in
    absolute value) the negative cells carry — it should shrink as the
    kernel width does.
    """
    v_smooth = mollify(series.fields["velocity"], kernel)
    density = series.fields["penalty_force"] * (-v_smooth)
    weighted = density * time_weights(series.times)[:, None] * series.dx
    total_abs = float(np.abs(weighted).sum())
    negative = float(-weighted[weighted < 0.0].sum())
    return {
        "omega": kernel.omega,
        "total": float(weighted.sum()),
        "negative_fraction": negative / total_abs if total_abs > 0.0 else 0.0,
        "density": density,
    }


# ---------------------------------------------------------------------------
# compactly supported test functions


@dataclass(frozen=True)
class BumpTestFunction:
    """Separable C^2 bump amp * g((t-tc)/tw) * g((x-xc)/xw), g(s)=(1-s^2)^3.

    Nonnegative, compactly supported in the open rectangle
    (tc - tw, tc + tw) x (xc - xw, xc + xw), with analytic first
    derivatives.  Builders are expected to keep the spatial support inside
    the open rod and the temporal support away from the final time; the
    initial time may be inside the support.
    """

    t_center: float
    t_width: float
    x_center: float
    x_width: float
    amplitude: float = 1.0
    name: str = "bump"

    @staticmethod
    def _g(s: np.ndarray) -> np.ndarray:
        inside = np.abs(s) < 1.0
        return np.where(inside, (1.0 - s * s) ** 3, 0.0)

    @staticmethod
    def _dg(s: np.ndarray) -> np.ndarray:
        inside = np.abs(s) < 1.0
        return np.where(inside, -6.0 * s * (1.0 - s * s) ** 2, 0.0)

    def _profiles(self, times, xs):
        tau = (np.asarray(times, float) - self.t_center) / self.t_width
        xi = (np.asarray(xs, float) - self.x_center) / self.x_width
        return tau, xi

    def value_grid(self, times: np.ndarray, xs: np.ndarray) -> np.ndarray:
        tau, xi = self._profiles(times, xs)
        return self.amplitude * np.outer(self._g(tau), self._g(xi))

    def dt_grid(self, times: np.ndarray, xs: np.ndarray) -> np.ndarray:
        tau, xi = self._profiles(times, xs)
        return (self.amplitude / self.t_width) * np.outer(self._dg(tau), self._g(xi))

    def dx_grid(self, times: np.ndarray, xs: np.ndarray) -> np.ndarray:
        tau, xi = self._profiles(times, xs)
        return (self.amplitude / self.x_width) * np.outer(self._g(tau), self._dg(xi))


def builtin_test_functions(horizon_T: float, length_l: float) -> dict[str, BumpTestFunction]:
    """Five bumps covering the space-time box; 'early' is active at t=0."""
    T, L = horizon_T, length_l
    bumps = [
        BumpTestFunction(0.0, 0.40 * T, 0.50 * L, 0.45 * L, name="early"),
        BumpTestFunction(0.45 * T, 0.40 * T, 0.30 * L, 0.25 * L, name="mid_left"),
        BumpTestFunction(0.70 * T, 0.28 * T, 0.70 * L, 0.25 * L, name="late_right"),
        BumpTestFunction(0.35 * T, 0.34 * T, 0.50 * L, 0.48 * L, name="wide"),
        BumpTestFunction(0.20 * T, 0.18 * T, 0.55 * L, 0.12 * L, name="narrow"),
    ]
    return {b.name: b for b in bumps}


# ---------------------------------------------------------------------------
# weak-form residuals


def _grids(series: FieldSeries, phi: BumpTestFunction, require_nonneg: bool = False):
    times, xs = series.times, series.xs
    p = phi.value_grid(times, xs)
    if abs(p[-1]).max() > 0.0 or abs(p[:, 0]).max() > 0.0 or abs(p[:, -1]).max() > 0.0:
        raise ProbeContractError(
            "test function must vanish at the final time and at both rod ends"
        )
    if require_nonneg and p.min() < 0.0:
        raise ProbeContractError("test function must be nonnegative")
    return (
        p,
        phi.dt_grid(times, xs),
        phi.dx_grid(times, xs),
        time_weights(times),
        series.dx,
    )


def _integrate(rows: np.ndarray, w_t: np.ndarray, dx: float) -> float:
    return float(np.sum(rows * w_t[:, None]) * dx)


def weak_momentum_residual(
    series: FieldSeries, cfg: SimConfig, phi: BumpTestFunction
) -> dict[str, float]:
    """Residual of the weak momentum balance against one test function.

    For a solution, transport + viscous + elastic terms balance the
    initial-velocity term and the penalty-force mass:

        II[v p_t - a (d_x v) p_x - (d_x eta) p_x] + I[v0 p(0,.)] + II[F p] = 0.

    Returns the residual, the individual terms, and scale = sum of their
    magnitudes for relative comparison.
    """
    p, p_t, p_x, w_t, dx = _grids(series, phi)
    v = series.fields["velocity"]
    eta = series.fields["eta"]
    force = series.fields["penalty_force"]
    alpha = cfg.physics.alpha

    dxv = np.gradient(v, dx, axis=1)
    dxeta = np.gradient(eta, dx, axis=1)

    transport = _integrate(v * p_t, w_t, dx)
    viscous = -alpha * _integrate(dxv * p_x, w_t, dx)
    elastic = -_integrate(dxeta * p_x, w_t, dx)
    initial = float(np.sum(v[0] * p[0]) * dx)
    forcing = _integrate(force * p, w_t, dx)

    terms = {
        "transport": transport,
        "viscous": viscous,
        "elastic": elastic,
        "initial": initial,
        "forcing": forcing,
    }
    residual = sum(terms.values())
    scale = sum(abs(t) for t in terms.values())
    return {"residual": residual, "scale": scale, **terms}


def local_energy_residual(
    series: FieldSeries, cfg: SimConfig, phi: BumpTestFunction
) -> dict[str, float]:
    """Slack of the localized energy inequality (nonnegative test function).

    lhs collects the transported energy density, viscous dissipation,
    contact dissipation (density F * (-v)^+), and the flux terms; rhs is
    the initial energy weighted by phi(0, .).  For a dissipative solution
    lhs <= rhs, so slack = rhs - lhs should not be significantly negative.
    """
    p, p_t, p_x, w_t, dx = _grids(series, phi, require_nonneg=True)
    v = series.fields["velocity"]
    eta = series.fields["eta"]
    force = series.fields["penalty_force"]
    alpha = cfg.physics.alpha

    dxv = np.gradient(v, dx, axis=1)
    dxeta = np.gradient(eta, dx, axis=1)
    contact_density = force * np.maximum(-v, 0.0)

    lhs_terms = {
        "kinetic_transport": -0.5 * _integrate(v * v * p_t, w_t, dx),
        "elastic_transport": -0.5 * _integrate(dxeta * dxeta * p_t, w_t, dx),
        "viscous": alpha * _integrate(dxv * dxv * p, w_t, dx),
        "contact": _integrate(contact_density * p, w_t, dx),
        "viscous_flux": alpha * _integrate(dxv * v * p_x, w_t, dx),
        "elastic_flux": _integrate(dxeta * v * p_x, w_t, dx),
    }
    rhs = float(np.sum((0.5 * v[0] ** 2 + 0.5 * dxeta[0] ** 2) * p[0]) * dx)
    lhs = sum(lhs_terms.values())
    scale = abs(rhs) + sum(abs(t) for t in lhs_terms.values())
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": scale, **lhs_terms}


def renormalized_residual(
    series: FieldSeries,
    cfg: SimConfig,
    phi: BumpTestFunction,
    b_kind: str = "square",
) -> dict[str, float]:
    """Slack of the renormalization identity for w = max(v, 0).

    With b(w) = w^2 (the only supported b_kind) the identity reads, for
    nonnegative phi:

        II[w^2 p_t] - a II[(d_x v) 2w p_x] - a II[|d_x w|^2 2 p]
          - II[(d_x eta) 2w p_x] - II[(d_x eta) (d_x 2w) p] + I[w0^2 p(0,.)]
          >= 0,

    with equality in the continuum because the penalty only acts where the
    velocity is negative, where b'(w) vanishes.  Returns the slack and a
    magnitude scale.
    """
    if b_kind != "square":
        raise ValueError(f"unsupported renormalization kind {b_kind!r}")
    p, p_t, p_x, w_t, dx = _grids(series, phi, require_nonneg=True)
    v = series.fields["velocity"]
    eta = series.fields["eta"]
    alpha = cfg.physics.alpha

    w = np.maximum(v, 0.0)
    dxv = np.gradient(v, dx, axis=1)
    dxw = np.gradient(w, dx, axis=1)
    dxeta = np.gradient(eta, dx, axis=1)

    terms = {
        "transport": _integrate(w * w * p_t, w_t, dx),
        "viscous_flux": -alpha * _integrate(dxv * 2.0 * w * p_x, w_t, dx),
        "viscous_bulk": -alpha * _integrate(dxw * dxw * 2.0 * p, w_t, dx),
        "elastic_flux": -_integrate(dxeta * 2.0 * w * p_x, w_t, dx),
        "elastic_bulk": -_integrate(dxeta * 2.0 * dxw * p, w_t, dx),
        "initial": float(np.sum(w[0] ** 2 * p[0]) * dx),
    }
    slack = sum(terms.values())
    scale = sum(abs(t) for t in terms.values())
    return {"slack": slack, "scale": scale, **terms}


# ---------------------------------------------------------------------------
# contact-boundary probes


def _graph_on_times(
    boundary: np.ndarray, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Stored instants covered by the graph and the interpolated positions."""
    boundary = np.asarray(boundary, dtype=float)
    if boundary.ndim != 2 or boundary.shape[1] != 2 or len(boundary) < 2:
        raise ProbeContractError("contact boundary must be a (k, 2) polyline, k >= 2")
    if np.any(np.diff(boundary[:, 0]) <= 0.0):
        raise ProbeContractError("contact boundary times must be strictly increasing")
    inside = np.nonzero((times >= boundary[0, 0]) & (times <= boundary[-1, 0]))[0]
    if len(inside) < 2:
        raise ProbeContractError("contact boundary covers fewer than two stored instants")
    f = np.interp(times[inside], boundary[:, 0], boundary[:, 1])
    return inside, f


def stress_jump_probe(
    series: FieldSeries, cfg: SimConfig, boundary: np.ndarray, delta: float
) -> dict[str, float]:
    """Momentum-flux jump across a contact boundary vs. penalty mass nearby.

    The stress sigma = d_x eta + alpha * d_tx eta is integrated over strips
    of width delta on either side of the polyline x = f(t); the
    concentrated contact force carried by the graph equals

        -(1/delta) * [ II_{f<x<f+delta} sigma - II_{f-delta<x<f} sigma ]

    in the limit of small delta, and should match the penalty-force mass
    in the strip |x - f| <= delta.  Both are returned for comparison.
    """
    if delta < 2.0 * series.dx:
        raise ProbeContractError(
            f"strip width {delta:g} must be at least two cells ({2.0 * series.dx:g})"
        )
    rows, f = _graph_on_times(boundary, series.times)
    xs = series.xs
    if np.any(f - delta < xs[0]) or np.any(f + delta > xs[-1]):
        raise ProbeContractError("strips around the boundary leave the domain")

    dx = series.dx
    alpha = cfg.physics.alpha
    eta = series.fields["eta"][rows]
    v = series.fields["velocity"][rows]
    sigma = np.gradient(eta, dx, axis=1) + alpha * np.gradient(v, dx, axis=1)
    force = series.fields["penalty_force"][rows]

    w_t = time_weights(series.times[rows])
    pos = xs[None, :] - f[:, None]
    right = (pos > 0.0) & (pos <= delta)
    left = (pos >= -delta) & (pos <= 0.0)
    near = np.abs(pos) <= delta

    flux_right = float(np.sum(np.where(right, sigma, 0.0) * w_t[:, None]) * dx)
    flux_left = float(np.sum(np.where(left, sigma, 0.0) * w_t[:, None]) * dx)
    jump_total = -(flux_right - flux_left) / delta
    penalty_mass = float(np.sum(np.where(near, force, 0.0) * w_t[:, None]) * dx)

    return {
        "jump_total": jump_total,
        "penalty_mass": penalty_mass,
        "delta": delta,
        "time_span": float(series.times[rows][-1] - series.times[rows][0]),
    }


def velocity_jump_probe(
    series: FieldSeries,
    t1: float,
    x0: float,
    x1: float,
    deltas,
    phi: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Short-window velocity averages before/after an instant on [x0, x1].

    For each window length delta the probe returns

        (1/delta) * int_{t1}^{t1+delta} int_{x0}^{x1} v(t,x) phi(x) dx dt

    and the matching backward window over [t1 - delta, t1], for phi == 1
    and optionally for a supplied nodal weight phi.  Once the segment has
    stuck to the obstacle the forward averages trend to zero as delta
    shrinks, and after - before estimates the mass of the concentrated
    contact force in the window.
    """
    xs = series.xs
    times = series.times
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=float)
    if np.any(deltas <= 0.0):
        raise ProbeContractError("window lengths must be positive")
    if not (xs[0] <= x0 < x1 <= xs[-1]):
        raise ProbeContractError("probe interval must satisfy 0 <= x0 < x1 <= l")
    dmax = float(deltas[0])
    if t1 - dmax < times[0] - 1e-12 or t1 + dmax > times[-1] + 1e-12:
        raise ProbeContractError(
            f"windows around t1={t1:g} exceed the stored range "
            f"[{times[0]:g}, {times[-1]:g}]"
        )

    cols = np.nonzero((xs >= x0 - 1e-12) & (xs <= x1 + 1e-12))[0]
    v = series.fields["velocity"][:, cols]
    weights = np.ones(len(cols)) if phi is None else np.asarray(phi, float)[cols]
    trace = v @ weights * series.dx  # int v phi dx at each stored time
    unit = v.sum(axis=1) * series.dx

    def window_mean(values: np.ndarray, lo: float, hi: float) -> float:
        rows = np.nonzero((times >= lo - 1e-12) & (times <= hi + 1e-12))[0]
        if len(rows) < 2:
            raise ProbeContractError("window shorter than the storage stride")
        w = time_weights(times[rows])
        return float(np.sum(values[rows] * w) / (hi - lo))

    before = np.array([window_mean(unit, t1 - d, t1) for d in deltas])
    after = np.array([window_mean(unit, t1, t1 + d) for d in deltas])
    out = {
        "deltas": deltas,
        "before": before,
        "after": after,
        "jump": after - before,
        "node_count": len(cols),
    }
    if phi is not None:
        out["before_phi"] = np.array([window_mean(trace, t1 - d, t1) for d in deltas])
        out["after_phi"] = np.array([window_mean(trace, t1, t1 + d) for d in deltas])
    return out


def zero_trace_residual(
    series: FieldSeries, boundary: np.ndarray, phi: BumpTestFunction
) -> dict[str, float]:
    """Integration-by-parts defect over the region right of a contact boundary.

    On w(t) = {f(t) <= x <= l}, if the velocity trace vanishes on the
    graph (the string has stuck) and phi vanishes at x = l, then

        II_w (d_x v) phi + II_w v (d_x phi) = 0.

    The graph must be monotone in time.  Both integrals and their sum are
    returned; scale is the magnitude sum.
    """
    boundary = np.asarray(boundary, dtype=float)
    rows, f = _graph_on_times(boundary, series.times)
    steps = np.diff(boundary[:, 1])
    if len(steps) and not (np.all(steps >= -1e-12) or np.all(steps <= 1e-12)):
        raise ProbeContractError("contact boundary must be monotone in time")
    xs = series.xs
    times = series.times[rows]
    v = series.fields["velocity"][rows]
    dx = series.dx

    p = phi.value_grid(times, xs)
    p_x = phi.dx_grid(times, xs)
    dxv = np.gradient(v, dx, axis=1)
    region = xs[None, :] >= f[:, None]

    w_t = time_weights(times)
    bulk = float(np.sum(np.where(region, dxv * p, 0.0) * w_t[:, None]) * dx)
    flux = float(np.sum(np.where(region, v * p_x, 0.0) * w_t[:, None]) * dx)
    return {
        "residual": bulk + flux,
        "scale": abs(bulk) + abs(flux),
        "bulk": bulk,
        "flux": flux,
    }
