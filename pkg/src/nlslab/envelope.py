"""Dispersive envelope ODEs and their first integrals.

Two families share one integrator core:

    tau'' = 1 / (2 tau^{a+1}),   tau(0) = 1, tau'(0) = 0,   a = d * sigma
    r''   = alpha / (2 r^{alpha+1}),   r(0) = 1, r'(0) = 0

with first integrals

    (tau')^2 = (1 - tau^{-a}) / a        (a > 0; -> ln(tau) as a -> 0)
    (r')^2   = 1 - r^{-alpha}

Second-order RK4 with fixed step is used up to t = 1e3; beyond that the
monotone first-order reformulation tau' = g(tau) is stepped directly,
which keeps the first integral exact by construction over six decades
of time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EnvelopeError, IntegrationError

RK4_STEP = 1e-3
FIRST_ORDER_AFTER = 1e3


@dataclass(frozen=True)
class EnvelopeState:
    """One (t, tau, tau', sigma, d) sample of the tau family."""

    t: float
    tau: float
    tau_dot: float
    sigma: float
    dim: int

    @property
    def alpha(self) -> float:
        return self.dim * self.sigma


@dataclass(frozen=True)
class RadialState:
    """One (t, r, r') sample of the r_alpha family."""

    t: float
    r: float
    r_dot: float
    alpha: float


def _tau_accel(tau: float, a: float) -> float:
    return 0.5 * tau ** (-(a + 1.0))


def _r_accel(r: float, alpha: float) -> float:
    return 0.5 * alpha * r ** (-(alpha + 1.0))


def _tau_speed(tau: float, a: float) -> float:
    """tau' from the first integral (the a -> 0 limit is sqrt(ln tau))."""
    if a == 0.0:
        return math.sqrt(max(math.log(tau), 0.0))
    return math.sqrt(max((1.0 - tau ** (-a)) / a, 0.0))


def _r_speed(r: float, alpha: float) -> float:
    return math.sqrt(max(1.0 - r ** (-alpha), 0.0))


def first_integral_residual(state) -> float:
    """Residual of the conserved first integral; the module's master test."""
    if isinstance(state, RadialState):
        return state.r_dot**2 - (1.0 - state.r ** (-state.alpha))
    a = state.alpha
    if a == 0.0:
        return state.tau_dot**2 - math.log(state.tau)
    return state.tau_dot**2 - (1.0 - state.tau ** (-a)) / a


class _Integrator:
    """Monotone-time integrator, queried at increasing times."""

    def __init__(self, accel, speed, h=RK4_STEP, first_order_after=FIRST_ORDER_AFTER):
        self._accel = accel
        self._speed = speed
        self._h = h
        self._cut = first_order_after
        self.t = 0.0
        self.y = 1.0
        self.ydot = 0.0

    def advance(self, t: float) -> None:
        if t < self.t - 1e-12:
            raise IntegrationError(f"envelope queried backward: {t} < {self.t}")
        while self.t < t - 1e-15:
            if self.t < self._cut:
                dt = min(self._h, t - self.t, self._cut - self.t)
                self._rk4_second_order(dt)
            else:
                dt = min(max(self._h, 1e-3 * self.t), t - self.t)
                self._rk4_first_order(dt)
        # snap to avoid drift of the time stamp itself
        self.t = max(self.t, t)

    def _rk4_second_order(self, dt: float) -> None:
        if dt <= 0 or not math.isfinite(dt):
            raise IntegrationError("step-size underflow in envelope integration")
        y, v = self.y, self.ydot
        a = self._accel
        k1y, k1v = v, a(y)
        k2y, k2v = v + 0.5 * dt * k1v, a(y + 0.5 * dt * k1y)
        k3y, k3v = v + 0.5 * dt * k2v, a(y + 0.5 * dt * k2y)
        k4y, k4v = v + dt * k3v, a(y + dt * k3y)
        self.y = y + dt * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0
        self.ydot = v + dt * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        self.t += dt

    def _rk4_first_order(self, dt: float) -> None:
        y = self.y
        g = self._speed
        k1 = g(y)
        k2 = g(y + 0.5 * dt * k1)
        k3 = g(y + 0.5 * dt * k2)
        k4 = g(y + dt * k3)
        self.y = y + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        self.ydot = g(self.y)
        self.t += dt


class TauEnvelope:
    """Evaluator for tau_sigma at monotonically increasing times."""

    def __init__(self, sigma: float, dim: int, h: float = RK4_STEP):
        if sigma < 0:
            raise EnvelopeError(f"sigma must be >= 0, got {sigma}")
        self.sigma = float(sigma)
        self.dim = int(dim)
        a = self.dim * self.sigma
        self._core = _Integrator(lambda y: _tau_accel(y, a),
                                 lambda y: _tau_speed(y, a), h=h)

    def state(self, t: float) -> EnvelopeState:
        self._core.advance(t)
        return EnvelopeState(t=self._core.t, tau=self._core.y,
                             tau_dot=self._core.ydot, sigma=self.sigma, dim=self.dim)


def chevron_state(t: float, sigma: float, dim: int) -> EnvelopeState:
    """The closed-form envelope <t> = sqrt(1 + t^2) used by the direct-lens model."""
    tau = math.sqrt(1.0 + t * t)
    return EnvelopeState(t=t, tau=tau, tau_dot=t / tau, sigma=sigma, dim=dim)


def integrate_tau(sigma: float, dim: int, t_grid) -> list[EnvelopeState]:
    """Sample the tau_sigma trajectory on a sorted nonnegative time grid."""
    t_grid = [float(t) for t in t_grid]
    if any(t < 0 for t in t_grid) or any(b < a for a, b in zip(t_grid, t_grid[1:])):
        raise EnvelopeError("t_grid must be sorted and nonnegative")
    env = TauEnvelope(sigma, dim)
    return [env.state(t) for t in t_grid]


def integrate_r(alpha: float, t_grid) -> list[RadialState]:
    """Sample the r_alpha trajectory; alpha must be positive."""
    if not alpha > 0:
        raise EnvelopeError(f"alpha must be positive, got {alpha}")
    t_grid = [float(t) for t in t_grid]
    if any(t < 0 for t in t_grid) or any(b < a for a, b in zip(t_grid, t_grid[1:])):
        raise EnvelopeError("t_grid must be sorted and nonnegative")
    core = _Integrator(lambda y: _r_accel(y, alpha), lambda y: _r_speed(y, alpha))
    out = []
    for t in t_grid:
        core.advance(t)
        out.append(RadialState(t=core.t, r=core.y, r_dot=core.ydot, alpha=alpha))
    return out


def tau_from_r(r_state: RadialState, sigma: float, dim: int = 1) -> EnvelopeState:
    """Exact reparametrization tau_sigma(t) = r_alpha(t / sqrt(alpha)), alpha = d sigma.

    (For d = 1 this is the same as evaluating r at t / sqrt(sigma).)
    """
    if not sigma > 0:
        raise EnvelopeError("tau_from_r needs sigma > 0")
    alpha = r_state.alpha
    if abs(alpha - dim * sigma) > 1e-12:
        raise EnvelopeError(f"alpha {alpha} does not match d*sigma {dim * sigma}")
    root = math.sqrt(alpha)
    return EnvelopeState(t=r_state.t * root, tau=r_state.r,
                         tau_dot=r_state.r_dot / root, sigma=sigma, dim=dim)


def time_change_s(state: EnvelopeState) -> float:
    """Compactified time s_sigma(t) from the closed form via the first integral."""
    a = state.alpha
    if not state.sigma > 0:
        raise EnvelopeError("time change defined for sigma > 0")
    if state.t <= 0 or state.tau <= 1.0:
        raise EnvelopeError("s_sigma(t) is defined for t > 0 only")
    return math.log((1.0 - state.tau ** (-a)) / a) / (4.0 * (1.0 - a))


def time_change_s_limit(sigma: float, dim: int) -> float:
    """Limit of s_sigma(t) as t -> infinity."""
    a = dim * sigma
    return math.log(1.0 / a) / (4.0 * (1.0 - a))


def tau_difference_bound(sigma: float, dim: int, t_max: float,
                         points_per_decade: int = 40) -> dict:
    """Scan sup_t |tau_sigma - tau_0| / (sigma t ln(t+2)^{3/2}) up to t_max."""
    if not (0 < sigma < 1.0 / dim):
        raise EnvelopeError(f"sigma must lie in (0, 1/d), got {sigma}")
    n = max(2, int(points_per_decade * math.log10(max(t_max / 1e-2, 10.0))))
    grid = [1e-2 * (t_max / 1e-2) ** (i / (n - 1)) for i in range(n)]
    tau_s = integrate_tau(sigma, dim, grid)
    tau_0 = integrate_tau(0.0, dim, grid)
    rows = []
    for s, z in zip(tau_s, tau_0):
        t = s.t
        bound = sigma * t * math.log(t + 2.0) ** 1.5
        rows.append((t, s.tau, z.tau, abs(s.tau - z.tau) / bound))
    ratios = [r[3] for r in rows]
    i_max = max(range(len(ratios)), key=ratios.__getitem__)
    return {
        "sigma": sigma,
        "t_max": t_max,
        "sup_ratio": ratios[i_max],
        "t_at_sup": rows[i_max][0],
        "rows": rows,
    }
