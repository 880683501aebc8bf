"""Strang split-step propagators for the four model equations.

Each step alternates the exact linear flow (a Fourier multiplier) with
the exact nonlinear flow (a pointwise phase rotation, since the local
modulus is invariant), so mass is conserved to roundoff per substep.
Non-autonomous coefficients of the lens models are frozen at the
interval midpoint, which preserves second order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envelope import EnvelopeState, TauEnvelope, chevron_state
from .errors import BlowUpError, EnvelopeError, GridError
from .grid import Model, WaveField, edge_density, energy, gradient_norm_sq, lp_norm, mass

MASS_DRIFT_TRIP = 1e-8


@dataclass(frozen=True)
class StepPlan:
    """Time-step parameters shared by all steppers."""

    dt: float
    scheme: str = "strang"
    log_floor: float = 1e-12
    potential_midpoint: bool = True

    def __post_init__(self):
        if self.dt == 0 or not math.isfinite(self.dt):
            raise GridError(f"dt must be a nonzero finite real, got {self.dt}")
        if self.scheme not in ("strang", "lie"):
            raise GridError(f"unknown scheme {self.scheme!r}")
        if not (0.0 <= self.log_floor <= 1e-6):
            raise GridError(f"log_floor must lie in [0, 1e-6], got {self.log_floor}")


def power_ratio(rho: np.ndarray, sigma: float) -> np.ndarray:
    """(rho^sigma - 1) / sigma, stably, with the ln(rho) limit at sigma = 0.

    Uses expm1(sigma ln rho)/sigma: the naive form loses all digits by
    cancellation exactly in the small-sigma regime of interest.
    """
    logr = np.log(np.maximum(rho, 1e-300))
    if sigma < 1e-8:
        return logr
    return np.expm1(sigma * logr) / sigma


def _nonlinear_phase(rho: np.ndarray, sigma: float, model: Model,
                     log_floor: float) -> np.ndarray:
    if model is Model.DIRECT or model is Model.DIRECT_LENS:
        return rho**sigma
    if model is Model.LOG:
        return np.log(rho + log_floor)
    if sigma == 0.0:  # rescaled family degenerates to the log branch
        return np.log(rho + log_floor)
    return power_ratio(rho, sigma)


def _split_step(values: np.ndarray, grid, dt: float, phase_fn, kin_coeff: float,
                scheme: str) -> np.ndarray:
    """One split step; phase_fn maps rho to the real potential."""
    def kinetic(v, w):
        return grid.ifft(grid.fft(v) * np.exp((-0.5j * w * kin_coeff) * grid.k_sq))

    if scheme == "lie":
        v = kinetic(values, dt)
        return v * np.exp(-1j * dt * phase_fn(np.abs(v) ** 2))
    v = kinetic(values, 0.5 * dt)
    v = v * np.exp(-1j * dt * phase_fn(np.abs(v) ** 2))
    return kinetic(v, 0.5 * dt)


def _checked(field: WaveField, values: np.ndarray, new_time: float) -> WaveField:
    s = values.sum()
    if not (np.isfinite(s.real) and np.isfinite(s.imag)):
        raise BlowUpError("NaN/Inf after step", time=new_time)
    return field.with_values(values, time=new_time)


def step_direct(field: WaveField, plan: StepPlan, sigma: float | None = None) -> WaveField:
    """One step of i u_t + (1/2) Lap u = |u|^{2 sigma} u."""
    sigma = field.sigma if sigma is None else sigma
    if field.model is not Model.DIRECT:
        raise GridError(f"step_direct needs a Direct-model field, got {field.model}")
    if not sigma > 0:
        raise GridError(f"direct model needs sigma > 0, got {sigma}")
    if field.grid.dim > 2 and sigma >= 2.0 / (field.grid.dim - 2):
        raise GridError("energy-supercritical sigma")
    out = _split_step(field.values, field.grid, plan.dt,
                      lambda rho: _nonlinear_phase(rho, sigma, Model.DIRECT, plan.log_floor),
                      1.0, plan.scheme)
    return _checked(field, out, field.time + plan.dt)


def step_rescaled(field: WaveField, plan: StepPlan, sigma: float | None = None) -> WaveField:
    """One step with nonlinear phase (|u|^{2 sigma} - 1)/sigma; sigma = 0 is rejected."""
    sigma = field.sigma if sigma is None else sigma
    if field.model is not Model.RESCALED:
        raise GridError(f"step_rescaled needs a Rescaled-model field, got {field.model}")
    if not sigma > 0:
        raise GridError("sigma = 0: use step_log for the logarithmic model")
    out = _split_step(field.values, field.grid, plan.dt,
                      lambda rho: power_ratio(rho, sigma), 1.0, plan.scheme)
    return _checked(field, out, field.time + plan.dt)


def step_log(field: WaveField, plan: StepPlan) -> WaveField:
    """One step of the logarithmic model, phase ln(|u|^2 + eps_reg)."""
    if field.model is not Model.LOG:
        raise GridError(f"step_log needs a Log-model field, got {field.model}")
    out = _split_step(field.values, field.grid, plan.dt,
                      lambda rho: np.log(rho + plan.log_floor), 1.0, plan.scheme)
    return _checked(field, out, field.time + plan.dt)


def _lens_coefficients(model: Model, sigma: float, dim: int, env_mid: EnvelopeState):
    """(kinetic coefficient, harmonic coefficient, nonlinear coefficient) at midpoint."""
    tau = env_mid.tau
    if tau <= 0:
        raise EnvelopeError(f"envelope tau must be positive, got {tau}")
    a = dim * sigma
    if model is Model.RESCALED_LENS:
        return 1.0 / tau**2, 0.25 * tau ** (-a), tau ** (-a)
    # direct-lens: i v_t + Lap v/(2<t>^2) = |y|^2 v/(2<t>^2) + <t>^{-d sigma} |v|^{2s} v
    return 1.0 / tau**2, 0.5 / tau**2, tau ** (-a)


def _advance_env(env: EnvelopeState, dt: float) -> EnvelopeState:
    """RK4 the envelope ODE from env.t by dt (a few substeps suffice)."""
    a = env.dim * env.sigma
    t, y, v = env.t, env.tau, env.tau_dot
    nsub = max(1, int(math.ceil(abs(dt) / 1e-3)))
    h = dt / nsub
    for _ in range(nsub):
        def acc(z):
            return 0.5 * z ** (-(a + 1.0))
        k1y, k1v = v, acc(y)
        k2y, k2v = v + 0.5 * h * k1v, acc(y + 0.5 * h * k1y)
        k3y, k3v = v + 0.5 * h * k2v, acc(y + 0.5 * h * k2y)
        k4y, k4v = v + h * k3v, acc(y + h * k3y)
        y += h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0
        v += h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        t += h
    return EnvelopeState(t=t, tau=y, tau_dot=v, sigma=env.sigma, dim=env.dim)


def step_lens(field: WaveField, plan: StepPlan, env: EnvelopeState) -> WaveField:
    """One step of a lens-transformed model with midpoint-frozen coefficients."""
    if field.model not in (Model.RESCALED_LENS, Model.DIRECT_LENS):
        raise GridError(f"step_lens needs a lens-model field, got {field.model}")
    if env.tau <= 0:
        raise EnvelopeError(f"envelope tau must be positive, got {env.tau}")
    if abs(env.t - field.time) > 1e-9 * max(1.0, abs(field.time)):
        raise EnvelopeError(f"envelope time {env.t} inconsistent with field time {field.time}")
    if field.model is Model.DIRECT_LENS:
        env_mid = chevron_state(field.time + 0.5 * plan.dt, field.sigma, field.grid.dim)
    else:
        env_mid = _advance_env(env, 0.5 * plan.dt) if plan.potential_midpoint else env
    kin, harm, nl = _lens_coefficients(field.model, field.sigma, field.grid.dim, env_mid)
    r2 = field.grid.radius_sq
    sigma, model, floor = field.sigma, field.model, plan.log_floor

    def phase(rho):
        return harm * r2 + nl * _nonlinear_phase(rho, sigma, model, floor)

    out = _split_step(field.values, field.grid, plan.dt, phase, kin, plan.scheme)
    return _checked(field, out, field.time + plan.dt)


def free_flow(field: WaveField, dt: float) -> WaveField:
    """Exact free Schrodinger flow e^{i (dt/2) Lap} over dt (linear substep alone)."""
    g = field.grid
    out = g.ifft(g.fft(field.values) * np.exp(-0.5j * dt * g.k_sq))
    return field.with_values(out, time=field.time + dt)


def conservation_row(field: WaveField, envelope: EnvelopeState | None = None) -> dict:
    """Observer row: the standard conserved/monitored quantities."""
    row = {
        "t": field.time,
        "mass": mass(field),
        "energy": energy(field),
        "grad_norm": math.sqrt(gradient_norm_sq(field)),
        "lp_norm": lp_norm(field, 2.0 * field.sigma + 2.0),
        "edge_density": edge_density(field),
    }
    if envelope is not None:
        row["tau"] = envelope.tau
    return row


def evolve(field: WaveField, plan: StepPlan, t_end: float, observers=(),
           observe_dt: float | None = None, envelope: TauEnvelope | None = None,
           per_step_hook=None):
    """Repeatedly step to t_end (trimmed last step lands exactly).

    Returns (final field, list of conservation rows).  Observers are
    callables taking the current field; they fire with the rows.  For
    the rescaled-lens model a TauEnvelope is integrated alongside (one
    is created automatically when starting from t = 0).
    """
    if t_end < field.time:
        raise GridError(f"t_end {t_end} before field time {field.time}")
    lens = field.model in (Model.RESCALED_LENS, Model.DIRECT_LENS)
    env_src = None
    if field.model is Model.RESCALED_LENS:
        env_src = envelope
        if env_src is None:
            if field.time != 0.0:
                raise EnvelopeError("restarting a rescaled-lens run needs its TauEnvelope")
            env_src = TauEnvelope(field.sigma, field.grid.dim)

    def env_at(t):
        if field.model is Model.DIRECT_LENS:
            return chevron_state(t, field.sigma, field.grid.dim)
        return env_src.state(t)

    def observe(f):
        row = conservation_row(f, env_at(f.time) if lens else None)
        log.append(row)
        for obs in observers:
            obs(f)
        return row

    log: list[dict] = []
    if t_end == field.time:
        return field, log

    mass0 = mass(field)
    observe(field)
    next_obs = field.time + observe_dt if observe_dt else math.inf
    current = field
    while current.time < t_end - 1e-12 * max(1.0, abs(t_end)):
        dt = min(plan.dt, t_end - current.time)
        local = plan if dt == plan.dt else StepPlan(dt, plan.scheme, plan.log_floor,
                                                   plan.potential_midpoint)
        if lens:
            current = step_lens(current, local, env_at(current.time))
        elif field.model is Model.DIRECT:
            current = step_direct(current, local)
        elif field.model is Model.RESCALED:
            current = step_rescaled(current, local)
        else:
            current = step_log(current, local)
        if per_step_hook is not None:
            per_step_hook(current)
        if current.time >= next_obs - 1e-12:
            row = observe(current)
            next_obs += observe_dt
            if abs(row["mass"] - mass0) > MASS_DRIFT_TRIP * mass0:
                raise BlowUpError(
                    f"mass drift tripwire at t = {current.time:.6g}", time=current.time)
    row = observe(current)
    if abs(row["mass"] - mass0) > MASS_DRIFT_TRIP * mass0:
        raise BlowUpError(f"mass drift tripwire at t = {current.time:.6g}",
                          time=current.time)
    return current, log
