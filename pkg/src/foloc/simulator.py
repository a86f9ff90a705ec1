"""Stochastic multi-machine swing-equation simulator with periodic forcing.

Generates ground-truth measurement windows by Euler-Maruyama integration of
classical rotor dynamics under multiplicative load noise, and computes the
natural modes of the linearization so resonance scenarios can be designed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import Diverged, NoEquilibrium, NotAnEquilibrium
from .types import MeasurementWindow, validate_window

#: Any state magnitude beyond this signals a numerically unstable scenario.
MAX_STATE = 1e6

#: Integration prefix discarded before windowing, seconds.
DEFAULT_WARMUP_S = 5.0

_EQ_RESIDUAL_TOL = 1e-10
_EQ_CHECK_TOL = 1e-8
_EQ_MAX_ITER = 50


@dataclass(frozen=True)
class SwitchSpec:
    """Mid-run replacement of a forcing's frequency and amplitude."""

    at_s: float
    frequency_hz: float
    amplitude: float

    def __post_init__(self):
        if self.frequency_hz <= 0 or self.amplitude <= 0:
            raise ValueError("switch frequency and amplitude must be positive")


@dataclass(frozen=True)
class ForcingSpec:
    """One periodic power injection on a single machine.

    ``waveform`` is "sine" or "rectangular"; amplitude is the peak in pu
    power.  The forcing is active on ``[start_s, end_s]`` in simulation time
    (which includes the warm-up prefix) and zero outside.  An optional
    ``switch`` swaps in a new (frequency, amplitude) from ``switch.at_s``
    onward.
    """

    target: str
    waveform: str
    amplitude: float
    frequency_hz: float
    phase: float = 0.0
    start_s: float = 0.0
    end_s: float = math.inf
    switch: SwitchSpec | None = None

    def __post_init__(self):
        if self.waveform not in ("sine", "rectangular"):
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.frequency_hz <= 0:
            raise ValueError("frequency must be positive")
        if self.end_s <= self.start_s:
            raise ValueError("active interval must have positive length")


@dataclass(frozen=True, eq=False)
class GridModel:
    """Reduced multi-machine model.

    Arrays are per machine unless noted: ``inertia`` M (s^2/rad, pu power
    base), ``damping`` D, internal ``emf`` magnitudes E (pu),
    ``mechanical_power`` Pm (pu), and load-noise standard deviations
    ``sigma_load``.  The reduced admittance is stored as r x r magnitude
    (pu) and angle (rad); the diagonal's real part sets both the constant
    self-power term and the load-noise conductance scale.
    """

    labels: tuple[str, ...]
    inertia: np.ndarray
    damping: np.ndarray
    emf: np.ndarray
    mechanical_power: np.ndarray
    admittance_mag: np.ndarray
    admittance_angle: np.ndarray
    sigma_load: np.ndarray

    def __post_init__(self):
        def lock(name, arr, shape):
            out = np.array(arr, dtype=float)
            if out.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {out.shape}")
            out.flags.writeable = False
            object.__setattr__(self, name, out)
            return out

        object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
        r = len(self.labels)
        if r < 2:
            raise ValueError("need at least 2 machines")
        if len(set(self.labels)) != r:
            raise ValueError("machine labels must be unique")
        m = lock("inertia", self.inertia, (r,))
        d = lock("damping", self.damping, (r,))
        e = lock("emf", self.emf, (r,))
        lock("mechanical_power", self.mechanical_power, (r,))
        y = lock("admittance_mag", self.admittance_mag, (r, r))
        phi = lock("admittance_angle", self.admittance_angle, (r, r))
        s = lock("sigma_load", self.sigma_load, (r,))
        if np.any(m <= 0):
            raise ValueError("inertia entries must be positive")
        if np.any(d < 0):
            raise ValueError("damping entries must be non-negative")
        if np.any(e <= 0):
            raise ValueError("emf entries must be positive")
        if np.any(s < 0):
            raise ValueError("sigma_load entries must be non-negative")
        if np.max(np.abs(y - y.T)) > 1e-9:
            raise ValueError("admittance magnitude must be symmetric within 1e-9")
        # Cached derived arrays used in the integration hot path.
        coupling = np.outer(e, e) * y
        np.fill_diagonal(coupling, 0.0)
        coupling.flags.writeable = False
        object.__setattr__(self, "_coupling", coupling)
        self_power = e * e * self.conductance_diag
        self_power.flags.writeable = False
        object.__setattr__(self, "_self_power", self_power)
        noise_scale = e * e * self.conductance_diag * s
        noise_scale.flags.writeable = False
        object.__setattr__(self, "_noise_scale", noise_scale)

    @property
    def r(self) -> int:
        return len(self.labels)

    @property
    def conductance_diag(self) -> np.ndarray:
        """G_ii, the real part of the admittance diagonal."""
        return np.diag(self.admittance_mag) * np.cos(np.diag(self.admittance_angle))

    def machine_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown machine label {label!r}") from None


@dataclass(frozen=True)
class SimState:
    """Rotor angles (rad) and speed deviations (rad/s) at time t."""

    t: float
    delta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        delta = np.array(self.delta, dtype=float)
        omega = np.array(self.omega, dtype=float)
        delta.flags.writeable = False
        omega.flags.writeable = False
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "omega", omega)
        if not (np.all(np.isfinite(delta)) and np.all(np.isfinite(omega))):
            raise ValueError("state entries must be finite")


def electrical_power(delta, model: GridModel) -> np.ndarray:
    """Per-machine electrical power injection (pu) at rotor angles ``delta``.

    P_i = E_i^2 G_ii + sum_{j != i} E_i E_j Y_ij cos(phi_ij - delta_i + delta_j)
    """
    d = np.asarray(delta, dtype=float)
    ang = model.admittance_angle - d[:, None] + d[None, :]
    return model._self_power + (model._coupling * np.cos(ang)).sum(axis=1)


def power_jacobian(delta, model: GridModel) -> np.ndarray:
    """Analytic d(electrical_power)/d(delta), r x r."""
    d = np.asarray(delta, dtype=float)
    s = model._coupling * np.sin(model.admittance_angle - d[:, None] + d[None, :])
    jac = -s
    np.fill_diagonal(jac, s.sum(axis=1))
    return jac


def forcing_value(spec: ForcingSpec, t):
    """Forcing power (pu) at time(s) ``t``; zero outside the active interval."""
    tt = np.asarray(t, dtype=float)
    freq = np.full_like(tt, spec.frequency_hz)
    amp = np.full_like(tt, spec.amplitude)
    if spec.switch is not None:
        past = tt >= spec.switch.at_s
        freq = np.where(past, spec.switch.frequency_hz, freq)
        amp = np.where(past, spec.switch.amplitude, amp)
    raw = np.sin(2.0 * np.pi * freq * tt + spec.phase)
    wave = amp * raw if spec.waveform == "sine" else amp * np.sign(raw)
    out = np.where((tt >= spec.start_s) & (tt <= spec.end_s), wave, 0.0)
    return float(out) if np.isscalar(t) else out


def forcing_vector(model: GridModel, forcings, t: float) -> np.ndarray:
    """Sum of all forcing inputs as an r-vector at time ``t``."""
    u = np.zeros(model.r)
    for spec in forcings:
        u[model.machine_index(spec.target)] += forcing_value(spec, t)
    return u


def _euler_update(delta, omega, t, dt, model, forcings, noise_draw,
                  self_power=None, noise_scale=None):
    """One Euler-Maruyama update evaluated at the old state.

    Optional per-step ``self_power``/``noise_scale`` overrides support
    time-varying conductance.
    """
    d = np.asarray(delta, dtype=float)
    w = np.asarray(omega, dtype=float)
    ang = model.admittance_angle - d[:, None] + d[None, :]
    pe = (model._self_power if self_power is None else self_power) + (
        model._coupling * np.cos(ang)
    ).sum(axis=1)
    u = forcing_vector(model, forcings, t)
    acc = (model.mechanical_power - pe - model.damping * w + u) / model.inertia
    scale = model._noise_scale if noise_scale is None else noise_scale
    new_delta = d + w * dt
    new_omega = w + acc * dt - (scale / model.inertia) * noise_draw * math.sqrt(dt)
    return new_delta, new_omega


def step(state: SimState, dt: float, model: GridModel, forcings,
         noise_draw) -> SimState:
    """Advance one Euler-Maruyama step of the stochastic swing equations.

    delta+ = delta + omega*dt;
    omega+ = omega + M^-1 (Pm - Pe(delta) - D omega + u(t)) dt
             - M^-1 E^2 G Sigma * noise_draw * sqrt(dt).
    Raises Diverged when any state magnitude exceeds ``MAX_STATE``.
    """
    if not 0 < dt <= 1e-2:
        raise ValueError("dt must be in (0, 1e-2] seconds")
    draw = np.asarray(noise_draw, dtype=float)
    if draw.shape != (model.r,):
        raise ValueError(f"noise_draw must have shape ({model.r},)")
    new_delta, new_omega = _euler_update(
        state.delta, state.omega, state.t, dt, model, forcings, draw
    )
    if max(np.max(np.abs(new_delta)), np.max(np.abs(new_omega))) > MAX_STATE:
        raise Diverged(f"state magnitude exceeded {MAX_STATE:g} at t={state.t:.3f}s")
    return SimState(state.t + dt, new_delta, new_omega)


def solve_equilibrium(model: GridModel, start=None) -> np.ndarray:
    """Newton-solve Pm - Pe(delta) = 0 with machine 1's angle as reference.

    Returns angles with delta[0] = 0 and power-balance residual below
    1e-10 in infinity norm; raises NoEquilibrium after 50 iterations.
    """
    delta = np.zeros(model.r) if start is None else np.array(start, dtype=float)
    delta = delta - delta[0]
    for _ in range(_EQ_MAX_ITER):
        resid = model.mechanical_power - electrical_power(delta, model)
        if np.max(np.abs(resid)) < _EQ_RESIDUAL_TOL:
            delta.flags.writeable = False
            return delta
        # d(resid)/d(delta) = -dPe/ddelta; reference angle stays fixed, so the
        # consistent overdetermined system is solved in the least-squares sense.
        jac = -power_jacobian(delta, model)[:, 1:]
        update, *_ = np.linalg.lstsq(jac, -resid, rcond=None)
        delta[1:] += update
    raise NoEquilibrium(
        f"no convergence after {_EQ_MAX_ITER} Newton iterations "
        f"(residual {np.max(np.abs(resid)):.3e})"
    )


def linearized_state_matrix(model: GridModel, delta) -> np.ndarray:
    """2r x 2r state matrix [[0, I], [-M^-1 dPe/ddelta, -M^-1 D]]."""
    r = model.r
    minv = 1.0 / model.inertia
    a = np.zeros((2 * r, 2 * r))
    a[:r, r:] = np.eye(r)
    a[r:, :r] = -minv[:, None] * power_jacobian(delta, model)
    a[r:, r:] = -np.diag(minv * model.damping)
    return a


def natural_modes(model: GridModel, equilibrium_delta) -> list[tuple[float, float]]:
    """Oscillatory eigenpairs of the linearization at an equilibrium.

    Returns (frequency Hz, damping ratio) per conjugate pair sigma +/- j*w,
    as (w/2pi, -sigma/sqrt(sigma^2 + w^2)), sorted by frequency.  Raises
    NotAnEquilibrium when the power-balance residual exceeds 1e-8.
    """
    delta = np.asarray(equilibrium_delta, dtype=float)
    resid = model.mechanical_power - electrical_power(delta, model)
    if np.max(np.abs(resid)) > _EQ_CHECK_TOL:
        raise NotAnEquilibrium(
            f"power-balance residual {np.max(np.abs(resid)):.3e} > {_EQ_CHECK_TOL:g}"
        )
    eigvals = np.linalg.eigvals(linearized_state_matrix(model, delta))
    modes = []
    for lam in eigvals:
        if lam.imag > 1e-9:
            mag = abs(lam)
            modes.append((lam.imag / (2.0 * np.pi), -lam.real / mag))
    modes.sort(key=lambda fz: fz[0])
    return modes


def _resolve_internal_dt(internal_dt, output_rate_hz):
    """Steps per output sample; default snaps to ~1 ms on the output grid."""
    if internal_dt is None:
        per = max(1, math.ceil(1.0 / (output_rate_hz * 1e-3)))
        return 1.0 / (output_rate_hz * per), per
    if not 0 < internal_dt <= 1e-2:
        raise ValueError("internal_dt must be in (0, 1e-2] seconds")
    per = 1.0 / (internal_dt * output_rate_hz)
    if abs(per - round(per)) > 1e-9 or round(per) < 1:
        raise ValueError(
            f"output_rate {output_rate_hz} Hz must divide 1/internal_dt evenly"
        )
    return internal_dt, int(round(per))


def simulate(
    model: GridModel,
    forcings,
    duration_s: float,
    output_rate_hz: float,
    seed,
    *,
    internal_dt: float | None = None,
    warmup_s: float = DEFAULT_WARMUP_S,
    initial_delta=None,
    conductance_drift: tuple[float, float] | None = None,
) -> MeasurementWindow:
    """Integrate the stochastic forced swing equations into a window.

    Starts at a supplied or solved equilibrium, discards ``warmup_s`` of
    transient, decimates to ``output_rate_hz`` and mean-centers each channel
    to produce deviations.  The same seed gives bit-identical output.

    ``conductance_drift = (relative_amplitude, frequency_hz)`` applies a slow
    sinusoidal perturbation to the conductance diagonal (staggered phase per
    machine), emulating load power-factor variation; this scales both the
    constant self-power term and the injected noise.
    """
    dt, per_sample = _resolve_internal_dt(internal_dt, output_rate_hz)
    n_out = int(round(duration_s * output_rate_hz))
    if n_out < 4:
        raise ValueError("duration * output_rate must cover at least 4 samples")
    for spec in forcings:
        model.machine_index(spec.target)
        top = spec.frequency_hz if spec.switch is None else max(
            spec.frequency_hz, spec.switch.frequency_hz
        )
        if top >= output_rate_hz / 2:
            raise ValueError(
                f"forcing at {top} Hz is not below the output Nyquist "
                f"{output_rate_hz / 2} Hz"
            )

    if initial_delta is not None:
        delta0 = np.asarray(initial_delta, dtype=float)
        resid = model.mechanical_power - electrical_power(delta0, model)
        if np.max(np.abs(resid)) > _EQ_CHECK_TOL:
            delta0 = solve_equilibrium(model, start=delta0)
    else:
        delta0 = solve_equilibrium(model)

    warm_steps = int(round(warmup_s * output_rate_hz)) * per_sample
    total_steps = warm_steps + (n_out - 1) * per_sample
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((total_steps, model.r))

    drift_mult = None
    if conductance_drift is not None:
        amp, f_drift = conductance_drift
        phases = 2.0 * np.pi * np.arange(model.r) / model.r
        times = np.arange(total_steps) * dt
        drift_mult = 1.0 + amp * np.sin(
            2.0 * np.pi * f_drift * times[:, None] + phases[None, :]
        )

    delta = delta0.copy()
    omega = np.zeros(model.r)
    angles = np.empty((n_out, model.r))
    speeds = np.empty((n_out, model.r))
    sample = 0
    for k in range(total_steps + 1):
        if k >= warm_steps and (k - warm_steps) % per_sample == 0:
            if max(np.max(np.abs(delta)), np.max(np.abs(omega))) > MAX_STATE:
                raise Diverged(
                    f"state magnitude exceeded {MAX_STATE:g} at t={k * dt:.3f}s"
                )
            angles[sample] = delta
            speeds[sample] = omega
            sample += 1
        if k == total_steps:
            break
        if drift_mult is None:
            delta, omega = _euler_update(
                delta, omega, k * dt, dt, model, forcings, draws[k]
            )
        else:
            g = drift_mult[k]
            delta, omega = _euler_update(
                delta, omega, k * dt, dt, model, forcings, draws[k],
                self_power=model._self_power * g,
                noise_scale=model._noise_scale * g,
            )

    angles -= angles.mean(axis=0)
    speeds -= speeds.mean(axis=0)
    return validate_window(
        angles,
        speeds,
        output_rate_hz,
        labels=model.labels,
        timestamps=np.arange(n_out) / float(output_rate_hz),
    )
