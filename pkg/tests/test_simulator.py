import numpy as np
import pytest

from foloc.errors import Diverged, NoEquilibrium, NotAnEquilibrium
from foloc.simulator import (
    ForcingSpec,
    GridModel,
    SimState,
    SwitchSpec,
    electrical_power,
    forcing_value,
    linearized_state_matrix,
    natural_modes,
    power_jacobian,
    simulate,
    solve_equilibrium,
    step,
)
from gridfixtures import noisy_two_machine, small_model, two_area_model, with_sigma
from oracles import fourier_sine_coefficient


# ---------------------------------------------------------------- model


def test_model_validation():
    with pytest.raises(ValueError):
        small_model(damping=-0.1)
    bad = np.array([[0.15, 1.0], [1.1, 0.15]])  # asymmetric magnitude
    with pytest.raises(ValueError):
        GridModel(("A", "B"), [0.1, 0.1], [0.1, 0.1], [1, 1], [0, 0],
                  bad, np.zeros((2, 2)), [0, 0])
    with pytest.raises(ValueError):
        GridModel(("A", "B"), [0.0, 0.1], [0.1, 0.1], [1, 1], [0, 0],
                  np.zeros((2, 2)), np.zeros((2, 2)), [0, 0])


# ------------------------------------------------------ electrical power


def test_electrical_power_pure_susceptance_zero():
    """cos(90 deg) = 0 at aligned angles."""
    model = small_model()
    pe = electrical_power(np.zeros(2), model)
    assert pe == pytest.approx([0.0, 0.0], abs=1e-15)


def test_electrical_power_hand_evaluated():
    """phi = pi/2 turns the coupling cosine into sin of the angle gap."""
    model = small_model()
    pe = electrical_power(np.array([0.1, -0.1]), model)
    assert pe[0] == pytest.approx(np.sin(0.2), abs=1e-15)
    assert pe[1] == pytest.approx(-np.sin(0.2), abs=1e-15)


def test_electrical_power_symmetry_swap():
    model = small_model()
    d = np.array([0.07, -0.03])
    pe = electrical_power(d, model)
    swapped = electrical_power(d[::-1], model)
    assert pe[0] == pytest.approx(swapped[1], abs=1e-15)
    assert pe[1] == pytest.approx(swapped[0], abs=1e-15)


# ------------------------------------------------------------- forcing


def test_forcing_sine_at_zero():
    spec = ForcingSpec("A", "sine", 1.0, 0.5)
    assert forcing_value(spec, 0.0) == 0.0


def test_forcing_rectangular_quarter_period():
    amp = 0.7
    spec = ForcingSpec("A", "rectangular", amp, 0.2)
    assert forcing_value(spec, 1.25) == pytest.approx(amp)  # quarter of 5 s
    assert forcing_value(spec, 3.75) == pytest.approx(-amp)


def test_forcing_outside_interval_zero():
    spec = ForcingSpec("A", "sine", 1.0, 0.5, start_s=10.0, end_s=20.0)
    assert forcing_value(spec, 5.0) == 0.0
    assert forcing_value(spec, 25.0) == 0.0
    assert forcing_value(spec, 15.1) != 0.0


def test_forcing_switch_replaces_frequency_and_amplitude():
    spec = ForcingSpec("A", "sine", 1.0, 0.5, switch=SwitchSpec(10.0, 0.8, 2.0))
    t = 12.3
    assert forcing_value(spec, t) == pytest.approx(2.0 * np.sin(2 * np.pi * 0.8 * t))
    t = 7.7
    assert forcing_value(spec, t) == pytest.approx(np.sin(2 * np.pi * 0.5 * t))


def test_rectangular_fourier_only_odd_harmonics():
    """Quadrature oracle: 4A/(k*pi) on odd k, nothing on even k."""
    amp, freq = 0.8, 0.2
    spec = ForcingSpec("A", "rectangular", amp, freq)
    period = 1.0 / freq
    wave = lambda t: forcing_value(spec, float(t))
    a1, b1 = fourier_sine_coefficient(wave, period, 1)
    assert a1 == pytest.approx(4 * amp / np.pi, abs=1e-10)
    assert abs(b1) < 1e-10
    for k in (2, 4, 6):
        ak, bk = fourier_sine_coefficient(wave, period, k)
        assert abs(ak) < 1e-10 and abs(bk) < 1e-10
    a3, _ = fourier_sine_coefficient(wave, period, 3)
    assert a3 == pytest.approx(4 * amp / (3 * np.pi), abs=1e-10)


# ---------------------------------------------------------------- step


def test_step_fixed_point():
    base = small_model()
    # Pm set to the computed Pe so the balance is exact in float arithmetic
    model = GridModel(base.labels, base.inertia, base.damping, base.emf,
                      electrical_power(np.zeros(2), base), base.admittance_mag,
                      base.admittance_angle, base.sigma_load)
    state = SimState(0.0, np.zeros(2), np.zeros(2))
    out = step(state, 1e-3, model, [], np.zeros(2))
    assert out.t == pytest.approx(1e-3)
    assert np.array_equal(out.delta, state.delta)
    assert np.array_equal(out.omega, state.omega)


def test_step_matches_hand_computed_update():
    """Spreadsheet-style evaluation of one update."""
    model = noisy_two_machine(sigma=0.3, damping=0.05)
    delta = np.array([0.11, -0.04])
    omega = np.array([0.02, -0.01])
    draw = np.array([0.5, -1.2])
    dt = 2e-3
    fo = ForcingSpec("B", "sine", 0.4, 0.7, phase=0.3)
    out = step(SimState(1.0, delta, omega), dt, model, [fo], draw)

    pe = 0.2 + np.array([np.sin(delta[0] - delta[1]), np.sin(delta[1] - delta[0])])
    u = np.array([0.0, 0.4 * np.sin(2 * np.pi * 0.7 * 1.0 + 0.3)])
    m = np.array([0.1, 0.1])
    acc = (model.mechanical_power - pe - 0.05 * omega + u) / m
    noise = (1.0 * 0.2 * 0.3 / m) * draw * np.sqrt(dt)
    assert out.delta == pytest.approx(delta + omega * dt, abs=1e-15)
    assert out.omega == pytest.approx(omega + acc * dt - noise, abs=1e-15)


def test_step_noise_scaling_exact():
    """Doubling sigma_load doubles the injected increment exactly."""
    base = GridModel(("A", "B"), [0.1, 0.2], [0.0, 0.0], [1.0, 1.0], [0.2, 0.2],
                     np.diag([0.2, 0.2]), np.zeros((2, 2)), [0.05, 0.05])
    doubled = with_sigma(base, 0.1)
    state = SimState(0.0, np.zeros(2), np.zeros(2))
    draw = np.array([1.3, -0.4])
    inc1 = step(state, 1e-3, base, [], draw).omega
    inc2 = step(state, 1e-3, doubled, [], draw).omega
    assert np.array_equal(inc2, 2.0 * inc1)


def test_step_rejects_bad_dt():
    model = small_model()
    state = SimState(0.0, np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        step(state, 0.02, model, [], np.zeros(2))
    with pytest.raises(ValueError):
        step(state, 0.0, model, [], np.zeros(2))


def test_step_diverged():
    model = small_model()
    state = SimState(0.0, np.array([0.0, 0.0]), np.array([2e9, 0.0]))
    with pytest.raises(ValueError):
        SimState(0.0, np.array([np.inf, 0.0]), np.zeros(2))
    with pytest.raises(Diverged):
        step(SimState(0.0, np.zeros(2), np.array([2e6, 0.0])), 1e-2, model, [],
             np.zeros(2))


# --------------------------------------------------------- equilibrium


def test_equilibrium_closed_form_two_machine():
    """delta gap matches arcsin for a small transfer."""
    p = 0.3
    model = small_model()
    model = GridModel(model.labels, model.inertia, model.damping, model.emf,
                      [p, -p], model.admittance_mag, model.admittance_angle,
                      model.sigma_load)
    delta = solve_equilibrium(model)
    assert delta[0] == 0.0
    assert delta[1] - delta[0] == pytest.approx(-np.arcsin(p), abs=1e-10)


def test_equilibrium_trivial_zero():
    model = small_model()
    assert solve_equilibrium(model) == pytest.approx(np.zeros(2), abs=1e-12)


def test_equilibrium_infeasible():
    model = small_model()
    model = GridModel(model.labels, model.inertia, model.damping, model.emf,
                      [1.5, -1.5], model.admittance_mag, model.admittance_angle,
                      model.sigma_load)  # beyond the 1.0 pu transfer limit
    with pytest.raises(NoEquilibrium):
        solve_equilibrium(model)


# -------------------------------------------------------------- modes


def test_two_machine_analytic_mode_frequency():
    """Identical machines, pure-susceptance tie, D = 0:
    f = sqrt(2*K/M)/(2*pi) with K = E^2 Y cos(d1 - d2 - phi + pi/2)."""
    model = small_model(damping=0.0)
    modes = natural_modes(model, np.zeros(2))
    assert len(modes) == 1
    k = 1.0 * np.cos(0.0 - np.pi / 2 + np.pi / 2)
    f_expected = np.sqrt(2 * k / 0.1) / (2 * np.pi)
    assert modes[0][0] == pytest.approx(f_expected, abs=1e-9)
    assert modes[0][1] == pytest.approx(0.0, abs=1e-12)


def test_modes_rejects_non_equilibrium():
    model = small_model()
    with pytest.raises(NotAnEquilibrium):
        natural_modes(model, np.array([0.4, -0.4]))


def test_power_jacobian_vs_finite_differences():
    model, delta_star = two_area_model()
    jac = power_jacobian(delta_star, model)
    eps = 1e-6
    fd = np.zeros_like(jac)
    for k in range(model.r):
        up, dn = delta_star.copy(), delta_star.copy()
        up[k] += eps
        dn[k] -= eps
        fd[:, k] = (electrical_power(up, model) - electrical_power(dn, model)) / (2 * eps)
    assert np.max(np.abs(jac - fd)) < 1e-6


def test_damping_zero_gives_zero_ratios():
    model, delta_star = two_area_model()
    undamped = GridModel(model.labels, model.inertia, np.zeros(model.r), model.emf,
                         model.mechanical_power, model.admittance_mag,
                         model.admittance_angle, model.sigma_load)
    for _, ratio in natural_modes(undamped, delta_star):
        assert abs(ratio) < 1e-8  # eig noise on a 20x20 nonsymmetric matrix


# ------------------------------------------------------------- simulate


def test_simulate_zero_noise_zero_forcing_is_flat():
    model = small_model()
    win = simulate(model, [], 10.0, 30.0, seed=0)
    assert np.max(np.abs(win.angle_cols)) < 1e-9
    assert np.max(np.abs(win.speed_cols)) < 1e-9


def test_simulate_seed_determinism():
    model = noisy_two_machine(sigma=0.05)
    w1 = simulate(model, [], 8.0, 30.0, seed=42)
    w2 = simulate(model, [], 8.0, 30.0, seed=42)
    assert w1 == w2
    w3 = simulate(model, [], 8.0, 30.0, seed=43)
    assert w3 != w1


def test_simulate_forced_spectrum_peaks_at_forcing_frequency():
    model = noisy_two_machine(sigma=0.01, damping=0.08)
    fo = ForcingSpec("B", "sine", 0.05, 0.5)
    win = simulate(model, [fo], 40.0, 30.0, seed=7)
    from foloc.spectrum import amplitude_spectrum

    spec = amplitude_spectrum(win.speed_cols[:, 1], 30.0)
    peak = spec.frequencies[np.argmax(spec.amplitudes[1:]) + 1]
    assert peak == pytest.approx(0.5, abs=0.025)


def test_simulate_output_grid_constraints():
    model = small_model()
    with pytest.raises(ValueError):
        simulate(model, [], 0.05, 30.0, seed=0)  # under 4 samples
    with pytest.raises(ValueError):
        simulate(model, [], 10.0, 30.0, seed=0, internal_dt=1e-3)  # 30 * 1000


def test_simulate_nyquist_guard():
    model = small_model()
    with pytest.raises(ValueError):
        simulate(model, [ForcingSpec("A", "sine", 0.1, 16.0)], 10.0, 30.0, seed=0)


def test_simulate_mean_centered_output():
    model = noisy_two_machine(sigma=0.05)
    win = simulate(model, [], 8.0, 30.0, seed=3)
    assert win.mean_centered


def test_fixed_point_invariant_long_run():
    """No noise, no forcing: the state stays on the equilibrium."""
    model, delta_star = two_area_model()
    quiet = with_sigma(model, 0.0)
    state = SimState(0.0, delta_star, np.zeros(model.r))
    dt = 1e-3
    for _ in range(2000):
        state = step(state, dt, quiet, [], np.zeros(model.r))
    assert np.max(np.abs(state.delta - delta_star)) < 1e-9
    assert np.max(np.abs(state.omega)) < 1e-9


def test_linearization_consistency_refinement():
    """One nonlinear step vs one linearized step: error is O(eps^2)."""
    model, delta_star = two_area_model()
    quiet = with_sigma(model, 0.0)
    a = linearized_state_matrix(quiet, delta_star)
    rng = np.random.default_rng(11)
    direction = rng.standard_normal(2 * model.r)
    direction /= np.linalg.norm(direction)
    dt = 1e-3
    errs = []
    eps_values = [1e-4, 1e-5, 1e-6]
    for eps in eps_values:
        x = eps * direction
        delta = delta_star + x[: model.r]
        omega = x[model.r:]
        nl = step(SimState(0.0, delta, omega), dt, quiet, [], np.zeros(model.r))
        lin = x + dt * (a @ x)
        nl_dev = np.concatenate([nl.delta - delta_star, nl.omega])
        errs.append(np.linalg.norm(nl_dev - lin))
    slope = np.polyfit(np.log(eps_values), np.log(errs), 1)[0]
    assert slope >= 1.9


def test_conductance_drift_runs_and_differs():
    model = noisy_two_machine(sigma=0.02)
    base = simulate(model, [], 8.0, 30.0, seed=5)
    drifted = simulate(model, [], 8.0, 30.0, seed=5, conductance_drift=(0.05, 0.05))
    assert base != drifted
