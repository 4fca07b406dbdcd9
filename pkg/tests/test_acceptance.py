"""Acceptance suite: one test per published criterion.

Each test prints a single "CRITERION n (<name>): PASS/FAIL" line outside
pytest's capture so the verdicts appear in the logged run output.
"""

import math
from contextlib import contextmanager

import numpy as np
import pytest

from cvteleport.algebra import (
    Orientation,
    Symbol,
    SymbolKind,
    add_squeezed_mode,
    add_vacuum_mode,
    apply_beamsplitter,
    apply_cz,
    apply_phase_rotation,
    check_symplectic,
    new_state,
    noise_budget,
)
from cvteleport.algebra import LinearForm
from cvteleport.montecarlo import canonical_validation_set, run_shots, \
    validate_against_exact
from cvteleport.protocols import (
    HYBRID_OPTICAL_UNIT_GAIN_R,
    OpticalCzSpec,
    build_circuit,
    build_optical_cz,
    crossover_R,
    teleport_bs,
    teleport_czcz,
    teleport_czcz_optical,
    teleport_hybrid,
    teleport_hybrid_optical,
)

SQRT2 = math.sqrt(2.0)
V0 = 0.25


@contextmanager
def criterion(capfd, number: int, name: str):
    verdict = "PASS"
    try:
        yield
    except Exception:
        verdict = "FAIL"
        raise
    finally:
        with capfd.disabled():
            print(f"CRITERION {number} ({name}): {verdict}", flush=True)


def x0(mode_id):
    return Symbol(SymbolKind.VACUUM_X, mode_id)


def y0(mode_id):
    return Symbol(SymbolKind.VACUUM_Y, mode_id)


def test_criterion_1_beamsplitter_reference(capfd):
    with criterion(capfd, 1, "beamsplitter scheme error level"):
        for r in (0.0, 0.5, 1.0, 2.0):
            report = teleport_bs(r)
            assert abs(report.mse_x - 2.0) <= 1e-10
            assert abs(report.mse_y - 2.0) <= 1e-10
            scale = math.exp(-r)
            assert report.noise_x.symbols() == (x0(2),)
            assert abs(report.noise_x.coefficient(x0(2))
                       + SQRT2 * scale) <= 1e-10
            assert report.noise_y.symbols() == (y0(1),)
            assert abs(report.noise_y.coefficient(y0(1))
                       - SQRT2 * scale) <= 1e-10


def test_criterion_2_czcz_weights(capfd):
    with criterion(capfd, 2, "two-CZ scheme weight scaling"):
        unit = teleport_czcz(1.0, 1.0, -1.0)
        assert abs(unit.mse_x - 1.0) <= 1e-10
        assert abs(unit.mse_y - 1.0) <= 1e-10
        for g in (2.0, 5.0, 10.0):
            report = teleport_czcz(1.0, g, -g)
            assert abs(report.mse_x * g * g - 1.0) <= 1e-10
            assert abs(report.mse_y - 1.0) <= 1e-10


def _hybrid_gain_oracle(g1, theta1, theta2):
    """Signal-gain matrix recomputed from the printed closed form."""
    tm = theta1 - theta2
    tp = theta1 + theta2
    return (1.0 / math.sin(tm)) * np.array([
        [-(math.cos(tm) + math.cos(tp)) / g1, -math.sin(tp) / g1],
        [g1 * math.sin(tp), g1 * (math.cos(tm) - math.cos(tp))],
    ])


def test_criterion_3_hybrid_gain_matrix(capfd):
    with criterion(capfd, 3, "hybrid scheme signal-gain matrix"):
        g1 = 1.3
        theta1_grid = np.linspace(-1.2, 1.2, 5)
        theta2_grid = np.linspace(-1.45, 0.95, 5)
        checked = 0
        for theta1 in theta1_grid:
            for theta2 in theta2_grid:
                assert abs(math.sin(theta1 - theta2)) > 0.05
                gain = teleport_hybrid(1.0, g1, float(theta1),
                                       float(theta2)).signal_gain
                oracle = _hybrid_gain_oracle(g1, float(theta1), float(theta2))
                assert np.max(np.abs(gain - oracle)) <= 1e-10
                checked += 1
        assert checked == 25
        for g in (0.5, 1.0, 2.0):
            report = teleport_hybrid(1.0, g)
            assert np.max(np.abs(report.signal_gain
                                 - np.diag([1.0 / g, g]))) <= 1e-10
            assert report.is_teleportation == (g == 1.0)


def _gate_oracle(reflectivity, r):
    """Gate signal matrix and per-row noise budgets from the closed form."""
    g = (1.0 - reflectivity) / math.sqrt(reflectivity)
    nu2 = (1.0 - reflectivity) / (1.0 + reflectivity)
    matrix = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, g, 1.0, 0.0],
        [g, 0.0, 0.0, 1.0],
    ])
    budgets = (nu2 * math.exp(-2.0 * r) * V0
               * np.array([1.0, 1.0, reflectivity, reflectivity]))
    return matrix, budgets


def test_criterion_4_optical_gate_construction(capfd):
    with criterion(capfd, 4, "optical CZ gate assembly"):
        for reflectivity in (0.1, 0.25, 0.5, 0.75):
            spec = OpticalCzSpec(reflectivity=reflectivity,
                                 ancilla_squeezing=1.0)
            state = new_state()
            p1 = add_vacuum_mode(state)
            p2 = add_vacuum_mode(state)
            build_optical_cz(state, p1, p2, spec)
            basis = (x0(p1), x0(p2), y0(p1), y0(p2))
            m1, m2 = state.modes[p1], state.modes[p2]
            rows = (m1.x, m2.x, m1.y, m2.y)
            signal = np.array([[row.coefficient(s) for s in basis]
                               for row in rows])
            budgets = np.array([
                noise_budget(row.without(basis), state.variances)
                for row in rows])
            matrix, want_budgets = _gate_oracle(reflectivity, 1.0)
            assert np.max(np.abs(signal - matrix)) <= 1e-10
            assert np.max(np.abs(budgets - want_budgets)) <= 1e-10
            assert check_symplectic(state)


def test_criterion_5_optical_czcz_errors(capfd):
    with criterion(capfd, 5, "two-gate optical error curves"):
        for reflectivity in np.linspace(0.01, 0.9, 50):
            big_r = float(reflectivity)
            report = teleport_czcz_optical(1.0, big_r)
            want_x = (1.0 + (2.0 - big_r) * big_r ** 2) / (
                (1.0 - big_r) ** 2 * (1.0 + big_r))
            want_y = (1.0 + 3.0 * big_r - 2.0 * big_r ** 2) / (1.0 + big_r)
            assert abs(report.mse_x - want_x) <= 1e-10
            assert abs(report.mse_y - want_y) <= 1e-10
            assert report.mse_y < 2.0
        assert abs(crossover_R(2.0) - 0.33) <= 0.01


def test_criterion_6_optical_hybrid_point(capfd):
    with criterion(capfd, 6, "optical hybrid unit-gain point"):
        report = teleport_hybrid_optical(1.0, HYBRID_OPTICAL_UNIT_GAIN_R)
        assert report.is_teleportation
        assert abs(report.mse_x - 2.171) <= 0.001
        assert abs(report.mse_y - 1.065) <= 0.001
        root5 = math.sqrt(5.0)
        assert report.mse_x == pytest.approx(
            (3.0 * root5 / 10.0) * (1.0 + root5), rel=1e-12)
        assert report.mse_y == pytest.approx(
            (root5 / 10.0) * (7.0 - root5), rel=1e-12)


def test_criterion_7_monte_carlo_agreement(capfd):
    with criterion(capfd, 7, "shot-based cross-check"):
        for config in canonical_validation_set(n_shots=1_000_000, seed=12345):
            outcome = validate_against_exact(config)
            assert outcome.passed, (config.protocol, outcome)
            assert max(outcome.z_scores) <= 3.0
            assert max(outcome.rel_stderr) < 0.01
        repeat = canonical_validation_set(n_shots=200_000, seed=7)[0]
        first, second = run_shots(repeat), run_shots(repeat)
        assert first.mse_x == second.mse_x
        assert first.mse_y == second.mse_y
        assert first.stderr_x == second.stderr_x
        assert np.array_equal(first.signal_gain_est, second.signal_gain_est)


def _random_sequence_state(rng):
    n_modes = int(rng.integers(2, 7))
    state = new_state()
    ids = []
    for _ in range(n_modes):
        orientation = (Orientation.Y_SQUEEZED if rng.random() < 0.5
                       else Orientation.X_SQUEEZED)
        ids.append(add_squeezed_mode(state, float(rng.uniform(0.0, 2.0)),
                                     orientation))
    for _ in range(int(rng.integers(1, 51))):
        kind = rng.integers(0, 3)
        if kind == 0:
            apply_phase_rotation(state, ids[int(rng.integers(n_modes))],
                                 float(rng.uniform(-math.pi, math.pi)))
        else:
            i, j = rng.choice(n_modes, size=2, replace=False)
            if kind == 1:
                apply_beamsplitter(state, ids[int(i)], ids[int(j)],
                                   float(rng.uniform(0.0, 1.0)))
            else:
                apply_cz(state, ids[int(i)], ids[int(j)],
                         float(rng.uniform(-2.0, 2.0)))
    return state


def test_criterion_8_property_suite(capfd):
    with criterion(capfd, 8, "engine property suite"):
        rng = np.random.default_rng(987654321)
        for _ in range(1000):
            assert check_symplectic(_random_sequence_state(rng))

        for _ in range(50):
            g1 = float(rng.uniform(0.2, 2.5)) * (1 if rng.random() < 0.5
                                                 else -1)
            g2 = float(rng.uniform(0.2, 2.5)) * (1 if rng.random() < 0.5
                                                 else -1)
            build = build_circuit("czcz", {"r": float(rng.uniform(0, 2)),
                                           "g1": g1, "g2": g2})
            out = build.state.modes[build.out_mode]
            for mode_id in (1, 2):
                assert abs(out.x.coefficient(x0(mode_id))) < 1e-12
                assert abs(out.y.coefficient(x0(mode_id))) < 1e-12

        n_samples = 1_000_000
        for _ in range(20):
            n_terms = int(rng.integers(1, 9))
            symbols = [Symbol(SymbolKind.VACUUM_X, k + 1)
                       for k in range(n_terms)]
            coeffs = rng.uniform(-2.0, 2.0, size=n_terms)
            variances = {s: float(rng.uniform(0.05, 1.0)) for s in symbols}
            form = LinearForm(dict(zip(symbols, coeffs)))
            exact = noise_budget(form, variances)
            scales = np.sqrt([variances[s] for s in symbols])
            draws = rng.standard_normal((n_samples, n_terms)) * scales
            samples = draws @ coeffs
            estimate = float(np.mean(samples ** 2))
            stderr = float(np.std(samples ** 2, ddof=1) / math.sqrt(n_samples))
            assert abs(estimate - exact) <= 3.0 * stderr
