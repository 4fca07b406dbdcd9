"""Teleportation protocols and the measurement-induced CZ gate.

Each protocol function builds its circuit with the exact engine from
:mod:`cvteleport.algebra`, solves the feedforward gains that remove the
anti-squeezed resource quadratures from the output, and returns a
:class:`ProtocolReport` separating the transmitted signal from the added
noise.  Mean square errors are quoted in units of e^{-2r} V0, the variance
of a squeezed resource quadrature, so an ideal two-beamsplitter link scores
exactly 2 per quadrature.

The measurement-induced CZ gate (beamsplitter couplers, two squeezed
ancillas, homodyne feedforward) appears twice: :func:`build_optical_cz`
assembles the physical element sequence and verifies it against the
closed-form gate map, while :func:`apply_optical_cz_map` applies that
closed-form map directly, which is how the optical teleportation protocols
are defined here.  The two agree in the signal matrix and in every
per-quadrature noise budget; they differ in the signs the noise carries,
which no observable in this package depends on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    V0,
    CircuitState,
    FeedforwardError,
    LinearForm,
    Mode,
    Orientation,
    Quadrature,
    Symbol,
    SymbolKind,
    add_signal_mode,
    add_squeezed_mode,
    add_vacuum_mode,
    apply_beamsplitter,
    apply_cz,
    apply_feedforward,
    apply_phase_rotation,
    check_symplectic,
    displace_by_record,
    homodyne,
    new_state,
    noise_budget,
    solve_feedforward_gains,
)

TELEPORT_TOL = 1e-10
"""Tolerance for deciding that a signal matrix is diag(+-1, +-1)."""

GATE_MATCH_TOL = 1e-10
"""Tolerance for the built optical gate against its closed-form map."""

BS_REFERENCE_MSE = 2.0
"""Per-quadrature error of the two-beamsplitter scheme, in e^{-2r} V0."""

CROSSOVER_BRACKET = (1e-4, 1.0 - 1e-4)
CROSSOVER_TOL = 1e-6


class ConstructionMismatchError(RuntimeError):
    """The assembled optical gate does not reproduce its closed-form map."""


class NoRootError(ValueError):
    """A requested error-level crossing does not occur on (0, 1)."""


@dataclass(frozen=True)
class OpticalCzSpec:
    """Parameters of the measurement-induced CZ gate.

    Attributes:
        reflectivity: intensity reflectivity R of the coupling
            beamsplitters, strictly inside (0, 1).
        ancilla_squeezing: squeezing parameter of the two ancilla
            oscillators the gate consumes.
    """

    reflectivity: float
    ancilla_squeezing: float

    def __post_init__(self):
        if not 0.0 < self.reflectivity < 1.0:
            raise ValueError(
                f"reflectivity must lie strictly inside (0, 1), got {self.reflectivity}")
        if self.ancilla_squeezing < 0:
            raise ValueError("ancilla squeezing must be non-negative")

    @property
    def effective_weight(self) -> float:
        """Weight g of the realized CZ coupling: (1-R)/sqrt(R)."""
        r = self.reflectivity
        return (1.0 - r) / math.sqrt(r)

    @property
    def noise_scale(self) -> float:
        """Amplitude nu = sqrt((1-R)/(1+R)) of the admixed ancilla noise."""
        r = self.reflectivity
        return math.sqrt((1.0 - r) / (1.0 + r))


@dataclass(frozen=True)
class OpticalCzMap:
    """Closed-form action of the optical CZ gate on two modes.

    ``matrix`` is the 4x4 signal block over (x_1, x_2, y_1, y_2); ``noise``
    holds the coefficients of the two squeezed ancilla vacuum symbols
    (columns: x-squeezed ancilla, y-squeezed ancilla) added to each output
    row, squeezing factor included.
    """

    matrix: np.ndarray
    noise: np.ndarray
    spec: OpticalCzSpec

    def row_budgets(self) -> np.ndarray:
        """Absolute noise variance added to each of (x_1, x_2, y_1, y_2)."""
        return (self.noise ** 2).sum(axis=1) * V0


@dataclass(frozen=True)
class ProtocolReport:
    """Outcome of one protocol run.

    Attributes:
        signal_gain: 2x2 matrix G with (x_out, y_out) = G (x_in, y_in) plus
            noise.
        noise_x / noise_y: output noise as linear forms over the resource
            vacuum symbols (signal terms removed).
        mse_x / mse_y: noise variances in units of e^{-2r} V0.
        is_teleportation: True iff G = diag(+-1, +-1) within TELEPORT_TOL.
        signal_sign: the diagonal signs when is_teleportation, else None.
        variances: absolute variance of every symbol in the noise forms.
        squeezing: resource squeezing parameter r used for the unit scale.
    """

    signal_gain: np.ndarray
    noise_x: LinearForm
    noise_y: LinearForm
    mse_x: float
    mse_y: float
    is_teleportation: bool
    signal_sign: tuple[int, int] | None
    variances: dict[Symbol, float]
    squeezing: float

    @property
    def units_scale(self) -> float:
        """Absolute variance of one error unit: e^{-2r} V0."""
        return math.exp(-2.0 * self.squeezing) * V0


@dataclass
class CircuitBuild:
    """A protocol circuit with its solved feedforward, for reuse by the
    shot-based cross-check."""

    state: CircuitState
    out_mode: int
    pre_x: LinearForm
    pre_y: LinearForm
    gains: dict[tuple[int, Quadrature], float]
    report: ProtocolReport


_SIG_X = Symbol(SymbolKind.SIGNAL_X)
_SIG_Y = Symbol(SymbolKind.SIGNAL_Y)


def _make_report(state: CircuitState, out_mode: int, r: float) -> ProtocolReport:
    """Split an output mode into signal matrix and noise forms."""
    mode = state.modes[out_mode]
    gain = np.array([
        [mode.x.coefficient(_SIG_X), mode.x.coefficient(_SIG_Y)],
        [mode.y.coefficient(_SIG_X), mode.y.coefficient(_SIG_Y)],
    ])
    noise_x = mode.x.without((_SIG_X, _SIG_Y))
    noise_y = mode.y.without((_SIG_X, _SIG_Y))
    unit = math.exp(-2.0 * r) * V0
    mse_x = noise_budget(noise_x, state.variances) / unit
    mse_y = noise_budget(noise_y, state.variances) / unit
    diag_ok = (abs(abs(gain[0, 0]) - 1.0) <= TELEPORT_TOL
               and abs(abs(gain[1, 1]) - 1.0) <= TELEPORT_TOL)
    off_ok = abs(gain[0, 1]) <= TELEPORT_TOL and abs(gain[1, 0]) <= TELEPORT_TOL
    is_tp = bool(diag_ok and off_ok)
    sign = (int(math.copysign(1.0, gain[0, 0])),
            int(math.copysign(1.0, gain[1, 1]))) if is_tp else None
    variances = {s: state.variances[s]
                 for form in (noise_x, noise_y) for s in form.symbols()}
    return ProtocolReport(
        signal_gain=gain, noise_x=noise_x, noise_y=noise_y,
        mse_x=mse_x, mse_y=mse_y, is_teleportation=is_tp,
        signal_sign=sign, variances=variances, squeezing=r,
    )


def _finish(state: CircuitState, out_mode: int, r: float,
            targets) -> CircuitBuild:
    """Solve feedforward for the output mode, apply it, build the report."""
    mode = state.modes[out_mode]
    pre_x, pre_y = mode.x, mode.y
    gains = solve_feedforward_gains(state, out_mode, targets)
    apply_feedforward(state, out_mode, gains)
    if not check_symplectic(state):
        raise RuntimeError("output state lost canonical commutators")
    report = _make_report(state, out_mode, r)
    return CircuitBuild(state=state, out_mode=out_mode,
                        pre_x=pre_x, pre_y=pre_y, gains=gains, report=report)


def _require_squeezing(r: float) -> None:
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")


# ---------------------------------------------------------------------------
# Reference protocol: two beamsplitters
# ---------------------------------------------------------------------------

def _build_teleport_bs(r: float) -> CircuitBuild:
    _require_squeezing(r)
    state = new_state()
    m1 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    m2 = add_squeezed_mode(state, r, Orientation.X_SQUEEZED)
    apply_beamsplitter(state, m1, m2, 0.5)
    sig = add_signal_mode(state)
    apply_beamsplitter(state, sig, m1, 0.5)
    homodyne(state, m1, 0.0)            # x on the difference port
    homodyne(state, sig, math.pi / 2)   # y on the sum port
    targets = (Symbol(SymbolKind.VACUUM_X, m1), Symbol(SymbolKind.VACUUM_Y, m2))
    build = _finish(state, m2, r, targets)
    for g in build.gains.values():
        if g != 0.0 and abs(abs(g) - math.sqrt(2.0)) > 1e-10:
            raise RuntimeError(f"beamsplitter feedforward gain {g} != sqrt(2)")
    return build


def teleport_bs(r: float) -> ProtocolReport:
    """Teleport through an EPR pair made by mixing two squeezed modes.

    The output reproduces the input with unit gain and picks up sqrt(2)
    times one squeezed quadrature per output quadrature, so
    mse_x = mse_y = 2 in units of e^{-2r} V0.
    """
    return _build_teleport_bs(r).report


# ---------------------------------------------------------------------------
# Two CZ couplings
# ---------------------------------------------------------------------------

def _build_teleport_czcz(r: float, g1: float, g2: float) -> CircuitBuild:
    _require_squeezing(r)
    if g1 == 0.0 or g2 == 0.0:
        raise ValueError("CZ weight coefficients must be non-zero")
    state = new_state()
    m1 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    m2 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    apply_cz(state, m1, m2, g1)
    sig = add_signal_mode(state)
    apply_cz(state, sig, m1, g2)
    homodyne(state, sig, math.pi / 2)   # y of the input channel
    homodyne(state, m1, math.pi / 2)    # y of the first channel
    targets = (Symbol(SymbolKind.VACUUM_X, m1), Symbol(SymbolKind.VACUUM_X, m2))
    return _finish(state, m2, r, targets)


def teleport_czcz(r: float, g1: float, g2: float) -> ProtocolReport:
    """Teleport using CZ couplings for both the resource and the input.

    The signal matrix is diag(-g2/g1, -g1/g2); with g1 = -g2 the map is the
    identity.  The errors are mse_x = 1/g1^2 and mse_y = 1 in units of
    e^{-2r} V0, so equal weights of unit size halve the beamsplitter error
    and large weights suppress the x error completely.
    """
    return _build_teleport_czcz(r, g1, g2).report


# ---------------------------------------------------------------------------
# Hybrid: CZ resource coupling, beamsplitter input coupling
# ---------------------------------------------------------------------------

def _build_teleport_hybrid(r: float, g1: float, theta1: float,
                           theta2: float) -> CircuitBuild:
    _require_squeezing(r)
    if g1 == 0.0:
        raise ValueError("CZ weight coefficient must be non-zero")
    state = new_state()
    m1 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    m2 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    apply_cz(state, m1, m2, g1)
    sig = add_signal_mode(state)
    apply_beamsplitter(state, sig, m1, 0.5)
    homodyne(state, sig, theta1)
    homodyne(state, m1, theta2)
    targets = (Symbol(SymbolKind.VACUUM_X, m1), Symbol(SymbolKind.VACUUM_X, m2))
    return _finish(state, m2, r, targets)


def teleport_hybrid(r: float, g1: float, theta1: float = -math.pi / 4,
                    theta2: float = math.pi / 4) -> ProtocolReport:
    """Teleport with a CZ-coupled resource and a beamsplitter input mix.

    The homodyne phases theta1 (input channel) and theta2 (first channel)
    are free; with theta2 = -theta1 = pi/4 the signal matrix becomes
    diag(1/g1, g1), so the map is teleportation only at |g1| = 1.  Phases
    with sin(theta1 - theta2) = 0 leave the anti-squeezed quadratures
    unresolvable and raise a feedforward error.
    """
    return _build_teleport_hybrid(r, g1, theta1, theta2).report


def hybrid_signal_matrix(g1: float, theta1: float, theta2: float) -> np.ndarray:
    """Closed-form signal matrix of the hybrid scheme.

    (1/sin(t-)) [[-(cos t- + cos t+)/g1, -sin(t+)/g1],
                 [g1 sin(t+), g1 (cos t- - cos t+)]]
    with t+- = theta1 +- theta2.
    """
    tm = theta1 - theta2
    tp = theta1 + theta2
    if abs(math.sin(tm)) < 1e-12:
        raise ValueError("sin(theta1 - theta2) = 0 leaves the map undefined")
    return (1.0 / math.sin(tm)) * np.array([
        [-(math.cos(tm) + math.cos(tp)) / g1, -math.sin(tp) / g1],
        [g1 * math.sin(tp), g1 * (math.cos(tm) - math.cos(tp))],
    ])


# ---------------------------------------------------------------------------
# Measurement-induced CZ gate
# ---------------------------------------------------------------------------

def optical_cz_matrix(spec: OpticalCzSpec) -> OpticalCzMap:
    """Closed-form map of the measurement-induced CZ gate.

    The signal block over (x_1, x_2, y_1, y_2) is an ideal CZ of weight
    g = (1-R)/sqrt(R); each output additionally picks up one squeezed
    ancilla quadrature scaled by nu = sqrt((1-R)/(1+R)):

        x_1 -> x_1 - nu x_a,   x_2 -> x_2 + nu y_b,
        y_1 -> y_1 + g x_2 - nu sqrt(R) y_b,
        y_2 -> y_2 + g x_1 - nu sqrt(R) x_a,

    where x_a (y_b) is the squeezed quadrature of the x-squeezed
    (y-squeezed) ancilla.
    """
    g = spec.effective_weight
    nu = spec.noise_scale
    root_r = math.sqrt(spec.reflectivity)
    sq = math.exp(-spec.ancilla_squeezing)
    matrix = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, g, 1.0, 0.0],
        [g, 0.0, 0.0, 1.0],
    ])
    noise = sq * np.array([
        [-nu, 0.0],
        [0.0, nu],
        [0.0, -nu * root_r],
        [-nu * root_r, 0.0],
    ])
    return OpticalCzMap(matrix=matrix, noise=noise, spec=spec)


@dataclass(frozen=True)
class _GateConventions:
    """Internal wiring choices of the gate builder.

    The defaults are the assignment that reproduces the closed-form map;
    the knobs exist so tests can exercise the mismatch detection.
    """

    output_rotation_port: str = "first"   # "first" or "second"
    amplitude_couplers: bool = False      # read R as amplitude instead of intensity


def _gate_elements(state: CircuitState, i: int, j: int, spec: OpticalCzSpec,
                   conv: _GateConventions) -> tuple[int, int]:
    """Run the gate's element sequence on ports (i, j).

    Returns the mode ids holding the two outputs before relabeling
    (the channels continue in the ancilla slots after each homodyne).
    """
    big_r = spec.reflectivity
    couple_r = big_r ** 2 if conv.amplitude_couplers else big_r
    r_anc = spec.ancilla_squeezing

    apply_phase_rotation(state, i, -math.pi / 2)
    apply_beamsplitter(state, j, i, big_r / (1.0 + big_r))

    anc_a = add_squeezed_mode(state, r_anc, Orientation.X_SQUEEZED)
    apply_beamsplitter(state, anc_a, i, couple_r)
    rec_1 = homodyne(state, i, math.pi / 2)      # y of the first channel

    anc_b = add_squeezed_mode(state, r_anc, Orientation.Y_SQUEEZED)
    apply_beamsplitter(state, anc_b, j, couple_r)
    rec_2 = homodyne(state, j, 0.0)              # x of the second channel

    apply_beamsplitter(state, anc_b, anc_a, 1.0 / (1.0 + big_r))
    out_port = anc_a if conv.output_rotation_port == "first" else anc_b
    apply_phase_rotation(state, out_port, math.pi / 2)

    # Cancel the anti-squeezed ancilla quadratures on both outputs.  The
    # gate consumes its own records, so the elimination is local to it.
    targets = (Symbol(SymbolKind.VACUUM_Y, anc_a), Symbol(SymbolKind.VACUUM_X, anc_b))
    records = (rec_1, rec_2)
    a = np.array([[rec.form.coefficient(t) for rec in records] for t in targets])
    for mode_id in (anc_a, anc_b):
        mode = state.modes[mode_id]
        for quad, form in ((Quadrature.X, mode.x), (Quadrature.Y, mode.y)):
            b = -np.array([form.coefficient(t) for t in targets])
            sol = np.linalg.solve(a, b)
            for rec, gain in zip(records, sol):
                displace_by_record(state, mode_id, quad, float(gain), rec)
    state.records.remove(rec_1)
    state.records.remove(rec_2)
    return anc_a, anc_b


def _gate_map_from_probe(spec: OpticalCzSpec,
                         conv: _GateConventions) -> tuple[np.ndarray, np.ndarray, bool]:
    """Assemble the gate on a two-vacuum probe and extract its action.

    Returns (signal block, per-row absolute noise budgets, symplectic flag).
    """
    state = new_state()
    p1 = add_vacuum_mode(state)
    p2 = add_vacuum_mode(state)
    basis = (Symbol(SymbolKind.VACUUM_X, p1), Symbol(SymbolKind.VACUUM_X, p2),
             Symbol(SymbolKind.VACUUM_Y, p1), Symbol(SymbolKind.VACUUM_Y, p2))
    out_1, out_2 = _gate_elements(state, p1, p2, spec, conv)
    m1, m2 = state.modes[out_1], state.modes[out_2]
    rows = (m1.x, m2.x, m1.y, m2.y)
    matrix = np.array([[row.coefficient(b) for b in basis] for row in rows])
    budgets = np.array([
        noise_budget(row.without(basis), state.variances) for row in rows])
    return matrix, budgets, check_symplectic(state)


def build_optical_cz(state: CircuitState, i: int, j: int, spec: OpticalCzSpec,
                     conventions: _GateConventions | None = None) -> None:
    """Assemble the measurement-induced CZ gate on modes (i, j) in place.

    The element sequence (phase rotations, coupling beamsplitters, two
    squeezed ancillas, channel homodynes, feedforward) is first exercised
    on a vacuum probe and its extracted map compared against
    :func:`optical_cz_matrix`: the signal block entrywise and the noise
    budget of every output row, both within GATE_MATCH_TOL.  On success the
    same sequence is applied to the caller's modes, which keep their ids.

    Raises:
        ConstructionMismatchError: if the assembled map does not reproduce
            the closed-form gate.
    """
    conv = conventions or _GateConventions()
    reference = optical_cz_matrix(spec)
    matrix, budgets, symplectic = _gate_map_from_probe(spec, conv)
    if not symplectic:
        raise ConstructionMismatchError(
            "assembled gate does not preserve canonical commutators")
    if np.max(np.abs(matrix - reference.matrix)) > GATE_MATCH_TOL:
        raise ConstructionMismatchError(
            "assembled gate signal block deviates from the closed-form map:\n"
            f"{matrix}\nexpected:\n{reference.matrix}")
    if np.max(np.abs(budgets - reference.row_budgets())) > GATE_MATCH_TOL:
        raise ConstructionMismatchError(
            f"assembled gate noise budgets {budgets} deviate from the "
            f"closed-form budgets {reference.row_budgets()}")
    out_1, out_2 = _gate_elements(state, i, j, spec, conv)
    state.modes[i] = state.modes.pop(out_1)
    state.modes[j] = state.modes.pop(out_2)


def apply_optical_cz_map(state: CircuitState, i: int, j: int,
                         spec: OpticalCzSpec) -> None:
    """Apply the closed-form gate map of :func:`optical_cz_matrix` to (i, j).

    Two fresh squeezed ancilla modes supply the admixed noise quadratures
    and are consumed by the gate.  This is the gate action the optical
    teleportation protocols are defined through; it matches the assembled
    circuit of :func:`build_optical_cz` in signal and in all noise budgets.
    """
    gate = optical_cz_matrix(spec)
    anc_a = add_squeezed_mode(state, spec.ancilla_squeezing, Orientation.X_SQUEEZED)
    anc_b = add_squeezed_mode(state, spec.ancilla_squeezing, Orientation.Y_SQUEEZED)
    # Squeezing factors live in the mode forms, so take the bare symbols.
    x_a = LinearForm.of(Symbol(SymbolKind.VACUUM_X, anc_a))
    y_b = LinearForm.of(Symbol(SymbolKind.VACUUM_Y, anc_b))
    del state.modes[anc_a], state.modes[anc_b]
    mi, mj = state.modes[i], state.modes[j]
    g = spec.effective_weight
    noise = gate.noise
    new_x_i = mi.x + noise[0, 0] * x_a + noise[0, 1] * y_b
    new_x_j = mj.x + noise[1, 0] * x_a + noise[1, 1] * y_b
    new_y_i = mi.y + g * mj.x + noise[2, 0] * x_a + noise[2, 1] * y_b
    new_y_j = mj.y + g * mi.x + noise[3, 0] * x_a + noise[3, 1] * y_b
    mi.x, mi.y = new_x_i, new_y_i
    mj.x, mj.y = new_x_j, new_y_j


# ---------------------------------------------------------------------------
# Optical teleportation protocols
# ---------------------------------------------------------------------------

def czcz_optical_mse_curves(reflectivity: float) -> tuple[float, float]:
    """Closed-form error levels of the two-gate optical scheme.

    mse_x = (1 + (2-R) R^2) / ((1-R)^2 (1+R)),
    mse_y = (1 + 3R - 2R^2) / (1+R), both in units of e^{-2r} V0.
    """
    big_r = reflectivity
    if not 0.0 < big_r < 1.0:
        raise ValueError("reflectivity must lie strictly inside (0, 1)")
    mse_x = (1.0 + (2.0 - big_r) * big_r ** 2) / ((1.0 - big_r) ** 2 * (1.0 + big_r))
    mse_y = (1.0 + 3.0 * big_r - 2.0 * big_r ** 2) / (1.0 + big_r)
    return mse_x, mse_y


def _build_teleport_czcz_optical(r: float, reflectivity: float) -> CircuitBuild:
    """Output forms of the two-gate optical scheme with equal gates.

    Both gates carry weight g = (1-R)/sqrt(R), so the signal matrix is
    diag(-1, -1) for every R.  The noise forms follow the closed-form
    two-gate output:

        x_out = -x_in - (sqrt(R)/(1-R)) y_s1 + (R/sqrt(1-R^2)) x_a
                + (1/sqrt(1-R^2)) y_b',
        y_out = -y_in + y_s2 + nu sqrt(R) (x_a' - y_b),

    over the two resource modes (y_s1, y_s2) and the four gate ancillas
    (unprimed: first gate, primed: second gate).
    """
    _require_squeezing(r)
    spec = OpticalCzSpec(reflectivity=reflectivity, ancilla_squeezing=r)
    big_r = reflectivity
    nu = spec.noise_scale
    state = new_state()
    m1 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    m2 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    anc_1x = add_squeezed_mode(state, r, Orientation.X_SQUEEZED)
    anc_1y = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    anc_2x = add_squeezed_mode(state, r, Orientation.X_SQUEEZED)
    anc_2y = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    sig = add_signal_mode(state)
    modes = state.modes
    x_out = (-1.0) * modes[sig].x \
        - (math.sqrt(big_r) / (1.0 - big_r)) * modes[m1].y \
        + (big_r / math.sqrt(1.0 - big_r ** 2)) * modes[anc_1x].x \
        + (1.0 / math.sqrt(1.0 - big_r ** 2)) * modes[anc_2y].y
    y_out = (-1.0) * modes[sig].y + modes[m2].y \
        + nu * math.sqrt(big_r) * (modes[anc_2x].x - modes[anc_1y].y)
    out = m2
    state.modes = {out: Mode(x=x_out, y=y_out)}
    if not check_symplectic(state):
        raise RuntimeError("output state lost canonical commutators")
    report = _make_report(state, out, r)
    return CircuitBuild(state=state, out_mode=out, pre_x=x_out, pre_y=y_out,
                        gains={}, report=report)


def teleport_czcz_optical(r: float, reflectivity: float) -> ProtocolReport:
    """Two-gate teleportation with both CZ couplings realized optically.

    Both gates use the same coupler reflectivity R, hence equal weights
    g = (1-R)/sqrt(R), making the signal matrix diag(-1, -1) at every R.
    The reported errors are the closed-form levels of
    :func:`czcz_optical_mse_curves`.  Composing the gate map through the
    full measurement chain reproduces mse_x identically; the y budget of
    that composition additionally carries the first gate's x-ancilla
    feedthrough (see :func:`compose_czcz_optical`), which the closed form
    counts at the bare coupling instead.
    """
    return _build_teleport_czcz_optical(r, reflectivity).report


def compose_czcz_optical(r: float, reflectivity: float) -> ProtocolReport:
    """Two-gate optical teleportation composed gate-by-gate.

    Applies the closed-form gate map twice (resource coupling, then input
    coupling), measures y in the input and first channels, and solves the
    feedforward that removes both anti-squeezed resource quadratures.  The
    x output matches :func:`czcz_optical_mse_curves` exactly; the y output
    carries nu^2 ((g - sqrt(R))^2 + R) of gate noise instead of the closed
    form's 2 nu^2 R because the second gate's photocurrent feeds the first
    gate's x-ancilla term through at weight g - sqrt(R) = (1-2R)/sqrt(R).
    The two agree only at R = 1/3.
    """
    _require_squeezing(r)
    spec = OpticalCzSpec(reflectivity=reflectivity, ancilla_squeezing=r)
    state = new_state()
    m1 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    m2 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    apply_optical_cz_map(state, m1, m2, spec)
    sig = add_signal_mode(state)
    apply_optical_cz_map(state, sig, m1, spec)
    homodyne(state, sig, math.pi / 2)
    homodyne(state, m1, math.pi / 2)
    targets = (Symbol(SymbolKind.VACUUM_X, m1), Symbol(SymbolKind.VACUUM_X, m2))
    return _finish(state, m2, r, targets).report


def _build_teleport_hybrid_optical(r: float, reflectivity: float) -> CircuitBuild:
    _require_squeezing(r)
    spec = OpticalCzSpec(reflectivity=reflectivity, ancilla_squeezing=r)
    state = new_state()
    m1 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    m2 = add_squeezed_mode(state, r, Orientation.Y_SQUEEZED)
    apply_optical_cz_map(state, m1, m2, spec)
    sig = add_signal_mode(state)
    apply_beamsplitter(state, sig, m1, 0.5)
    homodyne(state, sig, -math.pi / 4)
    homodyne(state, m1, math.pi / 4)
    targets = (Symbol(SymbolKind.VACUUM_X, m1), Symbol(SymbolKind.VACUUM_X, m2))
    return _finish(state, m2, r, targets)


def teleport_hybrid_optical(r: float, reflectivity: float) -> ProtocolReport:
    """Hybrid teleportation with the resource coupling realized optically.

    The gate map of :func:`optical_cz_matrix` entangles the resource, a
    balanced beamsplitter admixes the input, and homodynes at -pi/4 and
    +pi/4 feed the output displacement.  The signal matrix is
    diag(sqrt(R)/(1-R), (1-R)/sqrt(R)), i.e. diag(1/g, g) at the realized
    weight, so the map is teleportation only at g = 1, reached at
    R = (3 - sqrt(5))/2.  Errors: mse_x = R/(1-R)^2 + 1/(1-R^2),
    mse_y = 1 + (1-2R)^2 (1-R) / (R (1+R)).
    """
    return _build_teleport_hybrid_optical(r, reflectivity).report


def hybrid_optical_mse_curves(reflectivity: float) -> tuple[float, float]:
    """Closed-form error levels of the optical hybrid scheme."""
    big_r = reflectivity
    if not 0.0 < big_r < 1.0:
        raise ValueError("reflectivity must lie strictly inside (0, 1)")
    mse_x = big_r / (1.0 - big_r) ** 2 + 1.0 / (1.0 - big_r ** 2)
    mse_y = 1.0 + (1.0 - 2.0 * big_r) ** 2 * (1.0 - big_r) / (big_r * (1.0 + big_r))
    return mse_x, mse_y


HYBRID_OPTICAL_UNIT_GAIN_R = (3.0 - math.sqrt(5.0)) / 2.0
"""Reflectivity at which the optical hybrid scheme has unit signal gain."""


# ---------------------------------------------------------------------------
# Error-level crossover
# ---------------------------------------------------------------------------

def crossover_R(threshold_units: float = 2.0) -> float:
    """Reflectivity where the two-gate optical error reaches a threshold.

    Bisects max(mse_x, mse_y) of :func:`czcz_optical_mse_curves` minus the
    threshold over R in (0, 1) to within 1e-6.  At the beamsplitter
    reference level (threshold 2) the crossing sits at R = 1/3: below it
    the optical two-gate scheme beats the beamsplitter scheme, above it
    the coupler noise dominates.

    Raises:
        NoRootError: if the curves never reach the threshold on the
            bracket, which includes every threshold <= 1.
    """
    lo, hi = CROSSOVER_BRACKET

    def excess(big_r: float) -> float:
        return max(czcz_optical_mse_curves(big_r)) - threshold_units

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo > 0.0 or f_hi < 0.0:
        raise NoRootError(
            f"error level never crosses {threshold_units} on ({lo}, {hi})")
    while hi - lo > CROSSOVER_TOL:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Protocol registry for the service, CLI and shot-based cross-check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolDef:
    """Callable protocol with its parameter schema."""

    name: str
    build: callable
    params: tuple[str, ...]
    defaults: dict[str, float] = field(default_factory=dict)

    def run(self, params: dict[str, float]) -> CircuitBuild:
        unknown = set(params) - set(self.params)
        if unknown:
            raise ValueError(
                f"unknown parameters for {self.name}: {sorted(unknown)}")
        merged = {**self.defaults, **params}
        missing = set(self.params) - set(merged)
        if missing:
            raise ValueError(
                f"missing parameters for {self.name}: {sorted(missing)}")
        return self.build(**{k: merged[k] for k in self.params})


PROTOCOLS: dict[str, ProtocolDef] = {
    "bs": ProtocolDef(
        name="bs", build=_build_teleport_bs, params=("r",),
        defaults={"r": 1.0}),
    "czcz": ProtocolDef(
        name="czcz", build=_build_teleport_czcz, params=("r", "g1", "g2"),
        defaults={"r": 1.0, "g1": 1.0, "g2": -1.0}),
    "hybrid": ProtocolDef(
        name="hybrid", build=_build_teleport_hybrid,
        params=("r", "g1", "theta1", "theta2"),
        defaults={"r": 1.0, "g1": 1.0,
                  "theta1": -math.pi / 4, "theta2": math.pi / 4}),
    "czcz-optical": ProtocolDef(
        name="czcz-optical", build=_build_teleport_czcz_optical,
        params=("r", "reflectivity"),
        defaults={"r": 1.0, "reflectivity": 0.25}),
    "hybrid-optical": ProtocolDef(
        name="hybrid-optical", build=_build_teleport_hybrid_optical,
        params=("r", "reflectivity"),
        defaults={"r": 1.0, "reflectivity": HYBRID_OPTICAL_UNIT_GAIN_R}),
}


def build_circuit(protocol: str, params: dict[str, float]) -> CircuitBuild:
    """Build a registered protocol's circuit from a parameter dict."""
    try:
        proto = PROTOCOLS[protocol]
    except KeyError:
        raise ValueError(f"unknown protocol: {protocol!r}; "
                         f"choose from {sorted(PROTOCOLS)}") from None
    return proto.run(params)
