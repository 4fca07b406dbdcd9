"""Exact symbolic algebra for Gaussian quadrature circuits.

Every optical mode carries two quadrature operators represented as linear
forms over a fixed set of noise symbols: the input signal quadratures, one
vacuum symbol pair per created mode, and measurement-record symbols.  All
circuit elements used here (phase rotation, beamsplitter, CZ coupling,
homodyne detection, conditional displacement) act linearly on quadratures,
so tracking the coefficient tables is an exact simulation, free of
statistical error.

Conventions: quadratures satisfy [x, y] = i/2 and a vacuum mode has
quadrature variance V0 = 1/4.  With this normalization the CZ interaction
e^{2ig x⊗x} maps y -> y + g*x, which is the convention all closed-form
results in :mod:`cvteleport.protocols` rely on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

V0 = 0.25
"""Vacuum quadrature variance under [x, y] = i/2."""

PRUNE_TOL = 1e-12
"""Coefficients with absolute value below this are dropped from forms."""

SYMPLECTIC_TOL = 1e-10
"""Tolerance for commutator checks."""

_CANONICAL_BRACKET = 0.5
"""Value of the bracket [x, y] for a canonical mode pair (i/2 -> 1/2)."""


class SymbolKind(enum.Enum):
    """Classification of noise symbols appearing in linear forms."""

    SIGNAL_X = "sig_x"
    SIGNAL_Y = "sig_y"
    VACUUM_X = "x0"
    VACUUM_Y = "y0"
    RECORD = "rec"


class Orientation(enum.Enum):
    """Which quadrature of a squeezed mode carries the reduced noise."""

    X_SQUEEZED = "x"
    Y_SQUEEZED = "y"


class Quadrature(enum.Enum):
    """Quadrature selector for displacements and feedforward gains."""

    X = "x"
    Y = "y"


@dataclass(frozen=True)
class Symbol:
    """One independent noise symbol.

    Attributes:
        kind: what the symbol represents.
        index: originating mode id for vacuum symbols, record id for record
            symbols, 0 for the signal pair.
    """

    kind: SymbolKind
    index: int = 0

    @property
    def name(self) -> str:
        if self.kind in (SymbolKind.SIGNAL_X, SymbolKind.SIGNAL_Y):
            return self.kind.value
        return f"{self.kind.value}_{self.index}"

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Symbol({self.name})"


class LinearForm:
    """Immutable linear combination of symbols with float coefficients.

    Coefficients smaller than ``PRUNE_TOL`` in magnitude are dropped at
    construction time, so exact cancellations stay exact.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: dict[Symbol, float] | None = None):
        pruned = {}
        if coeffs:
            for sym, c in coeffs.items():
                if abs(c) >= PRUNE_TOL:
                    pruned[sym] = float(c)
        self._coeffs = pruned

    @classmethod
    def of(cls, symbol: Symbol, coefficient: float = 1.0) -> "LinearForm":
        return cls({symbol: coefficient})

    def coefficient(self, symbol: Symbol) -> float:
        return self._coeffs.get(symbol, 0.0)

    def symbols(self) -> tuple[Symbol, ...]:
        return tuple(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __len__(self) -> int:
        return len(self._coeffs)

    def __add__(self, other: "LinearForm") -> "LinearForm":
        out = dict(self._coeffs)
        for sym, c in other._coeffs.items():
            out[sym] = out.get(sym, 0.0) + c
        return LinearForm(out)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        out = dict(self._coeffs)
        for sym, c in other._coeffs.items():
            out[sym] = out.get(sym, 0.0) - c
        return LinearForm(out)

    def __mul__(self, scalar: float) -> "LinearForm":
        return LinearForm({s: c * scalar for s, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "LinearForm":
        return self * -1.0

    def without(self, symbols) -> "LinearForm":
        """Return a copy with the given symbols' terms removed."""
        drop = set(symbols)
        return LinearForm({s: c for s, c in self._coeffs.items() if s not in drop})

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        terms = " + ".join(f"{c:+.6g}*{s.name}" for s, c in sorted(
            self._coeffs.items(), key=lambda kv: kv[0].name))
        return f"LinearForm({terms or '0'})"


@dataclass
class Mode:
    """A live optical mode: its two quadratures as linear forms."""

    x: LinearForm
    y: LinearForm


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Outcome of a homodyne detection, kept symbolically.

    The record stores the measured linear form itself, so a conditional
    displacement by the record is an exact substitution rather than a new
    symbol.  ``symbol`` is a fresh record-kind symbol identifying this
    outcome; it never enters quadrature forms produced by the engine but is
    available to callers, and :func:`noise_budget` rejects forms containing
    it so an unsubstituted record cannot silently enter an error estimate.
    """

    record_id: int
    form: LinearForm
    theta: float
    mode_id: int
    symbol: Symbol


class FeedforwardError(ValueError):
    """Raised when feedforward gains cannot be determined."""


@dataclass
class CircuitState:
    """Mutable circuit under construction.

    Attributes:
        modes: live modes keyed by a stable integer id (insertion ordered).
        variances: absolute variance of each vacuum symbol (signal symbols
            are deterministic amplitudes and carry no variance entry).
        records: homodyne records in detection order.
    """

    modes: dict[int, Mode] = field(default_factory=dict)
    variances: dict[Symbol, float] = field(default_factory=dict)
    records: list[MeasurementRecord] = field(default_factory=list)
    _next_mode: int = 1
    _next_record: int = 1
    _has_signal: bool = False


def new_state() -> CircuitState:
    """Create an empty circuit state."""
    return CircuitState()


def _alloc_mode(state: CircuitState) -> int:
    mode_id = state._next_mode
    state._next_mode += 1
    return mode_id


def add_squeezed_mode(state: CircuitState, r: float, orientation: Orientation) -> int:
    """Add a squeezed vacuum mode and return its mode id.

    A Y-squeezed mode carries x = e^{+r} x0, y = e^{-r} y0 over its fresh
    vacuum symbol pair; an X-squeezed mode is the mirror image.  r = 0
    gives a plain vacuum mode.

    Raises:
        ValueError: if r is negative (flip the orientation instead).
    """
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative; "
                         "use the orientation to pick the quiet quadrature")
    mode_id = _alloc_mode(state)
    sx = Symbol(SymbolKind.VACUUM_X, mode_id)
    sy = Symbol(SymbolKind.VACUUM_Y, mode_id)
    state.variances[sx] = V0
    state.variances[sy] = V0
    if orientation is Orientation.Y_SQUEEZED:
        cx, cy = math.exp(r), math.exp(-r)
    elif orientation is Orientation.X_SQUEEZED:
        cx, cy = math.exp(-r), math.exp(r)
    else:
        raise ValueError(f"unknown orientation: {orientation!r}")
    state.modes[mode_id] = Mode(x=LinearForm.of(sx, cx), y=LinearForm.of(sy, cy))
    return mode_id


def add_vacuum_mode(state: CircuitState) -> int:
    """Add an unsqueezed vacuum mode and return its mode id."""
    return add_squeezed_mode(state, 0.0, Orientation.Y_SQUEEZED)


def add_signal_mode(state: CircuitState) -> int:
    """Add the input-signal mode carrying the deterministic amplitudes.

    The signal quadratures are represented by the dedicated signal symbol
    pair so protocol reports can separate transmitted signal from added
    noise.  Only one signal mode may exist per state.

    Raises:
        ValueError: if the state already holds a signal mode.
    """
    if state._has_signal:
        raise ValueError("state already contains a signal mode")
    state._has_signal = True
    mode_id = _alloc_mode(state)
    state.modes[mode_id] = Mode(
        x=LinearForm.of(Symbol(SymbolKind.SIGNAL_X)),
        y=LinearForm.of(Symbol(SymbolKind.SIGNAL_Y)),
    )
    return mode_id


def _require_mode(state: CircuitState, mode_id: int) -> Mode:
    try:
        return state.modes[mode_id]
    except KeyError:
        raise ValueError(f"mode {mode_id} is not live in this state") from None


def apply_phase_rotation(state: CircuitState, mode_id: int, theta: float) -> None:
    """Rotate a mode's quadratures: x' = x cos(theta) - y sin(theta),
    y' = x sin(theta) + y cos(theta)."""
    m = _require_mode(state, mode_id)
    c, s = math.cos(theta), math.sin(theta)
    m.x, m.y = m.x * c - m.y * s, m.x * s + m.y * c


def apply_beamsplitter(state: CircuitState, i: int, j: int, reflectivity: float) -> None:
    """Mix two modes on a beamsplitter of intensity reflectivity R.

    With t = sqrt(1-R) and rho = sqrt(R), both quadratures transform as
    a_i' = t a_i + rho a_j, a_j' = rho a_i - t a_j.

    Raises:
        ValueError: if R is outside [0, 1] or the ports coincide.
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    if i == j:
        raise ValueError("beamsplitter ports must be distinct modes")
    mi = _require_mode(state, i)
    mj = _require_mode(state, j)
    t = math.sqrt(1.0 - reflectivity)
    rho = math.sqrt(reflectivity)
    mi.x, mj.x = mi.x * t + mj.x * rho, mi.x * rho - mj.x * t
    mi.y, mj.y = mi.y * t + mj.y * rho, mi.y * rho - mj.y * t


def apply_cz(state: CircuitState, i: int, j: int, weight: float) -> None:
    """Apply the CZ coupling e^{2ig x_i x_j}: y_i += g x_j and y_j += g x_i."""
    if i == j:
        raise ValueError("CZ coupling requires two distinct modes")
    mi = _require_mode(state, i)
    mj = _require_mode(state, j)
    mi.y, mj.y = mi.y + weight * mj.x, mj.y + weight * mi.x
    # x quadratures are untouched; the coupling commutes with both of them.


def homodyne(state: CircuitState, mode_id: int, theta: float) -> MeasurementRecord:
    """Measure cos(theta) x + sin(theta) y on a mode and destroy it.

    The detector efficiency is normalized away, so the record's form is the
    measured combination with unit scale.
    """
    m = _require_mode(state, mode_id)
    measured = m.x * math.cos(theta) + m.y * math.sin(theta)
    record_id = state._next_record
    state._next_record += 1
    rec = MeasurementRecord(
        record_id=record_id,
        form=measured,
        theta=theta,
        mode_id=mode_id,
        symbol=Symbol(SymbolKind.RECORD, record_id),
    )
    state.records.append(rec)
    del state.modes[mode_id]
    return rec


def displace_by_record(state: CircuitState, mode_id: int, quadrature: Quadrature,
                       gain: float, record: MeasurementRecord) -> None:
    """Shift one quadrature by gain times a measurement record.

    Because the record's outcome is itself a linear form over the noise
    symbols, the displacement is an exact substitution:
    quadrature += gain * record.form.
    """
    m = _require_mode(state, mode_id)
    if quadrature is Quadrature.X:
        m.x = m.x + gain * record.form
    elif quadrature is Quadrature.Y:
        m.y = m.y + gain * record.form
    else:
        raise ValueError(f"unknown quadrature: {quadrature!r}")


def solve_feedforward_gains(state: CircuitState, mode_id: int,
                            targets) -> dict[tuple[int, Quadrature], float]:
    """Solve for displacement gains that cancel target symbols on a mode.

    For each quadrature of the output mode, finds gains g_k such that
    quadrature + sum_k g_k * record_k.form has zero coefficient on every
    target symbol.  All records currently held by the state participate.

    Args:
        state: circuit holding the records.
        mode_id: output mode whose quadratures are to be corrected.
        targets: iterable of symbols to eliminate from both quadratures.

    Returns:
        Mapping (record_id, quadrature) -> gain.  With an empty target set
        every gain is zero.

    Raises:
        FeedforwardError: if no gain assignment eliminates the targets
            ("targets not eliminable"), or if the records are linearly
            dependent on the targets so the gains are ambiguous
            ("singular feedforward system").
    """
    m = _require_mode(state, mode_id)
    target_list = list(targets)
    records = state.records
    gains: dict[tuple[int, Quadrature], float] = {}
    if not target_list:
        for rec in records:
            gains[(rec.record_id, Quadrature.X)] = 0.0
            gains[(rec.record_id, Quadrature.Y)] = 0.0
        return gains
    if len(records) < len(target_list):
        raise FeedforwardError(
            "targets not eliminable: fewer records than target symbols")

    a = np.array([[rec.form.coefficient(t) for rec in records]
                  for t in target_list], dtype=float)
    a_scale = float(np.max(np.abs(a), initial=0.0))
    rank = np.linalg.matrix_rank(a, tol=1e-10 * max(1.0, a_scale)) if a.size else 0
    for quad, form in ((Quadrature.X, m.x), (Quadrature.Y, m.y)):
        b = -np.array([form.coefficient(t) for t in target_list], dtype=float)
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
        residual = a @ sol - b
        # The eliminability threshold is relative to the system scale so
        # that strongly anti-squeezed coefficients (of size e^{r}) do not
        # trip it through float rounding alone.
        scale = max(1.0, a_scale * (1.0 + float(np.max(np.abs(sol), initial=0.0))),
                    float(np.max(np.abs(b), initial=0.0)))
        if np.max(np.abs(residual), initial=0.0) > 1e-10 * scale:
            raise FeedforwardError(
                f"targets not eliminable from quadrature {quad.value}")
        if rank < len(records):
            raise FeedforwardError(
                "singular feedforward system: records are linearly dependent "
                "on the targets, gains are not unique")
        for rec, g in zip(records, sol):
            gains[(rec.record_id, quad)] = float(g)
    return gains


def apply_feedforward(state: CircuitState, mode_id: int,
                      gains: dict[tuple[int, Quadrature], float]) -> None:
    """Apply a gain table from :func:`solve_feedforward_gains` as displacements."""
    by_id = {rec.record_id: rec for rec in state.records}
    for (record_id, quad), g in gains.items():
        if g != 0.0:
            displace_by_record(state, mode_id, quad, g, by_id[record_id])


def _symbol_dof(symbol: Symbol):
    """Group key and sign for the symplectic bracket.

    Returns (dof_key, is_conjugate) where the two members of a canonical
    pair share dof_key and the y-type member has is_conjugate True.
    Record symbols carry no bracket and return None.
    """
    if symbol.kind is SymbolKind.SIGNAL_X:
        return ("sig", 0), False
    if symbol.kind is SymbolKind.SIGNAL_Y:
        return ("sig", 0), True
    if symbol.kind is SymbolKind.VACUUM_X:
        return ("vac", symbol.index), False
    if symbol.kind is SymbolKind.VACUUM_Y:
        return ("vac", symbol.index), True
    return None, False


def bracket(f: LinearForm, g: LinearForm) -> float:
    """Symplectic bracket of two forms under [x0, y0] = i/2 per symbol pair.

    Returns the coefficient of i in [f, g]; canonical conjugate pairs give
    1/2, commuting combinations give 0.
    """
    fx: dict = {}
    fy: dict = {}
    for sym, c in f.items():
        key, conj = _symbol_dof(sym)
        if key is not None:
            (fy if conj else fx)[key] = c
    total = 0.0
    for sym, c in g.items():
        key, conj = _symbol_dof(sym)
        if key is None:
            continue
        if conj:
            total += fx.get(key, 0.0) * c * _CANONICAL_BRACKET
        else:
            total -= fy.get(key, 0.0) * c * _CANONICAL_BRACKET
    return total


def check_symplectic(state: CircuitState) -> bool:
    """Check canonical commutators across all live modes.

    True iff for every pair of live modes [x_i, y_j] = (1/2) delta_ij and
    [x_i, x_j] = [y_i, y_j] = 0, all within SYMPLECTIC_TOL.
    """
    ids = list(state.modes)
    for a_pos, i in enumerate(ids):
        mi = state.modes[i]
        if abs(bracket(mi.x, mi.y) - _CANONICAL_BRACKET) > SYMPLECTIC_TOL:
            return False
        for j in ids[a_pos + 1:]:
            mj = state.modes[j]
            if (abs(bracket(mi.x, mj.x)) > SYMPLECTIC_TOL
                    or abs(bracket(mi.y, mj.y)) > SYMPLECTIC_TOL
                    or abs(bracket(mi.x, mj.y)) > SYMPLECTIC_TOL
                    or abs(bracket(mi.y, mj.x)) > SYMPLECTIC_TOL):
                return False
    return True


def noise_budget(form: LinearForm, variances: dict[Symbol, float]) -> float:
    """Variance of a linear form over independent zero-mean symbols.

    Args:
        form: linear combination whose variance is wanted.
        variances: absolute variance per symbol; every symbol in the form
            must appear.

    Raises:
        ValueError: if the form still references a measurement-record
            symbol (substitute the record's form first) or a symbol with
            no registered variance.
    """
    total = 0.0
    for sym, c in form.items():
        if sym.kind is SymbolKind.RECORD:
            raise ValueError(
                f"form references record symbol {sym.name}; substitute the "
                "record's measured form before taking a noise budget")
        try:
            total += c * c * variances[sym]
        except KeyError:
            raise ValueError(f"no variance registered for symbol {sym.name}") from None
    return total
