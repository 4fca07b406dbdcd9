"""Shot-based numeric cross-check of the exact protocol reports.

The exact engine computes error budgets algebraically.  This module replays
the same circuits numerically: every vacuum symbol is drawn as an
independent zero-mean Gaussian at its registered variance, the input signal
enters as a deterministic amplitude, the recorded photocurrents are
evaluated per shot, and the solved feedforward gains are applied as plain
arithmetic.  Agreement of the resulting mean square errors with the exact
budgets checks the whole chain: circuit algebra, gain solve, budget
bookkeeping and unit conventions.

Sampling is partitioned into fixed-size batches with independently seeded
child streams, and batch moments are merged in index order, so a given
configuration reproduces its estimate bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import LinearForm, Quadrature, Symbol, SymbolKind
from .protocols import (
    HYBRID_OPTICAL_UNIT_GAIN_R,
    CircuitBuild,
    build_circuit,
)

BATCH_SHOTS = 1 << 17
"""Shots per sampling batch (one seeded stream each)."""

GAIN_PROBE_AMPLITUDE = 3.0
"""Input amplitude used on the signal-gain probe grid."""

MIN_SHOTS = 100


@dataclass(frozen=True)
class ShotConfig:
    """One shot-simulation request.

    Attributes:
        protocol: registered protocol name.
        params: protocol parameters (missing ones take their defaults).
        n_shots: number of shots for the error estimate (>= 100).
        seed: root seed; identical configs give identical estimates.
        input_mean: deterministic signal amplitudes (x, y).
    """

    protocol: str
    params: tuple[tuple[str, float], ...] = ()
    n_shots: int = 1_000_000
    seed: int = 12345
    input_mean: tuple[float, float] = (2.0, 1.0)

    @staticmethod
    def make(protocol: str, params: dict[str, float] | None = None,
             **kwargs) -> "ShotConfig":
        items = tuple(sorted((params or {}).items()))
        return ShotConfig(protocol=protocol, params=items, **kwargs)

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)


@dataclass(frozen=True)
class ShotEstimate:
    """Monte Carlo estimates in the same units as the exact report."""

    mse_x: float
    mse_y: float
    stderr_x: float
    stderr_y: float
    signal_gain_est: np.ndarray
    gain_stderr: np.ndarray
    n_shots: int


@dataclass(frozen=True)
class ValidationOutcome:
    """Comparison of a shot estimate against the exact report."""

    config: ShotConfig
    passed: bool
    exact_mse: tuple[float, float]
    estimate: ShotEstimate
    z_scores: tuple[float, float]
    rel_stderr: tuple[float, float]
    max_gain_sigma: float


class _CompiledCircuit:
    """A protocol circuit flattened to coefficient vectors for sampling."""

    def __init__(self, build: CircuitBuild,
                 gain_offset: float = 0.0):
        self.build = build
        state = build.state
        vacuum = sorted(
            {s for s in state.variances if s.kind in (SymbolKind.VACUUM_X,
                                                      SymbolKind.VACUUM_Y)},
            key=lambda s: (s.kind.value, s.index))
        self.vacuum = vacuum
        self.scales = np.array([math.sqrt(state.variances[s]) for s in vacuum])
        gains = dict(build.gains)
        if gain_offset and state.records:
            key = (state.records[0].record_id, Quadrature.X)
            gains[key] = gains.get(key, 0.0) + gain_offset
        # Output = pre-displacement form + sum of gain * record form,
        # evaluated numerically per shot.
        self.noise_x, self.sig_x = self._compile(build.pre_x)
        self.noise_y, self.sig_y = self._compile(build.pre_y)
        for rec in state.records:
            rec_noise, rec_sig = self._compile(rec.form)
            for quad, target in ((Quadrature.X, "x"), (Quadrature.Y, "y")):
                g = gains.get((rec.record_id, quad), 0.0)
                if g != 0.0:
                    if target == "x":
                        self.noise_x = self.noise_x + g * rec_noise
                        self.sig_x = self.sig_x + g * rec_sig
                    else:
                        self.noise_y = self.noise_y + g * rec_noise
                        self.sig_y = self.sig_y + g * rec_sig

    def _compile(self, form: LinearForm) -> tuple[np.ndarray, np.ndarray]:
        """Split a form into (vacuum coefficient vector, signal pair)."""
        noise = np.array([form.coefficient(s) for s in self.vacuum])
        sig = np.array([form.coefficient(Symbol(SymbolKind.SIGNAL_X)),
                        form.coefficient(Symbol(SymbolKind.SIGNAL_Y))])
        return noise, sig

    def sample_outputs(self, rng: np.random.Generator, n: int,
                       mean: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
        draws = rng.standard_normal((n, len(self.vacuum))) * self.scales
        out_x = draws @ self.noise_x + float(self.sig_x @ mean)
        out_y = draws @ self.noise_y + float(self.sig_y @ mean)
        return out_x, out_y

    def sample_residuals(self, rng: np.random.Generator, n: int,
                         mean, gain_row) -> tuple[np.ndarray, np.ndarray]:
        """Outputs minus the exact signal map of the mean, computed without
        forming the large signal amplitude first.  For an uncorrupted
        circuit the bias terms are exactly zero, so the residuals (and all
        derived estimates) do not depend on the input mean."""
        draws = rng.standard_normal((n, len(self.vacuum))) * self.scales
        bias_x = float(self.sig_x @ mean) - gain_row[0]
        bias_y = float(self.sig_y @ mean) - gain_row[1]
        return draws @ self.noise_x + bias_x, draws @ self.noise_y + bias_y


def _batch_plan(n_shots: int) -> list[int]:
    full, rest = divmod(n_shots, BATCH_SHOTS)
    return [BATCH_SHOTS] * full + ([rest] if rest else [])


def run_shots(config: ShotConfig, _gain_offset: float = 0.0) -> ShotEstimate:
    """Estimate a protocol's errors and signal gain by sampling.

    The residual of each shot is the output minus the exact signal map
    applied to the input mean, so its second moment estimates the exact
    noise budget; estimates are reported in units of e^{-2r} V0 to match
    :class:`cvteleport.protocols.ProtocolReport`.  The signal gain is
    re-estimated independently from sample means on a four-point input
    grid, one independent stream per grid point.

    Raises:
        ValueError: if n_shots < 100 or the protocol/params are invalid.
    """
    if config.n_shots < MIN_SHOTS:
        raise ValueError(f"n_shots must be at least {MIN_SHOTS}")
    build = build_circuit(config.protocol, config.param_dict)
    circuit = _CompiledCircuit(build, gain_offset=_gain_offset)
    report = build.report
    gain_row = report.signal_gain @ np.asarray(config.input_mean)

    plan = _batch_plan(config.n_shots)
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(len(plan) + 4)
    n_total = 0
    sums = np.zeros(4)  # sum d_x^2, d_x^4, d_y^2, d_y^4
    for child, n in zip(children[:len(plan)], plan):
        rng = np.random.Generator(np.random.PCG64(child))
        dx, dy = circuit.sample_residuals(rng, n, config.input_mean, gain_row)
        dx2, dy2 = dx * dx, dy * dy
        sums += (dx2.sum(), (dx2 * dx2).sum(), dy2.sum(), (dy2 * dy2).sum())
        n_total += n

    unit = report.units_scale
    mse_abs = np.array([sums[0], sums[2]]) / n_total
    m4 = np.array([sums[1], sums[3]]) / n_total
    var_of_mean = np.maximum(m4 - mse_abs ** 2, 0.0) / n_total
    stderr_abs = np.sqrt(var_of_mean)

    # Signal gain from output sample means over the probe grid +-delta e_j.
    delta = GAIN_PROBE_AMPLITUDE
    probes = [(delta, 0.0), (-delta, 0.0), (0.0, delta), (0.0, -delta)]
    n_probe = max(MIN_SHOTS, config.n_shots // 10)
    probe_means = np.zeros((4, 2))
    for k, (child, mean) in enumerate(zip(children[len(plan):], probes)):
        rng = np.random.Generator(np.random.PCG64(child))
        done = 0
        acc = np.zeros(2)
        while done < n_probe:
            n = min(BATCH_SHOTS, n_probe - done)
            out_x, out_y = circuit.sample_outputs(rng, n, mean)
            acc += (out_x.sum(), out_y.sum())
            done += n
        probe_means[k] = acc / n_probe
    a = np.array(probes)
    gain_est, *_ = np.linalg.lstsq(a, probe_means, rcond=None)
    gain_est = gain_est.T  # rows: output quadrature, cols: input quadrature
    # lstsq normal matrix is diag(2 delta^2, 2 delta^2); the sample-mean
    # variance per probe is the output noise variance / n_probe.
    out_var = mse_abs  # absolute noise variance per output quadrature
    gain_stderr = np.sqrt(np.outer(out_var, [1.0, 1.0]) /
                          (n_probe * 2.0 * delta ** 2))

    return ShotEstimate(
        mse_x=float(mse_abs[0] / unit), mse_y=float(mse_abs[1] / unit),
        stderr_x=float(stderr_abs[0] / unit), stderr_y=float(stderr_abs[1] / unit),
        signal_gain_est=gain_est, gain_stderr=gain_stderr,
        n_shots=n_total,
    )


def validate_against_exact(config: ShotConfig, n_sigma: float = 3.0,
                           rel_stderr_max: float = 0.01,
                           gain_sigma: float = 5.0,
                           _gain_offset: float = 0.0) -> ValidationOutcome:
    """Run shots and compare against the exact report.

    Passes iff both mse estimates sit within n_sigma standard errors of the
    exact values, both relative standard errors stay below rel_stderr_max,
    and every signal-gain entry is within gain_sigma of its exact value.
    """
    build = build_circuit(config.protocol, config.param_dict)
    exact = build.report
    est = run_shots(config, _gain_offset=_gain_offset)
    z = []
    rel = []
    for exact_mse, mse, err in ((exact.mse_x, est.mse_x, est.stderr_x),
                                (exact.mse_y, est.mse_y, est.stderr_y)):
        if err > 0:
            z.append(abs(mse - exact_mse) / err)
            rel.append(err / mse if mse > 0 else 0.0)
        else:
            z.append(0.0 if abs(mse - exact_mse) < 1e-12 else math.inf)
            rel.append(0.0)
    gain_dev = np.abs(est.signal_gain_est - exact.signal_gain)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain_z = np.where(est.gain_stderr > 0, gain_dev / est.gain_stderr,
                          np.where(gain_dev < 1e-12, 0.0, np.inf))
    max_gain_sigma = float(np.max(gain_z))
    passed = (z[0] <= n_sigma and z[1] <= n_sigma
              and rel[0] < rel_stderr_max and rel[1] < rel_stderr_max
              and max_gain_sigma <= gain_sigma)
    return ValidationOutcome(
        config=config, passed=bool(passed),
        exact_mse=(exact.mse_x, exact.mse_y), estimate=est,
        z_scores=(float(z[0]), float(z[1])),
        rel_stderr=(float(rel[0]), float(rel[1])),
        max_gain_sigma=max_gain_sigma,
    )


def canonical_validation_set(n_shots: int = 1_000_000,
                             seed: int = 12345) -> list[ShotConfig]:
    """The standard configurations the validate command runs."""
    return [
        ShotConfig.make("bs", {"r": 1.0}, n_shots=n_shots, seed=seed),
        ShotConfig.make("czcz", {"r": 1.0, "g1": 1.0, "g2": -1.0},
                        n_shots=n_shots, seed=seed),
        ShotConfig.make("hybrid", {"r": 1.0, "g1": 1.0},
                        n_shots=n_shots, seed=seed),
        ShotConfig.make("czcz-optical", {"r": 1.0, "reflectivity": 0.25},
                        n_shots=n_shots, seed=seed),
        ShotConfig.make("hybrid-optical",
                        {"r": 1.0, "reflectivity": HYBRID_OPTICAL_UNIT_GAIN_R},
                        n_shots=n_shots, seed=seed),
    ]
