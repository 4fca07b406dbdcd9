"""HTTP service exposing the simulator.

Four POST endpoints wrap the exact engine and the shot-based cross-check:
/simulate (one protocol report), /sweep (a report grid over one parameter),
/crossover (error-level crossing of the two-gate optical scheme) and
/validate (Monte Carlo against exact).  The command line client in
:mod:`cvteleport.cli` talks to this app in process by default, so the same
request/response schemas serve both deployments.

Parameter and domain errors map to HTTP 400 with a typed detail object:
``{"type": "usage" | "no-root", "message": ...}``.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .algebra import SymbolKind
from .montecarlo import (
    ShotConfig,
    canonical_validation_set,
    validate_against_exact,
)
from .protocols import (
    BS_REFERENCE_MSE,
    PROTOCOLS,
    NoRootError,
    ProtocolReport,
    build_circuit,
    crossover_R,
)


class NoiseTerm(BaseModel):
    output: str
    symbol: str
    coefficient: float


class SimulateRequest(BaseModel):
    protocol: str
    params: dict[str, float] = Field(default_factory=dict)
    absolute: bool = False


class SimulateResponse(BaseModel):
    protocol: str
    params: dict[str, float]
    signal_gain: list[float]
    noise_terms: list[NoiseTerm]
    mse_x: float
    mse_y: float
    is_teleportation: bool
    signal_sign: list[int] | None
    units: str


class SweepRequest(BaseModel):
    protocol: str
    parameter: str
    lo: float
    hi: float
    steps: int = Field(ge=2, le=100_000)
    fixed: dict[str, float] = Field(default_factory=dict)
    absolute: bool = False


class SweepRow(BaseModel):
    param: str
    value: float
    mse_x: float
    mse_y: float
    is_teleportation: bool
    reference_level: float


class SweepResponse(BaseModel):
    protocol: str
    rows: list[SweepRow]


class CrossoverRequest(BaseModel):
    threshold: float = 2.0


class CrossoverResponse(BaseModel):
    threshold: float
    r_star: float


class ValidateRequest(BaseModel):
    shots: int = 1_000_000
    seed: int = 12345
    protocols: list[str] | None = None
    corrupt_gain: float = 0.0


class ValidateResult(BaseModel):
    protocol: str
    params: dict[str, float]
    passed: bool
    exact_mse_x: float
    exact_mse_y: float
    mc_mse_x: float
    mc_mse_y: float
    stderr_x: float
    stderr_y: float
    z_x: float
    z_y: float
    max_gain_sigma: float


class ValidateResponse(BaseModel):
    passed: bool
    shots: int
    seed: int
    results: list[ValidateResult]


def _usage_error(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400,
                         detail={"type": "usage", "message": str(exc)})


_SYMBOL_ORDER = {SymbolKind.SIGNAL_X: 0, SymbolKind.SIGNAL_Y: 1,
                 SymbolKind.VACUUM_X: 2, SymbolKind.VACUUM_Y: 3,
                 SymbolKind.RECORD: 4}


def _noise_terms(form, output: str) -> list[NoiseTerm]:
    items = sorted(form.items(),
                   key=lambda kv: (_SYMBOL_ORDER[kv[0].kind], kv[0].index))
    return [NoiseTerm(output=output, symbol=s.name, coefficient=c)
            for s, c in items]


def _simulate_payload(protocol: str, params: dict[str, float],
                      report: ProtocolReport, absolute: bool) -> SimulateResponse:
    scale = report.units_scale if absolute else 1.0
    return SimulateResponse(
        protocol=protocol,
        params=params,
        signal_gain=[float(v) for v in report.signal_gain.ravel()],
        noise_terms=(_noise_terms(report.noise_x, "x")
                     + _noise_terms(report.noise_y, "y")),
        mse_x=report.mse_x * scale,
        mse_y=report.mse_y * scale,
        is_teleportation=report.is_teleportation,
        signal_sign=list(report.signal_sign) if report.signal_sign else None,
        units="absolute" if absolute else "exp(-2r)*V0",
    )


def create_app() -> FastAPI:
    app = FastAPI(title="cvteleport", version=__version__)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        try:
            build = build_circuit(req.protocol, req.params)
        except ValueError as exc:
            raise _usage_error(exc) from exc
        return _simulate_payload(req.protocol, req.params, build.report,
                                 req.absolute)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        try:
            proto = PROTOCOLS.get(req.protocol)
            if proto is None:
                raise ValueError(f"unknown protocol: {req.protocol!r}")
            if req.parameter not in proto.params:
                raise ValueError(
                    f"protocol {req.protocol} has no parameter "
                    f"{req.parameter!r}; choose from {list(proto.params)}")
            rows = []
            for value in np.linspace(req.lo, req.hi, req.steps):
                params = {**req.fixed, req.parameter: float(value)}
                report = proto.run(params).report
                scale = report.units_scale if req.absolute else 1.0
                rows.append(SweepRow(
                    param=req.parameter, value=float(value),
                    mse_x=report.mse_x * scale, mse_y=report.mse_y * scale,
                    is_teleportation=report.is_teleportation,
                    reference_level=BS_REFERENCE_MSE * scale))
        except ValueError as exc:
            raise _usage_error(exc) from exc
        return SweepResponse(protocol=req.protocol, rows=rows)

    @app.post("/crossover", response_model=CrossoverResponse)
    def crossover(req: CrossoverRequest) -> CrossoverResponse:
        try:
            r_star = crossover_R(req.threshold)
        except NoRootError as exc:
            raise HTTPException(
                status_code=400,
                detail={"type": "no-root", "message": str(exc)}) from exc
        except ValueError as exc:
            raise _usage_error(exc) from exc
        return CrossoverResponse(threshold=req.threshold, r_star=r_star)

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        try:
            configs = canonical_validation_set(n_shots=req.shots, seed=req.seed)
            if req.protocols is not None:
                unknown = set(req.protocols) - {c.protocol for c in configs}
                if unknown:
                    raise ValueError(
                        f"unknown validation protocols: {sorted(unknown)}")
                configs = [c for c in configs if c.protocol in req.protocols]
            results = []
            for config in configs:
                outcome = validate_against_exact(
                    config, _gain_offset=req.corrupt_gain)
                est = outcome.estimate
                results.append(ValidateResult(
                    protocol=config.protocol, params=config.param_dict,
                    passed=outcome.passed,
                    exact_mse_x=outcome.exact_mse[0],
                    exact_mse_y=outcome.exact_mse[1],
                    mc_mse_x=est.mse_x, mc_mse_y=est.mse_y,
                    stderr_x=est.stderr_x, stderr_y=est.stderr_y,
                    z_x=outcome.z_scores[0], z_y=outcome.z_scores[1],
                    max_gain_sigma=outcome.max_gain_sigma))
        except ValueError as exc:
            raise _usage_error(exc) from exc
        return ValidateResponse(
            passed=all(r.passed for r in results) and bool(results),
            shots=req.shots, seed=req.seed, results=results)

    return app


app = create_app()
