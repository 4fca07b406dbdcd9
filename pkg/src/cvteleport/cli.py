"""Command line client for the simulator service.

Every subcommand is a thin client: it builds a request, posts it to the
HTTP service and formats the response.  By default the service app runs in
process over an ASGI transport, so no socket or separate server is needed;
``--server URL`` switches to a remote instance serving
:mod:`cvteleport.service`.

Exit codes: 0 success, 1 domain failure (validation did not pass, no
crossover root), 2 usage or parameter errors.
"""

from __future__ import annotations

import asyncio
import io
import json
import sys
from dataclasses import dataclass

import click
import httpx

CONFIG_SPEC_VERSION = 1

_PARAM_FLAGS = ("r", "g1", "g2", "theta1", "theta2", "reflectivity")


class DomainError(click.ClickException):
    """Failure of the requested computation itself (exit code 1)."""

    exit_code = 1


@dataclass
class Settings:
    fmt: str
    out: str | None
    seed: int
    absolute: bool
    server: str | None


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(config, dict):
        raise click.UsageError(f"config {path} must hold a JSON object")
    version = config.get("spec_version", CONFIG_SPEC_VERSION)
    if version != CONFIG_SPEC_VERSION:
        raise click.UsageError(
            f"config {path} has spec_version {version}, expected "
            f"{CONFIG_SPEC_VERSION}")
    return config


@click.group()
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default=None, help="Output format (default json).")
@click.option("--out", type=click.Path(dir_okay=False, writable=True),
              default=None, help="Write output to a file instead of stdout.")
@click.option("--seed", type=int, default=None,
              help="Root seed for shot-based commands (default 12345).")
@click.option("--absolute", is_flag=True, default=False,
              help="Report absolute variances instead of exp(-2r)*V0 units.")
@click.option("--server", default=None,
              help="URL of a running service (default: in-process).")
@click.option("--config", "config_path", type=click.Path(exists=False),
              default=None, help="JSON config file with flag defaults.")
@click.pass_context
def main(ctx, fmt, out, seed, absolute, server, config_path):
    """Exact Gaussian teleportation simulator."""
    config = _load_config(config_path)
    ctx.obj = Settings(
        fmt=fmt or config.get("format", "json"),
        out=out or config.get("out"),
        seed=seed if seed is not None else int(config.get("seed", 12345)),
        absolute=absolute or bool(config.get("absolute", False)),
        server=server or config.get("server"),
    )


async def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, timeout=None,
                                 base_url="http://cvteleport.internal") as client:
        return await client.post(path, json=payload)


def _post(settings: Settings, path: str, payload: dict) -> dict:
    try:
        if settings.server:
            with httpx.Client(base_url=settings.server, timeout=600.0) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(_post_in_process(path, payload))
    except httpx.HTTPError as exc:
        raise DomainError(f"service request failed: {exc}")
    if response.status_code == 400:
        detail = response.json().get("detail", {})
        message = detail.get("message", response.text)
        if detail.get("type") == "no-root":
            raise DomainError(message)
        raise click.UsageError(message)
    if response.status_code == 422:
        raise click.UsageError(f"invalid request: {response.text}")
    if response.status_code != 200:
        raise DomainError(
            f"service returned {response.status_code}: {response.text}")
    return response.json()


def _emit(settings: Settings, text: str) -> None:
    if settings.out:
        with open(settings.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt_value(v) for v in row) + "\n")
    return buf.getvalue()


def _collect_params(kwargs: dict) -> dict[str, float]:
    return {name: kwargs[name] for name in _PARAM_FLAGS
            if kwargs.get(name) is not None}


def _param_options(command):
    for name in reversed(_PARAM_FLAGS):
        flag = f"--{name}" if name != "reflectivity" else "--reflectivity"
        command = click.option(flag, name, type=float, default=None,
                               help=f"Protocol parameter {name}.")(command)
    return command


@main.command()
@click.argument("protocol")
@_param_options
@click.pass_obj
def simulate(settings: Settings, protocol: str, **kwargs):
    """Run one protocol exactly and print its report."""
    payload = {"protocol": protocol, "params": _collect_params(kwargs),
               "absolute": settings.absolute}
    result = _post(settings, "/simulate", payload)
    if settings.fmt == "json":
        _emit(settings, _json_text(result))
        return
    gain = result["signal_gain"]
    header = ["protocol", "mse_x", "mse_y", "is_teleportation",
              "gain_xx", "gain_xy", "gain_yx", "gain_yy", "units"]
    row = [result["protocol"], result["mse_x"], result["mse_y"],
           result["is_teleportation"], gain[0], gain[1], gain[2], gain[3],
           result["units"]]
    _emit(settings, _csv_text(header, [row]))


@main.command()
@click.argument("protocol")
@click.option("--param", required=True,
              help="Name of the parameter to sweep.")
@click.option("--lo", type=float, required=True)
@click.option("--hi", type=float, required=True)
@click.option("--steps", type=int, default=50, show_default=True)
@_param_options
@click.pass_obj
def sweep(settings: Settings, protocol: str, param: str, lo: float,
          hi: float, steps: int, **kwargs):
    """Sweep one parameter and print the error levels on a grid."""
    payload = {"protocol": protocol, "parameter": param, "lo": lo, "hi": hi,
               "steps": steps, "fixed": _collect_params(kwargs),
               "absolute": settings.absolute}
    result = _post(settings, "/sweep", payload)
    if settings.fmt == "json":
        _emit(settings, _json_text(result))
        return
    header = ["param", "value", "mse_x", "mse_y", "is_teleportation",
              "reference_level"]
    rows = [[row["param"], row["value"], row["mse_x"], row["mse_y"],
             row["is_teleportation"], row["reference_level"]]
            for row in result["rows"]]
    _emit(settings, _csv_text(header, rows))


@main.command()
@click.option("--threshold", type=float, default=2.0, show_default=True,
              help="Error level to cross, in exp(-2r)*V0 units.")
@click.pass_obj
def crossover(settings: Settings, threshold: float):
    """Find where the two-gate optical error reaches a threshold."""
    result = _post(settings, "/crossover", {"threshold": threshold})
    if settings.fmt == "json":
        _emit(settings, _json_text(result))
        return
    _emit(settings, _csv_text(["threshold", "r_star"],
                              [[result["threshold"], result["r_star"]]]))


@main.command()
@click.option("--shots", type=int, default=1_000_000, show_default=True)
@click.option("--protocol", "protocols", multiple=True,
              help="Validate only these protocols (repeatable).")
@click.option("--corrupt-gain", type=float, default=0.0,
              help="Debug: offset added to one feedforward gain; a nonzero "
                   "value must make validation fail.")
@click.pass_obj
def validate(settings: Settings, shots: int, protocols: tuple[str, ...],
             corrupt_gain: float):
    """Cross-check the exact reports against shot-based estimates."""
    payload = {"shots": shots, "seed": settings.seed,
               "corrupt_gain": corrupt_gain}
    if protocols:
        payload["protocols"] = list(protocols)
    result = _post(settings, "/validate", payload)
    if settings.fmt == "json":
        _emit(settings, _json_text(result))
    else:
        header = ["protocol", "passed", "exact_mse_x", "mc_mse_x", "stderr_x",
                  "exact_mse_y", "mc_mse_y", "stderr_y", "z_x", "z_y",
                  "max_gain_sigma"]
        rows = [[r["protocol"], r["passed"], r["exact_mse_x"], r["mc_mse_x"],
                 r["stderr_x"], r["exact_mse_y"], r["mc_mse_y"], r["stderr_y"],
                 r["z_x"], r["z_y"], r["max_gain_sigma"]]
                for r in result["results"]]
        _emit(settings, _csv_text(header, rows))
    if not result["passed"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
