"""Command-line client for the laboratory service.

Each subcommand builds a request, sends it to the service (in-process by
default, or a remote instance via --url), writes the returned artifacts
under the output directory, and prints the primary JSON result.  Exit
codes encode the verdict class so shell pipelines can branch on the
dichotomy:

    0   success (including GlobalScattering verdicts)
    2   configuration, validation, or solver error
    10  FiniteTimeBlowup
    11  GrowAlongSequence
    12  Undetermined (no detector fired; also inconclusive sweeps)
    13  Undetermined because the lattice stopped resolving the solution
"""

import base64
import json
import os
import sys
from typing import Optional

import click
import httpx

from .diagnostics import (
    FINITE_TIME_BLOWUP,
    GLOBAL_SCATTERING,
    GROW_ALONG_SEQUENCE,
    UNDETERMINED,
)
from .propagator import TERMINATED_INVALID
from .runner import (
    DECAY_JSON,
    GROUND_FIELD,
    GROUND_SUMMARY,
    MEMBERSHIP_JSON,
    PLOT_CSV,
    SWEEP_CSV,
    SWEEP_JSON,
    TRACE_CSV,
    VERDICT_JSON,
    canonical_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 10
EXIT_GROW = 11
EXIT_UNDETERMINED = 12
EXIT_INVALID = 13

VERDICT_EXIT = {
    GLOBAL_SCATTERING: EXIT_OK,
    FINITE_TIME_BLOWUP: EXIT_BLOWUP,
    GROW_ALONG_SEQUENCE: EXIT_GROW,
    UNDETERMINED: EXIT_UNDETERMINED,
}


def _client(url: Optional[str]) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*httpx2.*")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(url: Optional[str], path: str, payload: dict) -> dict:
    with _client(url) as client:
        resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        click.echo(f"error ({resp.status_code}): {detail}", err=True)
        sys.exit(EXIT_CONFIG)
    return resp.json()


def _load_config(config_path: str, out_dir: Optional[str], seed: Optional[int]) -> dict:
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, ValueError) as exc:
        click.echo(f"cannot read config {config_path}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if out_dir is not None:
        raw["output_dir"] = out_dir
    if seed is not None:
        raw["seed"] = seed
    from pydantic import ValidationError

    from .config import ExperimentConfig

    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        click.echo(f"config validation error:\n{exc}", err=True)
        sys.exit(EXIT_CONFIG)
    return json.loads(cfg.model_dump_json(by_alias=True))


def _common(fn):
    fn = click.option(
        "--config", "config_path", required=True,
        type=click.Path(exists=True, dir_okay=False),
        help="JSON experiment config.",
    )(fn)
    fn = click.option(
        "--out", "out_dir", default=None, type=click.Path(file_okay=False),
        help="Output directory (overrides config output_dir).",
    )(fn)
    fn = click.option("--seed", default=None, type=int, help="Override config seed.")(fn)
    fn = click.option(
        "--url", default=None,
        help="Remote service URL; by default the service runs in-process.",
    )(fn)
    return fn


def _write_text(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _write_bytes(out_dir: str, name: str, blob: bytes) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "wb") as fh:
        fh.write(blob)
    return path


def _field_b64(path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    with open(path, "rb") as fh:
        return base64.b64encode(fh.read()).decode("ascii")


@click.group()
def main() -> None:
    """Numerical laboratory for the partially confined focusing NLS."""


@main.command("ground-state")
@_common
def ground_state_cmd(config_path, out_dir, seed, url):
    """Compute the ground state; write the field file and summary JSON."""
    cfg = _load_config(config_path, out_dir, seed)
    data = _post(url, "/ground-state", {"config": cfg})
    dest = cfg["output_dir"]
    _write_bytes(dest, GROUND_FIELD, base64.b64decode(data["field_b64"]))
    _write_text(dest, GROUND_SUMMARY, canonical_json(data["summary"]))
    click.echo(canonical_json(data["summary"]), nl=False)


@main.command("classify")
@_common
@click.option(
    "--field", "field_path", default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="Serialized field to classify (default: the config initial data).",
)
@click.option("--beta", default=None, type=float, help="Explicit threshold value.")
def classify_cmd(config_path, out_dir, seed, url, field_path, beta):
    """Classify a field against the threshold; print the membership JSON."""
    cfg = _load_config(config_path, out_dir, seed)
    payload = {"config": cfg, "field_b64": _field_b64(field_path), "beta": beta}
    data = _post(url, "/classify", payload)
    _write_text(cfg["output_dir"], MEMBERSHIP_JSON, canonical_json(data))
    click.echo(canonical_json(data), nl=False)


@main.command("evolve")
@_common
@click.option(
    "--field", "field_path", default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="Serialized initial field (default: the config initial data).",
)
def evolve_cmd(config_path, out_dir, seed, url, field_path):
    """Evolve the initial data; write trace CSV, verdict JSON, plot CSV."""
    cfg = _load_config(config_path, out_dir, seed)
    payload = {"config": cfg, "field_b64": _field_b64(field_path)}
    data = _post(url, "/evolve", payload)
    dest = cfg["output_dir"]
    _write_text(dest, TRACE_CSV, data["trace_csv"])
    _write_text(dest, PLOT_CSV, data["plot_csv"])
    _write_text(dest, VERDICT_JSON, canonical_json(data["verdict"]))
    click.echo(canonical_json(data["verdict"]), nl=False)
    outcome = data["verdict"]["outcome"]
    code = VERDICT_EXIT.get(outcome, EXIT_UNDETERMINED)
    if outcome == UNDETERMINED and data["termination"] == TERMINATED_INVALID:
        code = EXIT_INVALID
    sys.exit(code)


@main.command("sweep")
@_common
@click.option("--param", default="amplitude", show_default=True)
@click.option("--from", "start", required=True, type=float)
@click.option("--to", "stop", required=True, type=float)
@click.option("--steps", required=True, type=int)
@click.option("--bisect/--no-bisect", default=False, show_default=True)
@click.option("--bisect-width", default=None, type=float,
              help="Target bracket width for the bisection refinement.")
def sweep_cmd(config_path, out_dir, seed, url, param, start, stop, steps, bisect, bisect_width):
    """Sweep the initial amplitude; write the sweep table and JSON."""
    cfg = _load_config(config_path, out_dir, seed)
    payload = {
        "config": cfg,
        "param": param,
        "start": start,
        "stop": stop,
        "steps": steps,
        "bisect": bisect,
        "bisect_width": bisect_width,
    }
    data = _post(url, "/sweep", payload)
    dest = cfg["output_dir"]
    _write_text(dest, SWEEP_CSV, data["csv"])
    _write_text(dest, SWEEP_JSON, canonical_json(data["result"]))
    click.echo(canonical_json(data["result"]), nl=False)
    if data["result"]["inconclusive"]:
        click.echo("sweep inconclusive: every run came back Undetermined", err=True)
        sys.exit(EXIT_UNDETERMINED)


@main.command("exponents")
@click.option("--d", "d", type=int, default=None)
@click.option("--n", "n", type=int, default=None)
@click.option("--sigma", type=str, default=None, help='Exact rational, e.g. "3/2".')
@click.option(
    "--config", "config_path", default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="Take (d, n, sigma) from a config's model block instead.",
)
@click.option("--url", default=None)
def exponents_cmd(d, n, sigma, config_path, url):
    """Print the exact exponent family and its condition checks as JSON."""
    if config_path is not None:
        cfg = _load_config(config_path, None, None)
        model = cfg["model"]
        d, n, sigma = model["d"], model["n"], str(model["sigma"])
    if d is None or n is None or sigma is None:
        click.echo("provide --d, --n and --sigma, or --config", err=True)
        sys.exit(EXIT_CONFIG)
    data = _post(url, "/exponents", {"d": d, "n": n, "sigma": sigma})
    click.echo(canonical_json(data), nl=False)


@main.command("linear-decay")
@_common
def linear_decay_cmd(config_path, out_dir, seed, url):
    """Fit the linear decay exponent of the configured packet."""
    cfg = _load_config(config_path, out_dir, seed)
    data = _post(url, "/linear-decay", {"config": cfg})
    _write_text(cfg["output_dir"], DECAY_JSON, canonical_json(data))
    click.echo(canonical_json(data), nl=False)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
