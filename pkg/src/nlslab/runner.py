"""Experiment operations behind the service and the CLI.

Each run_* function turns a validated config into in-memory artifacts
(summaries, traces, verdicts, sweep tables, decay fits); the persist_*
helpers write them as byte-stable JSON and CSV.  Nothing here touches the
filesystem except the field-file reads requested by the config, the
threshold cache, and the persist step, so the service can stay stateless.
"""

import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ExperimentConfig
from .diagnostics import (
    KMINUS,
    UNDETERMINED,
    Classification,
    Verdict,
    classify,
    detect,
)
from .exponents import exponent_set, rational_repr
from .functionals import evaluate, galilean_boost
from .ground_state import GroundStateResult, minimize_dab, petviashvili
from .lattice import Field, ensure_physical, gaussian_field, read_field, write_field
from .model import ModelParams
from .propagator import EvolutionTrace, evolve, linear_evolve

__all__ = [
    "DECAY_JSON",
    "GROUND_FIELD",
    "GROUND_SUMMARY",
    "MEMBERSHIP_JSON",
    "PLOT_CSV",
    "SWEEP_CSV",
    "SWEEP_JSON",
    "TRACE_CSV",
    "VERDICT_JSON",
    "EvolveArtifacts",
    "GroundStateArtifacts",
    "StaleCache",
    "build_initial",
    "canonical_json",
    "check_field_matches",
    "persist_evolve",
    "persist_ground_state",
    "resolve_ground_state",
    "run_classify",
    "run_evolve",
    "run_ground_state",
    "run_linear_decay",
    "run_sweep",
    "trace_csv",
]

GROUND_FIELD = "Q.field"
GROUND_SUMMARY = "ground_state.json"
TRACE_CSV = "trace.csv"
VERDICT_JSON = "verdict.json"
PLOT_CSV = "plot.csv"
SWEEP_CSV = "sweep.csv"
SWEEP_JSON = "sweep.json"
DECAY_JSON = "linear_decay.json"
MEMBERSHIP_JSON = "membership.json"

GROUND_TOL = 1e-13
GROUND_MAX_ITER = 400
DECAY_FIT_WINDOW = (5.0, 50.0)
DECAY_SAMPLES = 24
SWEEP_WORKERS = 4


class StaleCache(ValueError):
    """A cached threshold whose grid or sigma differ from the config."""


# ---------------------------------------------------------------------------
# byte-stable serialization


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return rational_repr(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, two-space indent, trailing newline; floats use the
    shortest round-trip form, so identical values give identical bytes."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# initial data


def _model_header(cfg: ExperimentConfig) -> dict:
    params = cfg.model.to_params()
    return {
        "d": params.d,
        "n": params.n,
        "sigma": rational_repr(params.sigma),
        "lambda": params.lam,
        "hermite_modes": cfg.grid.hermite_modes,
        "z_points": [p for p, _ in cfg.grid.axes()],
        "z_length": [length for _, length in cfg.grid.axes()],
    }


def check_field_matches(f: Field, cfg: ExperimentConfig) -> None:
    params, grid = cfg.model.to_params(), cfg.grid.to_grid()
    if f.params != params:
        raise ValueError(
            f"field file header {f.params} does not match the config model {params}"
        )
    if f.grid != grid:
        raise ValueError("field file grid does not match the config grid")


def build_initial(
    cfg: ExperimentConfig, ground: Optional[GroundStateResult] = None
) -> Field:
    """Construct the configured initial condition."""
    params, grid = cfg.model.to_params(), cfg.grid.to_grid()
    init = cfg.initial
    if init.kind == "gaussian":
        return gaussian_field(
            params,
            grid,
            amplitude=init.amplitude,
            width_y=init.width_y,
            width_z=init.width_z,
            offset_z=init.offset_z,
            phase_velocity=init.phase_velocity,
        )
    if init.kind == "ground_state_scaled":
        if ground is None:
            _, ground, _ = resolve_ground_state(cfg)
        return ground.Q.with_data(init.amplitude * ground.Q.data)
    f = read_field(init.path)
    check_field_matches(f, cfg)
    return f


# ---------------------------------------------------------------------------
# ground state and the threshold cache


@dataclass(frozen=True)
class GroundStateArtifacts:
    summary: dict
    Q: Field


def run_ground_state(cfg: ExperimentConfig) -> GroundStateArtifacts:
    """Compute the config-grid ground state, its threshold, and the two
    scaling-minimum cross-checks."""
    params, grid = cfg.model.to_params(), cfg.grid.to_grid()
    res = petviashvili(params, grid, tol=GROUND_TOL, max_iter=GROUND_MAX_ITER)
    rep = evaluate(res.Q)
    k = params.free_dim
    _, d_nehari = minimize_dab(params, grid, 1.0, 0.0)
    _, d_pohozaev = minimize_dab(params, grid, 1.0, -2.0 / k)
    summary = {
        "header": _model_header(cfg),
        "beta": res.beta,
        "residual": res.residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "I_of_Q": rep.I,
        "P_of_Q": rep.P,
        "B1sq": rep.B1sq,
        "d_1_0": d_nehari,
        "d_1_m2k": d_pohozaev,
        "d_1_0_rel_delta": abs(d_nehari - res.beta) / res.beta,
        "d_1_m2k_rel_delta": abs(d_pohozaev - res.beta) / res.beta,
    }
    return GroundStateArtifacts(summary=summary, Q=res.Q)


def persist_ground_state(art: GroundStateArtifacts, out_dir: str) -> Dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    field_path = os.path.join(out_dir, GROUND_FIELD)
    summary_path = os.path.join(out_dir, GROUND_SUMMARY)
    write_field(art.Q, field_path)
    _write(summary_path, canonical_json(art.summary))
    return {"field": field_path, "summary": summary_path}


def resolve_ground_state(
    cfg: ExperimentConfig,
) -> Tuple[float, GroundStateResult, str]:
    """Threshold value for the config model: from the cache in output_dir
    when present, otherwise computed fresh.

    A cache whose sigma or grid differ from the config is refused rather
    than silently recomputed, so mixed artifacts cannot end up in one
    directory.
    """
    summary_path = os.path.join(cfg.output_dir, GROUND_SUMMARY)
    field_path = os.path.join(cfg.output_dir, GROUND_FIELD)
    if os.path.exists(summary_path) and os.path.exists(field_path):
        with open(summary_path, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
        cached, wanted = summary.get("header", {}), _model_header(cfg)
        if cached != wanted:
            raise StaleCache(
                f"cached threshold in {cfg.output_dir!r} was computed for "
                f"{cached}, but the config asks for {wanted}"
            )
        Q = read_field(field_path)
        check_field_matches(Q, cfg)
        rep = evaluate(Q)
        res = GroundStateResult(
            Q=Q,
            beta=float(summary["beta"]),
            residual=float(summary["residual"]),
            iterations=int(summary["iterations"]),
            converged=bool(summary["converged"]),
        )
        return res.beta, res, "cache"
    params, grid = cfg.model.to_params(), cfg.grid.to_grid()
    res = petviashvili(params, grid, tol=GROUND_TOL, max_iter=GROUND_MAX_ITER)
    return res.beta, res, "computed"


# ---------------------------------------------------------------------------
# classification


def run_classify(
    cfg: ExperimentConfig,
    field: Optional[Field] = None,
    beta: Optional[float] = None,
) -> dict:
    """Membership report for the configured (or given) field.

    Fields carrying momentum also get the zero-momentum reduction: the
    report includes G and the classification of the boosted field.
    """
    if beta is None:
        beta, ground, source = resolve_ground_state(cfg)
    else:
        ground, source = None, "explicit"
    if field is None:
        field = build_initial(cfg, ground=ground)
    cls = classify(field, beta)
    out = _membership_dict(cls)
    out["beta_source"] = source
    rep = evaluate(field)
    if max(abs(g) for g in rep.G) > 1e-12 * max(rep.M, 1.0):
        boosted = classify(galilean_boost(field), beta)
        out["G"] = list(rep.G)
        out["boosted"] = _membership_dict(boosted)
    return out


def _membership_dict(cls: Classification) -> dict:
    out = {
        "membership": cls.outcome,
        "S": cls.S,
        "I": cls.I,
        "P": cls.P,
        "beta": cls.beta,
        "sign_agreement": cls.sign_agreement,
    }
    if cls.outcome == KMINUS:
        out["gap_bound"] = cls.gap_bound
    return out


# ---------------------------------------------------------------------------
# evolution


@dataclass(frozen=True)
class EvolveArtifacts:
    verdict: Verdict
    trace: EvolutionTrace
    trace_csv: str
    plot_csv: str


def _blowup_stop(base: float, factor: float):
    def stop(t: float, u: Field) -> Optional[str]:
        del t
        rep = evaluate(u)
        if base > 0.0 and rep.grady_sq + rep.gradz_sq >= factor * base:
            return "blowup-trigger"
        return None

    return stop


def trace_csv(trace: EvolutionTrace) -> str:
    k = trace.G.shape[1] if trace.G.ndim == 2 else 1
    header = (
        ["t", "M", "E"]
        + [f"Gz{a + 1}" for a in range(k)]
        + ["gradx_sq", "L2s2s2", "profile_B1", "tail"]
    )
    g = trace.G.reshape(len(trace), k)
    rows = [
        [trace.times[i], trace.M[i], trace.E[i]]
        + [g[i, a] for a in range(k)]
        + [trace.gradx_sq[i], trace.L2s2s2[i], trace.profile_B1[i], trace.tail[i]]
        for i in range(len(trace))
    ]
    return _csv(header, rows)


def _plot_csv(trace: EvolutionTrace) -> str:
    base = trace.gradx_sq[0] if trace.gradx_sq[0] > 0.0 else 1.0
    running_max = np.maximum.accumulate(trace.L2s2s2)
    frac = trace.L2s2s2 / np.where(running_max > 0.0, running_max, 1.0)
    header = ["t", "gradx_ratio", "l2s2s2_frac", "profile_B1", "tail"]
    columns = [
        trace.times,
        trace.gradx_sq / base,
        frac,
        trace.profile_B1,
        trace.tail,
    ]
    for name in sorted(trace.extras):
        header.append(name)
        columns.append(trace.extras[name])
    rows = list(zip(*columns))
    return _csv(header, rows)


def run_evolve(cfg: ExperimentConfig, field: Optional[Field] = None) -> EvolveArtifacts:
    """Evolve the configured initial condition and apply the detectors."""
    f0 = field if field is not None else build_initial(cfg)
    det = cfg.detectors
    rep0 = evaluate(f0)
    stop = _blowup_stop(rep0.grady_sq + rep0.gradz_sq, det.blowup_factor)
    trace = evolve(
        f0,
        T=cfg.time.t_max,
        dt=cfg.time.dt,
        sample_stride=cfg.time.sample_stride,
        stop_conditions=(stop,),
    )
    verdict = detect(
        trace,
        blowup_factor=det.blowup_factor,
        scatter_frac=det.scatter_frac,
        scatter_tol=det.scatter_tol,
        window_frac=det.window_frac,
        growth_seq_factor=det.growth_seq_factor,
        tail_valid=det.tail_valid,
    )
    return EvolveArtifacts(
        verdict=verdict,
        trace=trace,
        trace_csv=trace_csv(trace),
        plot_csv=_plot_csv(trace),
    )


def persist_evolve(art: EvolveArtifacts, out_dir: str) -> Dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "trace": os.path.join(out_dir, TRACE_CSV),
        "verdict": os.path.join(out_dir, VERDICT_JSON),
        "plot": os.path.join(out_dir, PLOT_CSV),
    }
    _write(paths["trace"], art.trace_csv)
    _write(paths["verdict"], canonical_json(art.verdict.as_dict()))
    _write(paths["plot"], art.plot_csv)
    return paths


# ---------------------------------------------------------------------------
# amplitude sweep


def _with_amplitude(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    copy = cfg.model_copy(deep=True)
    copy.initial.amplitude = float(value)
    return copy


def _sweep_point(cfg: ExperimentConfig, beta: float, ground, value: float) -> dict:
    cfg_v = _with_amplitude(cfg, value)
    f0 = build_initial(cfg_v, ground=ground)
    cls = classify(f0, beta)
    art = run_evolve(cfg_v, field=f0)
    return {
        "value": float(value),
        "S": cls.S,
        "P": cls.P,
        "membership": cls.outcome,
        "outcome": art.verdict.outcome,
        "valid": art.verdict.valid,
    }


def run_sweep(
    cfg: ExperimentConfig,
    start: float,
    stop: float,
    steps: int,
    param: str = "amplitude",
    bisect: bool = False,
    bisect_width: Optional[float] = None,
) -> dict:
    """Map run_evolve over an amplitude range and report the transition.

    Rows are ordered by parameter value; the verdict bracket only pairs
    valid verdicts.  With bisect=True the dynamic transition is refined to
    bisect_width by extra runs inside the bracket.
    """
    if param != "amplitude":
        raise ValueError(f"sweep parameter must be 'amplitude', got {param!r}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if start <= 0.0 or stop <= 0.0:
        raise ValueError("amplitude sweep bounds must be positive")
    values = [float(v) for v in np.linspace(start, stop, steps)]
    beta, ground, beta_source = resolve_ground_state(cfg)
    workers = min(SWEEP_WORKERS, len(values))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda v: _sweep_point(cfg, beta, ground, v), values))

    result = {
        "param": param,
        "values": values,
        "beta": beta,
        "beta_source": beta_source,
        "rows": rows,
        "membership_bracket": _flip_bracket(rows, key="membership"),
        "verdict_bracket": _flip_bracket(rows, key="outcome", require_valid=True),
        "inconclusive": all(r["outcome"] == UNDETERMINED for r in rows),
    }
    if bisect and result["verdict_bracket"] is not None:
        lo, hi = result["verdict_bracket"]
        width = bisect_width if bisect_width else (hi - lo) / 8.0
        result["bisection"] = _bisect_transition(cfg, beta, ground, lo, hi, width)
    return result


def _flip_bracket(rows: List[dict], key: str, require_valid: bool = False):
    for a, b in zip(rows, rows[1:]):
        if require_valid and not (a["valid"] and b["valid"]):
            continue
        if require_valid and UNDETERMINED in (a["outcome"], b["outcome"]):
            continue
        if a[key] != b[key]:
            return [a["value"], b["value"]]
    return None


def _bisect_transition(cfg, beta, ground, lo: float, hi: float, width: float) -> dict:
    lo_row = _sweep_point(cfg, beta, ground, lo)
    runs = [lo_row]
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        row = _sweep_point(cfg, beta, ground, mid)
        runs.append(row)
        if row["outcome"] == lo_row["outcome"] and row["valid"]:
            lo, lo_row = mid, row
        else:
            hi = mid
    return {"bracket": [lo, hi], "width": hi - lo, "runs": runs}


def sweep_csv(result: dict) -> str:
    header = ["value", "S", "P", "membership", "outcome"]
    rows = [[r["value"], r["S"], r["P"], r["membership"], r["outcome"]] for r in result["rows"]]
    return _csv(header, rows)


# ---------------------------------------------------------------------------
# linear decay fit


def _lr_norm(f: Field, r: float) -> float:
    phys = ensure_physical(f)
    grid = f.grid
    w = grid.weights.reshape((-1,) + (1,) * grid.free_dim)
    dens = (phys.data * np.conj(phys.data)).real
    return float((w * dens ** (r / 2.0)).sum() * grid.cell_volume) ** (1.0 / r)


def run_linear_decay(cfg: ExperimentConfig) -> dict:
    """Fit the free-flight decay rate of the configured packet.

    The nonlinearity-off evolution is evaluated exactly at geometrically
    spaced times in the fit window, the L^r norm (r = 2 sigma + 2) is
    regressed against time on log-log axes, and the slope is compared with
    the rate the exponent family predicts.
    """
    params = cfg.model.to_params()
    es = exponent_set(params.d, params.n, params.sigma)
    r = float(es.r)
    f0 = build_initial(cfg)
    t_lo, t_hi = DECAY_FIT_WINDOW
    times = np.geomspace(t_lo, t_hi, DECAY_SAMPLES)
    norms = np.array([_lr_norm(linear_evolve(f0, float(t)), r) for t in times])
    if not (norms > 0.0).all():
        raise ValueError("decay fit needs strictly positive norms")
    slope = float(np.polyfit(np.log(times), np.log(norms), 1)[0])
    fitted = -slope
    delta = float(es.delta)
    rel = abs(fitted - delta) / delta
    return {
        "d": params.d,
        "n": params.n,
        "sigma": rational_repr(params.sigma),
        "r": rational_repr(es.r),
        "delta": rational_repr(es.delta),
        "delta_float": delta,
        "fitted_exponent": fitted,
        "relative_error": rel,
        "within_tolerance": rel <= 0.1,
        "fit_window": [t_lo, t_hi],
        "times": [float(t) for t in times],
        "norms": [float(v) for v in norms],
    }
