"""Experiment configuration, presets and orchestration.

Configs are INI files.  Every physical key carries its SI unit in the name
(``mirror_mass_kg``, ``dt_s``) so a value can never be read in the wrong
unit.  A config is validated completely, including the physics modules'
own checks, before any computation starts.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classical import (
    ClassicalState,
    bistability_analysis,
    integrate_classical,
    pump_grid,
    steady_state_iterative,
)
from .io import emit_series, write_table
from .observables import compute_series
from .params import ParameterError, RawParams, derive_params, schiller_raw
from .sde import (
    DivergenceWarning,
    EnsembleConfig,
    EnsembleConfigError,
    PhaseSpaceState,
    diffusion_matrix,
    noise_matrix,
    psd_report,
    run_ensemble,
)

KINDS = (
    "unpumped_relaxation", "pumped_dynamics", "bistability_scan",
    "inference", "psd_check", "factorization_check",
)

PHYSICS_KEYS = {
    "mirror_mass_kg": "mirror_mass",
    "mirror_frequency_rad_s": "mirror_frequency",
    "quality_factor": "quality_factor",
    "cavity_length_m": "cavity_length",
    "finesse": "finesse",
    "optical_wavelength_m": "optical_wavelength",
    "laser_power_w": "laser_power",
    "temperature_k": "temperature",
    "detuning_rad_s": "detuning",
}

ENSEMBLE_KEYS = {
    "n_trajectories": ("n_trajectories", int),
    "t_end_s": ("t_end", float),
    "dt_s": ("dt", float),
    "record_stride": ("record_stride", int),
    "seed": ("base_seed", int),
    "initial_state": ("initial_state", str),
    "divergence_threshold": ("divergence_threshold", float),
    "block_size": ("block_size", int),
    "corrector_iterations": ("corrector_iterations", int),
    "noise_substeps": ("noise_substeps", int),
}

SCAN_KEYS = ("detuning_min_gamma", "detuning_max_gamma", "n_detuning", "n_pump", "pump_decades")
SAMPLING_KEYS = ("n_states", "max_amplitude", "seed")
INFERENCE_NAMES = ("sigma_x", "C_xXa", "C_xYa", "C_xNa", "sigma_inf_x_Ya", "sigma_inf_x_Xa", "sigma_inf_x_Na")


class ConfigError(ValueError):
    """Invalid experiment config; ``issues`` lists every (field, message) found."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(f"{f}: {m}" for f, m in self.issues))


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    raw: RawParams
    ensemble: EnsembleConfig | None = None
    initial_states: tuple = ()
    scan: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    out_dir: str = "out"
    source: dict = field(default_factory=dict)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_dict(self.source)
        buf = []
        for sec in cp.sections():
            buf.append(f"[{sec}]")
            buf += [f"{k} = {v}" for k, v in cp[sec].items()]
            buf.append("")
        return "\n".join(buf)


def _schiller_physics(power: float, temperature: float) -> dict:
    raw = schiller_raw(laser_power=power, temperature=temperature)
    return {k: repr(getattr(raw, a)) for k, a in PHYSICS_KEYS.items()}


def _preset(kind, power, temperature, ensemble=None, **extra):
    d = {"experiment": {"kind": kind}, "physics": _schiller_physics(power, temperature)}
    if ensemble:
        d["ensemble"] = {k: str(v) for k, v in ensemble.items()}
    for sec, vals in extra.items():
        d[sec] = {k: str(v) for k, v in vals.items()}
    return d


_GAMMA = derive_params(schiller_raw()).cavity_decay
_PERIOD = 2 * math.pi / (2 * math.pi * 26e3)
_DT = repr(0.01 / _GAMMA)

PRESETS = {
    "schiller_4k_5mw": _preset(
        "pumped_dynamics", 5e-3, 4.2,
        dict(n_trajectories=2000, t_end_s=repr(3 * _PERIOD), dt_s=_DT, record_stride=100,
             seed=1, initial_state="thermal", block_size=100)),
    "schiller_4k_5mw_full": _preset(
        "pumped_dynamics", 5e-3, 4.2,
        dict(n_trajectories=671000, t_end_s=repr(3 * _PERIOD), dt_s=_DT, record_stride=100,
             seed=1, initial_state="thermal", block_size=1000)),
    "schiller_4k_100mw": _preset(
        "pumped_dynamics", 0.1, 4.2,
        dict(n_trajectories=200, t_end_s=repr(12 * _PERIOD), dt_s=_DT, record_stride=400,
             seed=1, initial_state="thermal", block_size=20, divergence_threshold=1e9)),
    "schiller_70k": _preset(
        "unpumped_relaxation", 0.0, 70.0,
        dict(n_trajectories=2000, t_end_s=repr(3 * _PERIOD), dt_s=_DT, record_stride=100,
             seed=1, block_size=100),
        experiment={"kind": "unpumped_relaxation", "initial_states": "coherent, thermal"}),
    "schiller_4k_relaxation": _preset(
        "unpumped_relaxation", 0.0, 4.2,
        dict(n_trajectories=2000, t_end_s=repr(3 * _PERIOD), dt_s=_DT, record_stride=100,
             seed=1, block_size=100),
        experiment={"kind": "unpumped_relaxation", "initial_states": "coherent, thermal"}),
    "schiller_4k_inference": _preset(
        "inference", 5e-3, 4.2,
        dict(n_trajectories=2000, t_end_s=repr(3 * _PERIOD), dt_s=_DT, record_stride=100,
             seed=1, initial_state="thermal", block_size=100)),
    "bistability": _preset(
        "bistability_scan", 5e-3, 4.2,
        scan=dict(detuning_min_gamma=0.0, detuning_max_gamma=3.0, n_detuning=20, n_pump=20, pump_decades=4)),
    "psd": _preset("psd_check", 5e-3, 4.2, sampling=dict(n_states=1000, max_amplitude=1e4, seed=0)),
    "factorization": _preset("factorization_check", 5e-3, 4.2,
                             sampling=dict(n_states=1000, max_amplitude=1e4, seed=0)),
}


def load_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a config given as a path, INI text, preset name or dict.

    ``overrides`` maps ``section.key`` to a replacement string value.

    Raises
    ------
    ConfigError
        Listing every problem found, before anything is computed.
    """
    cp = configparser.ConfigParser(interpolation=None)
    if isinstance(source, dict):
        cp.read_dict(source)
    elif isinstance(source, str) and source in PRESETS:
        cp.read_dict(PRESETS[source])
    elif isinstance(source, (str, os.PathLike)) and Path(source).is_file():
        cp.read(source, encoding="utf-8")
    elif isinstance(source, str) and "[" in source:
        cp.read_string(source)
    else:
        raise ConfigError([("config", f"no such file or preset: {source!s}")])
    for dotted, value in (overrides or {}).items():
        sec, key = dotted.split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp[sec][key] = str(value)
    return _validate(cp, source)


def _num(issues, sec, key, value, conv):
    try:
        v = conv(value)
    except ValueError:
        issues.append((f"{sec}.{key}", f"not a valid {conv.__name__}: {value!r}"))
        return None
    if conv is float and not math.isfinite(v):
        issues.append((f"{sec}.{key}", f"must be finite, got {value!r}"))
        return None
    return v


def _validate(cp: configparser.ConfigParser, source) -> ExperimentConfig:
    issues = []
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    kind = exp.get("kind", "")
    if kind not in KINDS:
        issues.append(("experiment.kind", f"must be one of {KINDS}, got {kind!r}"))
    name = exp.get("name", source if isinstance(source, str) and source in PRESETS else kind)
    for sec in cp.sections():
        known = {"experiment": {"kind", "name", "initial_states"}, "physics": set(PHYSICS_KEYS),
                 "ensemble": set(ENSEMBLE_KEYS), "scan": set(SCAN_KEYS), "sampling": set(SAMPLING_KEYS),
                 "output": {"out_dir"}}.get(sec)
        if known is None:
            issues.append((sec, "unknown section"))
            continue
        for key in cp[sec]:
            if key not in known:
                issues.append((f"{sec}.{key}", "unknown key"))

    phys = cp["physics"] if cp.has_section("physics") else {}
    values = {}
    for key, attr in PHYSICS_KEYS.items():
        if key not in phys:
            if key != "detuning_rad_s":
                issues.append((f"physics.{key}", "missing"))
            continue
        v = _num(issues, "physics", key, phys[key], float)
        if v is not None:
            values[attr] = v
    raw = params = None
    if len(values) >= len(PHYSICS_KEYS) - ("detuning" not in values):
        raw = RawParams(**values)
        try:
            params = derive_params(raw)
        except ParameterError as e:
            key = next(k for k, a in PHYSICS_KEYS.items() if a == e.field)
            issues.append((f"physics.{key}", str(e).split(": ", 1)[1]))

    ens = None
    states = ()
    if kind in ("unpumped_relaxation", "pumped_dynamics", "inference"):
        sec = cp["ensemble"] if cp.has_section("ensemble") else {}
        kw = {}
        for key, (attr, conv) in ENSEMBLE_KEYS.items():
            if key in sec:
                v = sec[key] if conv is str else _num(issues, "ensemble", key, sec[key], conv)
                if v is not None:
                    kw[attr] = v
            elif key in ("n_trajectories", "t_end_s", "dt_s"):
                issues.append((f"ensemble.{key}", "missing"))
        if kind == "unpumped_relaxation":
            states = tuple(s.strip() for s in exp.get("initial_states", "coherent, thermal").split(",") if s.strip())
            kw.pop("initial_state", None)
            kw["initial_state"] = states[0] if states else "thermal"
            if values.get("laser_power", 0.0) != 0.0:
                issues.append(("physics.laser_power_w", "unpumped_relaxation requires 0"))
        if all(k in kw for k in ("n_trajectories", "t_end", "dt")):
            ens = EnsembleConfig(**kw)
            if params is not None:
                for st in states or (ens.initial_state,):
                    try:
                        ens.replace(initial_state=st).validate(params)
                    except EnsembleConfigError as e:
                        issues.append(("ensemble", str(e)))

    scan = {}
    if kind == "bistability_scan":
        sec = cp["scan"] if cp.has_section("scan") else {}
        for key in SCAN_KEYS:
            if key not in sec:
                issues.append((f"scan.{key}", "missing"))
                continue
            conv = int if key.startswith("n_") else float
            v = _num(issues, "scan", key, sec[key], conv)
            if v is not None:
                scan[key] = v
        if scan.get("n_detuning", 1) < 1 or scan.get("n_pump", 1) < 1:
            issues.append(("scan", "grid sizes must be >= 1"))
        if scan.get("pump_decades", 1) <= 0:
            issues.append(("scan.pump_decades", "must be positive"))

    sampling = {}
    if kind in ("psd_check", "factorization_check"):
        sec = cp["sampling"] if cp.has_section("sampling") else {}
        for key, conv, default in (("n_states", int, 1000), ("max_amplitude", float, 1e4), ("seed", int, 0)):
            v = _num(issues, "sampling", key, sec.get(key, str(default)), conv)
            if v is not None:
                sampling[key] = v
        if sampling.get("n_states", 1) < 1 or sampling.get("max_amplitude", 1) <= 0:
            issues.append(("sampling", "n_states must be >= 1 and max_amplitude > 0"))

    if issues:
        raise ConfigError(issues)
    out_dir = cp["output"].get("out_dir", "out") if cp.has_section("output") else "out"
    src = {s: dict(cp[s]) for s in cp.sections()}
    return ExperimentConfig(kind, name, raw, ens, states, scan, sampling, out_dir, src)


# ---------------------------------------------------------------- running

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _params_echo(params) -> dict:
    d = {f.name: getattr(params, f.name) for f in dataclasses.fields(params) if f.name != "raw"}
    d.update(gA=params.gA, thermal_coefficient=params.thermal_coefficient)
    return d


def _ensemble_series(cfg: ExperimentConfig, ens: EnsembleConfig, params, workers, progress, names=None):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DivergenceWarning)
        acc = run_ensemble(ens, params, workers=workers, progress=progress)
    degraded = any(issubclass(w.category, DivergenceWarning) for w in caught)
    return compute_series(acc, params, names), acc, degraded


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int = 1, progress=None) -> dict:
    """Run ``cfg``, write its CSV files and a ``manifest.json``; return the manifest.

    A run whose divergence budget (1% of trajectories) is exceeded still
    writes its outputs, with ``status = "degraded"`` in the manifest.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = derive_params(cfg.raw)
    t0 = time.perf_counter()
    files = []
    diverged = 0
    degraded = False
    info = {}

    if cfg.kind in ("pumped_dynamics", "inference"):
        names = INFERENCE_NAMES if cfg.kind == "inference" else None
        series, acc, degraded = _ensemble_series(cfg, cfg.ensemble, params, workers, progress, names)
        diverged = acc.diverged_count
        p = out / "series.csv"
        emit_series(series, p)
        files.append(p)
        if cfg.kind == "pumped_dynamics":
            ens = cfg.ensemble
            cl = integrate_classical(ClassicalState(0j, 0j), params, params.detuning,
                                     ens.n_steps * ens.dt, ens.dt, ens.record_stride)
            p = out / "classical.csv"
            write_table(p, {"time_s": cl.times, "intensity": cl.intensity, "x_m": cl.x,
                            "alpha_re": cl.alpha.real, "alpha_im": cl.alpha.imag})
            files.append(p)

    elif cfg.kind == "unpumped_relaxation":
        for st in cfg.initial_states:
            ens = cfg.ensemble.replace(initial_state=st)
            series, acc, bad = _ensemble_series(cfg, ens, params, workers, progress,
                                                ("mean_x", "mean_x_imag", "sigma_x", "mean_p", "sigma_p"))
            degraded |= bad
            diverged += acc.diverged_count
            p = out / f"series_{st}.csv"
            emit_series(series, p)
            files.append(p)

    elif cfg.kind == "bistability_scan":
        s = cfg.scan
        gam = params.cavity_decay
        deltas = np.linspace(s["detuning_min_gamma"], s["detuning_max_gamma"], s["n_detuning"]) * gam
        cols = {k: [] for k in ("detuning_rad_s", "pump_s", "n_roots", "root_1", "root_2", "root_3",
                                "turning_upper", "turning_lower", "bistable")}
        windows = {}
        for d in deltas:
            for eps in pump_grid(params, float(d), s["n_pump"], s["pump_decades"]):
                rep = bistability_analysis(params, float(d), float(eps))
                roots = sorted(rep.intensity_roots) + [math.nan] * (3 - len(rep.intensity_roots))
                tp = rep.turning_points or (math.nan, math.nan)
                for k, v in zip(cols, (d, eps, len(rep.intensity_roots), *roots, *tp, int(rep.bistable))):
                    cols[k].append(v)
                windows[float(d)] = windows.get(float(d), False) or len(rep.intensity_roots) == 3
        p = out / "bistability.csv"
        write_table(p, cols)
        files.append(p)
        info["three_root_detunings_over_gamma"] = [d / gam for d, w in windows.items() if w]

    elif cfg.kind in ("psd_check", "factorization_check"):
        rng = np.random.Generator(np.random.SFC64(cfg.sampling["seed"]))
        n, amax = cfg.sampling["n_states"], cfg.sampling["max_amplitude"]
        states = random_states(rng, n, amax)
        if cfg.kind == "factorization_check":
            res = np.array([factorization_residual(z, params) for z in states])
            p = out / "factorization.csv"
            write_table(p, {"state": np.arange(n, dtype=float), "relative_residual": res})
            info["max_relative_residual"] = float(res.max())
        else:
            rep = [psd_report(diffusion_matrix(z, params)) for z in states]
            ss = steady_state_iterative(params, params.detuning)
            z_ss = PhaseSpaceState.classical(ss.alpha_ss, ss.beta_ss)
            ok_ss, lo_ss = psd_report(diffusion_matrix(z_ss, params))
            p = out / "psd.csv"
            write_table(p, {"state": np.arange(n, dtype=float), "psd": np.array([float(r[0]) for r in rep]),
                            "min_eigenvalue": np.array([r[1] for r in rep])})
            info.update(steady_state_psd=bool(ok_ss), steady_state_min_eigenvalue=lo_ss,
                        psd_fraction=float(np.mean([r[0] for r in rep])))
        files.append(p)

    manifest = {
        "software": {"name": "pendular", "version": __version__},
        "experiment": {"kind": cfg.kind, "name": cfg.name},
        "config": cfg.source,
        "params": _params_echo(params),
        "seeds": {"base_seed": cfg.ensemble.base_seed} if cfg.ensemble else
                 ({"sampling_seed": cfg.sampling["seed"]} if cfg.sampling else {}),
        "wall_clock_s": time.perf_counter() - t0,
        "diverged_count": diverged,
        "status": "degraded" if degraded else "ok",
        "results": info,
        "files": {f.name: _sha256(f) for f in files},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def random_states(rng: np.random.Generator, n: int, max_amplitude: float) -> list[PhaseSpaceState]:
    """States with independent moduli up to ``max_amplitude`` and uniform phases."""
    mod = rng.uniform(0, max_amplitude, (n, 4))
    ph = rng.uniform(0, 2 * np.pi, (n, 4))
    z = mod * np.exp(1j * ph)
    return [PhaseSpaceState.from_array(r) for r in z]


def factorization_residual(state, params) -> float:
    """Largest entrywise relative residual of N N^T against D.

    Entries where D vanishes are measured against the largest |D| entry,
    since there the residual is pure cancellation rounding.
    """
    N = noise_matrix(state, params)
    D = diffusion_matrix(state, params)
    scale = np.abs(D)
    scale = np.where(scale > 0, scale, scale.max())
    return float(np.max(np.abs(N @ N.T - D) / scale))
