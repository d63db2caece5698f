"""Declarative Monte-Carlo experiment harness.

Experiments are described by a JSON config (one family per run), executed
over independent trials with counter-based seeding, and persisted as CSV.
Identical config + seed gives byte-identical CSV (excluding the
wall-time column) regardless of the worker count: workers only compute
per-trial results, aggregation always happens in trial order.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import precoders as pc
from .constellation import Constellation, bundled_constellation, load_constellation, make_standard
from .system_model import (
    SymbolAssignment,
    add_noise,
    assemble,
    ml_detect,
    rng_stream,
    sample_channel,
)

FAMILIES = (
    "feasibility_sweep",
    "throughput_sweep",
    "ser_sweep",
    "maxmin_sweep",
    "dimension_sweep",
    "bcd_convergence",
)

MAXMIN_METHODS = ("exhaustive", "relaxed", "bcd", "bcd_warm", "bisection", "zf_baseline")

CSV_HEADER = ("family", "method", "N", "K", "axis_value", "metric_name",
              "metric_value", "trials_used", "seed", "wall_time_ms")

_KNOWN_KEYS = {
    "family", "n", "k", "dims", "constellation", "methods", "p_dbw",
    "snr_db", "trials", "frame_length", "seed", "sigma", "epsilon",
    "max_iter", "n_delta", "interval",
}


class ConfigError(ValueError):
    """Raised for malformed experiment configs."""


def db_to_linear(x_db: float) -> float:
    return float(10.0 ** (np.asarray(x_db, dtype=float) / 10.0))


def linear_to_db(x: float) -> float:
    return float(10.0 * np.log10(x))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment family plus its sweep axes, fully seed-determined."""

    family: str
    constellation: Constellation
    seed: int
    trials: int
    n: int = 0
    k: int = 0
    dims: tuple = ()
    methods: tuple = ()
    p_dbw: tuple = ()
    snr_db: tuple = ()
    frame_length: int = 500
    sigma: float = 1.0
    epsilon: float = 1e-3
    max_iter: int = 100
    n_delta: int = 5
    interval: tuple = (0.0, 2.5)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.family in ("dimension_sweep", "bcd_convergence"):
            if not self.dims:
                raise ConfigError(f"{self.family} needs a dims list")
        elif self.n < 1 or self.k < 1:
            raise ConfigError("n and k must be >= 1")
        if self.family == "feasibility_sweep" and not (self.p_dbw and self.snr_db):
            raise ConfigError("feasibility_sweep needs p_dbw and snr_db lists")
        if self.family in ("throughput_sweep", "ser_sweep") and not self.snr_db:
            raise ConfigError(f"{self.family} needs an snr_db list")
        if self.family in ("maxmin_sweep", "dimension_sweep", "bcd_convergence") \
                and not self.p_dbw:
            raise ConfigError(f"{self.family} needs a p_dbw list")
        if self.family == "maxmin_sweep":
            bad = [m for m in self.methods if m not in MAXMIN_METHODS]
            if bad:
                raise ConfigError(f"unknown maxmin methods: {bad}")
            if not self.methods:
                raise ConfigError("maxmin_sweep needs a methods list")


def _parse_constellation(ref) -> Constellation:
    if isinstance(ref, dict):
        if "file" in ref:
            return load_constellation(ref["file"])
        if "bundled" in ref:
            return bundled_constellation(ref["bundled"])
        if "kind" in ref and "order" in ref:
            return make_standard(ref["kind"], int(ref["order"]))
    raise ConfigError(
        "constellation must be {'kind','order'}, {'file': path}, or {'bundled': name}"
    )


def load_config(file) -> ExperimentConfig:
    """Parse an ExperimentConfig from JSON; unknown keys are rejected."""
    path = Path(file)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for req in ("family", "constellation", "seed", "trials"):
        if req not in raw:
            raise ConfigError(f"missing required config key {req!r}")
    kwargs = dict(
        family=str(raw["family"]),
        constellation=_parse_constellation(raw["constellation"]),
        seed=int(raw["seed"]),
        trials=int(raw["trials"]),
    )
    for key in ("n", "k", "frame_length", "max_iter", "n_delta"):
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("sigma", "epsilon"):
        if key in raw:
            kwargs[key] = float(raw[key])
    for key in ("dims", "p_dbw", "snr_db"):
        if key in raw:
            kwargs[key] = tuple(float(v) if key != "dims" else int(v)
                                for v in raw[key])
    if "methods" in raw:
        kwargs["methods"] = tuple(str(m) for m in raw["methods"])
    if "interval" in raw:
        iv = raw["interval"]
        if not (isinstance(iv, (list, tuple)) and len(iv) == 2):
            raise ConfigError("interval must be [lo, hi]")
        kwargs["interval"] = (float(iv[0]), float(iv[1]))
    return ExperimentConfig(**kwargs)


@dataclass(frozen=True)
class ResultRecord:
    family: str
    method: str
    N: int
    K: int
    axis_value: float
    metric_name: str
    metric_value: float
    trials_used: int
    seed: int
    wall_time_ms: float = 0.0

    def row(self) -> list:
        v = self.metric_value
        if isinstance(v, float) and not np.isfinite(v):
            v = "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        elif isinstance(v, float) and np.isnan(v):
            v = "nan"
        return [self.family, self.method, self.N, self.K,
                f"{self.axis_value:g}", self.metric_name, repr(float(v)) if
                isinstance(v, float) else v, self.trials_used, self.seed,
                f"{self.wall_time_ms:.3f}"]


def write_csv(records, file) -> None:
    """RFC-4180 CSV with LF line endings."""
    with open(file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())


def write_jsonl(records, file) -> None:
    with open(file, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(dict(zip(CSV_HEADER, r.row()))) + "\n")


def _map_trials(fn, trials: int, threads: int) -> list:
    """Run fn(trial) for each trial; results always come back in trial order."""
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _draw_symbols(cfg: ExperimentConfig, trial: int, k: int,
                  purpose: str = "symbols") -> np.ndarray:
    rng = rng_stream(cfg.seed, trial, purpose)
    return rng.integers(0, cfg.constellation.size, size=k)


# ---------------------------------------------------------------------------
# family runners

def run_feasibility_sweep(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Fraction of (channel, symbol-vector) draws passing the sufficient
    zero-forcing power test, per (gamma, P) pair.  Symbol vectors are
    sampled uniformly rather than enumerated."""
    t0 = time.perf_counter()

    def one_trial(t):
        ch = sample_channel(cfg.n, cfg.k, rng_stream(cfg.seed, t, "channel"))
        idx = _draw_symbols(cfg, t, cfg.k)
        a = SymbolAssignment.uniform(idx, cfg.sigma, 1.0)
        sys = assemble(ch, cfg.constellation, a)
        # zf power scales linearly in gamma: compute once at gamma = 1
        return pc.feasibility_check(sys, np.inf).zf_power

    base_powers = _map_trials(one_trial, cfg.trials, threads)
    records = []
    for g_db in cfg.snr_db:
        g = db_to_linear(g_db)
        for p_db in cfg.p_dbw:
            p = db_to_linear(p_db)
            hits = sum(1 for bp in base_powers if g * bp <= p + 1e-9)
            records.append(ResultRecord(
                cfg.family, f"gamma{g_db:g}dB", cfg.n, cfg.k, p_db,
                "feasibility_probability", hits / cfg.trials, cfg.trials,
                cfg.seed, (time.perf_counter() - t0) * 1e3))
    return records


def _run_frame(cfg: ExperimentConfig, trial: int, gamma: float):
    """One frame at a fixed channel: per-slot power minimization, noise,
    detection.  Returns (ser, throughput, mean power, invalid frames)."""
    M = cfg.constellation.size
    for attempt in range(20):
        tag = f"a{attempt}"
        ch = sample_channel(cfg.n, cfg.k,
                            rng_stream(cfg.seed, trial, f"channel_{tag}"))
        idx_all = rng_stream(cfg.seed, trial, f"symbols_{tag}").integers(
            0, M, size=(cfg.frame_length, cfg.k))
        noise_rng = rng_stream(cfg.seed, trial, f"noise_{tag}")
        errors = np.zeros(cfg.k)
        power = np.zeros(cfg.k)
        valid = True
        for s in range(cfg.frame_length):
            a = SymbolAssignment.uniform(idx_all[s], cfg.sigma, gamma)
            sys = assemble(ch, cfg.constellation, a)
            sol = pc.power_min_qp(sys)
            if sol.status != "optimal":
                valid = False
                break
            y = sys.received(sol.u_real)
            power += np.sum(y**2, axis=1)
            r = add_noise(y, cfg.sigma, noise_rng)
            # received points live in the scaled region sigma sqrt(gamma) D:
            # detection is against the correspondingly scaled constellation
            scale = cfg.sigma * np.sqrt(gamma)
            for k in range(cfg.k):
                if ml_detect(r[k] / scale, cfg.constellation) != idx_all[s, k]:
                    errors[k] += 1
        if valid:
            ser = errors / cfg.frame_length
            mean_pow = power / cfg.frame_length
            thr = (1.0 - ser) * np.log2(1.0 + mean_pow)
            return float(ser.mean()), float(thr.mean()), float(mean_pow.mean()), attempt
    raise RuntimeError(f"trial {trial}: no feasible frame in 20 attempts")


def run_ser_throughput(cfg: ExperimentConfig, threads: int = 1) -> list:
    """SER / throughput sweeps over the SINR threshold (Monte-Carlo frames
    of per-slot power minimization)."""
    records = []
    for g_db in cfg.snr_db:
        t0 = time.perf_counter()
        gamma = db_to_linear(g_db)
        out = _map_trials(lambda t: _run_frame(cfg, t, gamma),
                          cfg.trials, threads)
        ser = float(np.mean([o[0] for o in out]))
        thr = float(np.mean([o[1] for o in out]))
        invalid = int(sum(o[3] for o in out))
        ms = (time.perf_counter() - t0) * 1e3
        metric = "ser" if cfg.family == "ser_sweep" else "throughput_bits"
        value = ser if cfg.family == "ser_sweep" else thr
        records.append(ResultRecord(cfg.family, "power_min_qp", cfg.n, cfg.k,
                                    g_db, metric, value, cfg.trials, cfg.seed, ms))
        records.append(ResultRecord(cfg.family, "power_min_qp", cfg.n, cfg.k,
                                    g_db, "invalid_frames", float(invalid),
                                    cfg.trials, cfg.seed, ms))
    return records


def _maxmin_solver(method: str, sys, sigma: float, mm: pc.MaxMinConfig):
    if method == "exhaustive":
        return pc.maxmin_exhaustive(sys, sigma, mm)
    if method == "relaxed":
        return pc.maxmin_relaxed(sys, sigma, mm)
    if method == "bcd":
        return pc.maxmin_bcd(sys, sigma, mm, warm_start=False)
    if method == "bcd_warm":
        return pc.maxmin_bcd(sys, sigma, mm, warm_start=True)
    if method == "bisection":
        return pc.maxmin_bisection(sys, sigma, mm)
    if method == "zf_baseline":
        return pc.zf_maxmin_baseline(sys, sigma, mm.p_max)
    raise ConfigError(f"unknown method {method!r}")


def run_maxmin_sweep(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Mean worst-user SINR (dB) per method per power budget; every method
    sees the same channel/symbol draw within a trial."""
    records = []
    for p_db in cfg.p_dbw:
        p = db_to_linear(p_db)
        mm = pc.MaxMinConfig(p_max=p, epsilon=cfg.epsilon,
                             max_iter=cfg.max_iter, n_delta=cfg.n_delta,
                             interval=cfg.interval)

        def one_trial(t):
            ch = sample_channel(cfg.n, cfg.k, rng_stream(cfg.seed, t, "channel"))
            idx = _draw_symbols(cfg, t, cfg.k)
            a = SymbolAssignment.uniform(idx, cfg.sigma, 1.0)
            sys = assemble(ch, cfg.constellation, a)
            out = {}
            for m in cfg.methods:
                try:
                    sol = _maxmin_solver(m, sys, cfg.sigma, mm)
                except pc.PrecoderError:
                    out[m] = None
                    continue
                out[m] = (sol.min_sinr_achieved
                          if sol.status in ("optimal", "max_iter") else np.nan)
            return out

        t0 = time.perf_counter()
        results = _map_trials(one_trial, cfg.trials, threads)
        ms = (time.perf_counter() - t0) * 1e3
        for m in cfg.methods:
            vals = [r[m] for r in results]
            if all(v is None for v in vals):
                records.append(ResultRecord(cfg.family, m, cfg.n, cfg.k, p_db,
                                            "skipped_incompatible", float("nan"),
                                            0, cfg.seed, ms))
                continue
            sinr_db = [linear_to_db(v) for v in vals
                       if v is not None and np.isfinite(v) and v > 0]
            records.append(ResultRecord(cfg.family, m, cfg.n, cfg.k, p_db,
                                        "mean_min_sinr_db",
                                        float(np.mean(sinr_db)) if sinr_db else float("nan"),
                                        len(sinr_db), cfg.seed, ms))
    return records


def run_dimension_sweep(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Mean worst-user SINR versus system dimension (N = K) per power."""
    methods = cfg.methods or ("relaxed",)
    records = []
    for dim in cfg.dims:
        for p_db in cfg.p_dbw:
            p = db_to_linear(p_db)
            mm = pc.MaxMinConfig(p_max=p, epsilon=cfg.epsilon,
                                 max_iter=cfg.max_iter, n_delta=cfg.n_delta,
                                 interval=cfg.interval)

            def one_trial(t):
                ch = sample_channel(dim, dim,
                                    rng_stream(cfg.seed, t, f"channel_N{dim}"))
                idx = _draw_symbols(cfg, t, dim, purpose=f"symbols_N{dim}")
                a = SymbolAssignment.uniform(idx, cfg.sigma, 1.0)
                sys = assemble(ch, cfg.constellation, a)
                out = {}
                for m in methods:
                    try:
                        sol = _maxmin_solver(m, sys, cfg.sigma, mm)
                    except pc.PrecoderError:
                        out[m] = None
                        continue
                    out[m] = (sol.min_sinr_achieved
                              if sol.status in ("optimal", "max_iter") else np.nan)
                return out

            t0 = time.perf_counter()
            results = _map_trials(one_trial, cfg.trials, threads)
            ms = (time.perf_counter() - t0) * 1e3
            for m in methods:
                vals = [r[m] for r in results]
                sinr_db = [linear_to_db(v) for v in vals
                           if v is not None and np.isfinite(v) and v > 0]
                records.append(ResultRecord(
                    cfg.family, f"{m}@{p_db:g}dBW", dim, dim, float(dim),
                    "mean_min_sinr_db",
                    float(np.mean(sinr_db)) if sinr_db else float("nan"),
                    len(sinr_db), cfg.seed, ms))
    return records


def run_bcd_convergence(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Iteration counts of the alternating balancer per dimension per power."""
    records = []
    for dim in cfg.dims:
        for p_db in cfg.p_dbw:
            p = db_to_linear(p_db)
            mm = pc.MaxMinConfig(p_max=p, epsilon=cfg.epsilon,
                                 max_iter=cfg.max_iter, n_delta=cfg.n_delta,
                                 interval=cfg.interval)

            def one_trial(t):
                ch = sample_channel(dim, dim,
                                    rng_stream(cfg.seed, t, f"channel_N{dim}"))
                idx = _draw_symbols(cfg, t, dim, purpose=f"symbols_N{dim}")
                a = SymbolAssignment.uniform(idx, cfg.sigma, 1.0)
                sys = assemble(ch, cfg.constellation, a)
                sol = pc.maxmin_bcd(sys, cfg.sigma, mm)
                return sol.info.get("iterations", 0), sol.status == "max_iter"

            t0 = time.perf_counter()
            results = _map_trials(one_trial, cfg.trials, threads)
            ms = (time.perf_counter() - t0) * 1e3
            iters = [r[0] for r in results]
            hits = sum(1 for r in results if r[1])
            records.append(ResultRecord(
                cfg.family, f"bcd@{p_db:g}dBW", dim, dim, float(dim),
                "mean_iterations", float(np.mean(iters)), cfg.trials,
                cfg.seed, ms))
            records.append(ResultRecord(
                cfg.family, f"bcd@{p_db:g}dBW", dim, dim, float(dim),
                "max_iter_hits", float(hits), cfg.trials, cfg.seed, ms))
    return records


_RUNNERS = {
    "feasibility_sweep": run_feasibility_sweep,
    "throughput_sweep": run_ser_throughput,
    "ser_sweep": run_ser_throughput,
    "maxmin_sweep": run_maxmin_sweep,
    "dimension_sweep": run_dimension_sweep,
    "bcd_convergence": run_bcd_convergence,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Dispatch a config to its family runner."""
    return _RUNNERS[cfg.family](cfg, threads=threads)


# ---------------------------------------------------------------------------
# scatter dump (noise-free received points for the plotting component)

def scatter_records(cfg: ExperimentConfig, method: str = "power_min_qp",
                    threads: int = 1) -> list:
    """Per-slot noise-free received points as (user, re, im, symbol_index,
    method) rows; one slot per trial."""
    if cfg.family == "maxmin_sweep":
        p = db_to_linear(cfg.p_dbw[0])
        mm = pc.MaxMinConfig(p_max=p, epsilon=cfg.epsilon,
                             max_iter=cfg.max_iter, n_delta=cfg.n_delta,
                             interval=cfg.interval)
    else:
        mm = None
    gamma = db_to_linear(cfg.snr_db[0]) if cfg.snr_db else 1.0

    def one_trial(t):
        ch = sample_channel(cfg.n, cfg.k, rng_stream(cfg.seed, t, "channel"))
        idx = _draw_symbols(cfg, t, cfg.k)
        a = SymbolAssignment.uniform(idx, cfg.sigma, gamma)
        sys = assemble(ch, cfg.constellation, a)
        if method == "power_min_qp":
            sol = pc.power_min_qp(sys)
        else:
            sol = _maxmin_solver(method, sys, cfg.sigma, mm)
        if sol.status not in ("optimal", "max_iter"):
            return []
        y = sys.received(sol.u_real)
        return [(k, float(y[k, 0]), float(y[k, 1]), int(idx[k]), method)
                for k in range(cfg.k)]

    rows = []
    for out in _map_trials(one_trial, cfg.trials, threads):
        rows.extend(out)
    return rows


def write_scatter_csv(rows, file) -> None:
    with open(file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("user", "re", "im", "symbol_index", "method"))
        for r in rows:
            w.writerow(r)
