"""``starkfloq`` command line.

Usage::

    starkfloq <spectrum|bloch|exponent|sim2d|sweep> [--config FILE] [--set key=value]... --out DIR

Configs are JSON objects; ``--set`` overrides dotted paths (values parsed as
JSON when possible).  Complex numbers are ``{"re": x, "im": y}`` objects.
Every run writes its data files, ``report.json`` and a ``manifest.json``
holding the fully resolved parameters and a SHA-256 digest per output.
Passing a manifest back as ``--config`` re-runs the same computation.

Exit status is 0 on success, 2 for invalid configuration and 3 for a
numerical failure.
"""

import argparse
import concurrent.futures
import copy
import csv
import datetime
import hashlib
import itertools
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from . import __version__
from .errors import ConfigError, StarkFloqError, WindowError
from .exponent import fit_exponent, spread_series
from .integrator import IntegratorConfig, default_dt, evolve, required_margin
from .lattice2d import (
    DEFAULT_SIZE,
    DEFAULT_TAU,
    SCENARIOS,
    Lattice2DParams,
    breathing_period,
    column_widths,
    packet_velocity,
    run_lattice,
    width_exponent,
)
from .model import ChainParams, StateVector
from .propagator import bloch_trajectory
from .resonance import total_level_probability
from .spectrum import finite_chain_spectrum, unpaired_eigenvalues

__all__ = ["main", "run_command", "load_config", "resolve_config", "PRESETS", "COMMANDS"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_REQUIRED = object()
_ROOT = math.sqrt(0.5)

# panel name -> (kappa0, omega); omega0 = 1 throughout
PRESETS = {}
for _row, _omegas in (("fig2", (0.0, 0.01, 0.1)), ("fig3", (0.6, 1.0, 1.5))):
    for _letter, _omega in zip("abc", _omegas):
        for _col, _kappa in zip("123", (1.0, 1j, complex(_ROOT, _ROOT))):
            PRESETS[f"{_row}-{_letter}{_col}"] = (_kappa, _omega)
PRESET_T_FINAL = 20.0 * math.pi


def encode_complex(z):
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


class _Fields:
    """Typed access to one config object; remembers which keys were read."""

    def __init__(self, raw, path=""):
        if not isinstance(raw, dict):
            raise ConfigError(path or "<config>", "expected a JSON object")
        self.raw = raw
        self.path = path
        self.used = set()

    def where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return self.raw.get(key) is not None

    def get(self, key, default=_REQUIRED):
        self.used.add(key)
        value = self.raw.get(key)
        if value is None:
            if default is _REQUIRED:
                raise ConfigError(self.where(key), "required field is missing")
            return default
        return value

    def real(self, key, default=_REQUIRED, positive=False, nonnegative=False):
        value = self.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(self.where(key), f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(self.where(key), "must be finite")
        if positive and not value > 0:
            raise ConfigError(self.where(key), "must be > 0")
        if nonnegative and value < 0:
            raise ConfigError(self.where(key), "must be >= 0")
        return value

    def integer(self, key, default=_REQUIRED, minimum=None):
        value = self.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(self.where(key), f"expected an integer, got {value!r}")
        value = int(value)
        if minimum is not None and value < minimum:
            raise ConfigError(self.where(key), f"must be >= {minimum}")
        return value

    def complex(self, key, default=_REQUIRED):
        return parse_complex(self.get(key, default), self.where(key))

    def choice(self, key, options, default=_REQUIRED):
        value = self.get(key, default)
        if value not in options:
            raise ConfigError(self.where(key), f"expected one of {list(options)}, got {value!r}")
        return value

    def real_list(self, key, default=_REQUIRED, length=None):
        value = self.get(key, default)
        if not isinstance(value, (list, tuple)) or (length is not None and len(value) != length):
            want = f"a list of {length} numbers" if length else "a list of numbers"
            raise ConfigError(self.where(key), f"expected {want}, got {value!r}")
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{self.where(key)}[{i}]", f"expected a finite number, got {v!r}")
            out.append(float(v))
        return out

    def finish(self):
        extra = sorted(set(self.raw) - self.used)
        if extra:
            raise ConfigError(self.where(extra[0]), "unknown field")


def parse_complex(value, where):
    """Accept ``{"re", "im"}`` objects, plain numbers and strings such as ``"1+1j"``."""
    if isinstance(value, bool):
        raise ConfigError(where, f"expected a complex number, got {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, dict):
        if not value or set(value) - {"re", "im"}:
            raise ConfigError(where, 'complex values are objects {"re": x, "im": y}')
        try:
            return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        except (TypeError, ValueError):
            raise ConfigError(where, f"non-numeric complex parts in {value!r}") from None
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(where, f"cannot parse {value!r} as a complex number") from None
    raise ConfigError(where, f"expected a complex number, got {value!r}")


# --- resolvers: raw config -> canonical JSON-ready parameters ---------------------------


def _resolve_spectrum(raw):
    f = _Fields(raw)
    if f.has("N") and f.has("N_list"):
        raise ConfigError("N", "give either N or N_list, not both")
    if f.has("N"):
        n_list = [f.integer("N", minimum=3)]
        f.used.add("N_list")
    else:
        values = f.get("N_list")
        if not isinstance(values, list) or not values:
            raise ConfigError("N_list", "expected a non-empty list of integers")
        n_list = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or not 3 <= v <= 2000:
                raise ConfigError(f"N_list[{i}]", f"expected an integer in [3, 2000], got {v!r}")
            n_list.append(int(v))
    out = {
        "N_list": n_list,
        "kappa0": encode_complex(f.complex("kappa0")),
        "omega0": f.real("omega0", positive=True),
        "omega": f.real("omega", 0.0, nonnegative=True),
        "t": f.real("t", 0.0),
        "ladder_window": f.integer("ladder_window", None, minimum=1),
    }
    f.finish()
    return out


def _initial_amplitudes(f):
    """``{site: amplitude}`` from ``initial = {"site": n}`` or ``{"amplitudes": {"n": z}}``."""
    spec = f.get("initial", {"site": 0})
    g = _Fields(spec, f.where("initial"))
    if g.has("site") and g.has("amplitudes"):
        raise ConfigError(g.where("site"), "give either site or amplitudes")
    if g.has("amplitudes"):
        table = g.get("amplitudes")
        if not isinstance(table, dict) or not table:
            raise ConfigError(g.where("amplitudes"), "expected a non-empty object {site: amplitude}")
        amps = {}
        for key, value in table.items():
            try:
                n = int(key)
            except ValueError:
                raise ConfigError(g.where(f"amplitudes.{key}"), "site labels must be integers") from None
            amps[n] = parse_complex(value, g.where(f"amplitudes.{key}"))
        canon = {"amplitudes": {str(n): encode_complex(amps[n]) for n in sorted(amps)}}
    else:
        n = g.integer("site", 0)
        amps = {n: 1.0 + 0j}
        canon = {"site": n}
    g.finish()
    if not any(abs(a) > 0 for a in amps.values()):
        raise ConfigError(g.where("amplitudes"), "initial state is zero")
    return amps, canon


def _resolve_bloch(raw):
    f = _Fields(raw)
    preset = f.get("preset", None)
    if preset is not None and preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    p_kappa, p_omega = PRESETS[preset] if preset else (_REQUIRED, _REQUIRED)
    kappa0 = f.complex("kappa0", p_kappa)
    omega = f.real("omega", p_omega, nonnegative=True)
    omega0 = f.real("omega0", 1.0 if preset else _REQUIRED, positive=True)
    t_final = f.real("t_final", PRESET_T_FINAL if preset else _REQUIRED, positive=True)
    dt = f.real("dt", default_dt(omega0), positive=True)
    engine = f.choice("engine", ("auto", "analytic", "numeric"), "auto")
    if engine == "auto":
        engine = "analytic" if omega == 0 else "numeric"
    if engine == "analytic" and omega != 0:
        raise ConfigError("engine", "the analytic engine requires omega == 0")
    sample_every = f.integer("sample_every", 50, minimum=1)
    leak = f.real("leak_threshold", 1e-8, positive=True)
    rescaled = f.get("rescaled", True)
    if not isinstance(rescaled, bool):
        raise ConfigError("rescaled", "expected true or false")
    amps, initial = _initial_amplitudes(f)
    window = f.get("window", None)
    if window is None:
        lo, hi = min(amps), max(amps)
        if engine == "analytic":
            margin = int(math.ceil(4.0 * abs(kappa0) / omega0)) + 40
        else:
            margin = required_margin(ChainParams(kappa0, omega, omega0, (lo - 1, hi + 1)), t_final)
        window = [lo - margin, hi + margin]
    else:
        if (
            not isinstance(window, list)
            or len(window) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in window)
            or window[1] - window[0] < 2
        ):
            raise ConfigError("window", "expected [n_min, n_max] integers with at least 3 sites")
        if min(amps) < window[0] or max(amps) > window[1]:
            raise ConfigError("initial", f"initial support lies outside window {window}")
    out = {
        "preset": preset,
        "kappa0": encode_complex(kappa0),
        "omega": omega,
        "omega0": omega0,
        "t_final": t_final,
        "dt": dt,
        "engine": engine,
        "sample_every": sample_every,
        "leak_threshold": leak,
        "rescaled": rescaled,
        "initial": initial,
        "window": [int(window[0]), int(window[1])],
    }
    f.finish()
    if engine == "numeric":
        try:
            IntegratorConfig(dt=dt).resolve_dt(ChainParams(kappa0, omega, omega0, tuple(out["window"])))
        except ValueError as exc:
            raise ConfigError("dt", str(exc)) from None
    return out


def _resolve_exponent(raw):
    f = _Fields(raw)
    kappa0 = f.complex("kappa0")
    t_window = f.real_list("t_window", [10.0, 100.0], length=2)
    if not 0 < t_window[0] < t_window[1]:
        raise ConfigError("t_window", "expected 0 < t_lo < t_hi")
    method = f.choice("method", ("auto", "wavefront", "fwhm"), "auto")
    if method == "auto":
        method = "wavefront" if kappa0.imag == 0 else "fwhm"
    samples = f.integer("samples", 181, minimum=10)
    out = {"kappa0": encode_complex(kappa0), "t_window": t_window, "method": method, "samples": samples}
    f.finish()
    return out


def _resolve_sim2d(raw):
    f = _Fields(raw)
    sid = f.get("scenario", None)
    if sid is not None and sid not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {sid!r}; expected one of {sorted(SCENARIOS)}")
    J = f.real("J", 1.0, positive=True)
    if sid is not None:
        k, w, w0, kind = SCENARIOS[sid]
        defaults = (k * J, w * J, w0 * J, kind)
    else:
        defaults = (_REQUIRED, _REQUIRED, _REQUIRED, "delta")
    kappa0 = f.complex("kappa0", defaults[0])
    omega = f.real("omega", defaults[1], nonnegative=True)
    omega0 = f.real("omega0", defaults[2], positive=True)
    packet = f.choice("packet", ("delta", "gaussian"), defaults[3])
    size = f.get("size", list(DEFAULT_SIZE))
    if (
        not isinstance(size, list)
        or len(size) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) or v < 3 for v in size)
    ):
        raise ConfigError("size", "expected [N_x, N_y] integers, each >= 3")
    default_snaps = [2.0 * math.pi * k / J for k in range(5)]
    snaps = f.real_list("snapshot_times", default_snaps)
    if any(s < 0 for s in snaps):
        raise ConfigError("snapshot_times", "times must be >= 0")
    out = {
        "scenario": sid,
        "kappa0": encode_complex(kappa0),
        "omega": omega,
        "omega0": omega0,
        "J": J,
        "packet": packet,
        "n0": f.integer("n0", 0),
        "size": [int(v) for v in size],
        "snapshot_times": snaps,
        "tau": f.real("tau", DEFAULT_TAU, positive=True),
        "t_max": f.real("t_max", None, positive=True),
        "tol": f.real("tol", 1e-10, positive=True),
    }
    f.finish()
    return out


def _resolve_sweep(raw):
    f = _Fields(raw)
    command = f.choice("command", ("spectrum", "bloch", "exponent", "sim2d"))
    base = f.get("base", {})
    if not isinstance(base, dict):
        raise ConfigError("base", "expected a JSON object")
    grid = f.get("sweep")
    if not isinstance(grid, dict) or not 1 <= len(grid) <= 2:
        raise ConfigError("sweep", "expected an object with one or two swept parameters")
    for key, values in grid.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{key}", "expected a non-empty list of values")
    out = {"command": command, "base": copy.deepcopy(base), "sweep": copy.deepcopy(grid)}
    f.finish()
    return out


RESOLVERS = {
    "spectrum": _resolve_spectrum,
    "bloch": _resolve_bloch,
    "exponent": _resolve_exponent,
    "sim2d": _resolve_sim2d,
    "sweep": _resolve_sweep,
}
COMMANDS = tuple(RESOLVERS)


def resolve_config(command, raw):
    """Validate ``raw`` and fill defaults; the result is a fixed point of this function."""
    if command not in RESOLVERS:
        raise ConfigError("command", f"unknown command {command!r}")
    return RESOLVERS[command](copy.deepcopy(raw))


# --- runners: resolved parameters -> files in outdir ------------------------------------


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _as_complex(obj):
    return complex(obj["re"], obj["im"])


def _run_spectrum(cfg, outdir):
    params = ChainParams(_as_complex(cfg["kappa0"]), cfg["omega"], cfg["omega0"])
    files, rows = [], []
    for N in cfg["N_list"]:
        report = finite_chain_spectrum(N, params, cfg["t"], cfg["ladder_window"])
        path = os.path.join(outdir, f"eigenvalues_N{N}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "re", "im"])
            for i, e in enumerate(report.eigenvalues):
                w.writerow([i, repr(float(e.real)), repr(float(e.imag))])
        files.append(path)
        rows.append(
            {
                "N": N,
                "ladder_window": report.ladder_window,
                "ladder_size": report.ladder_size,
                "max_imag": report.max_imag,
                "max_spacing_dev": report.max_spacing_dev,
                "unpaired": len(unpaired_eigenvalues(report.eigenvalues)),
            }
        )
    sizes = [r["ladder_size"] for r in sorted(rows, key=lambda r: r["N"])]
    summary = {"spectra": rows, "ladder_size_monotone": all(a <= b for a, b in zip(sizes, sizes[1:]))}
    files.append(_write_json(os.path.join(outdir, "report.json"), summary))
    return files


def _run_bloch(cfg, outdir):
    kappa0 = _as_complex(cfg["kappa0"])
    window = tuple(cfg["window"])
    params = ChainParams(kappa0, cfg["omega"], cfg["omega0"], window)
    amps = np.zeros(params.size, dtype=complex)
    if "site" in cfg["initial"]:
        amps[cfg["initial"]["site"] - window[0]] = 1.0
    else:
        for key, value in cfg["initial"]["amplitudes"].items():
            amps[int(key) - window[0]] = _as_complex(value)
    initial = StateVector(amps, window[0], 0.0)
    if cfg["engine"] == "analytic":
        n = max(1, int(round(cfg["t_final"] / (cfg["dt"] * cfg["sample_every"]))))
        t_grid = np.linspace(0.0, cfg["t_final"], n + 1)
        traj = bloch_trajectory(initial, params, t_grid, cfg["leak_threshold"])
    else:
        config = IntegratorConfig(
            dt=cfg["dt"], sample_every=cfg["sample_every"], leak_threshold=cfg["leak_threshold"]
        )
        traj = evolve(initial, params, cfg["t_final"], config)
    path = os.path.join(outdir, "trajectory.csv")
    traj.write_csv(path, rescaled=cfg["rescaled"])
    report = {
        "engine": cfg["engine"],
        "samples": int(len(traj.times)),
        "window": list(window),
        "P_total": {
            "initial": float(traj.totals[0]),
            "final": float(traj.totals[-1]),
            "min": float(traj.totals.min()),
            "max": float(traj.totals.max()),
        },
        "max_edge_fraction": float(traj.max_edge_fraction),
    }
    return [path, _write_json(os.path.join(outdir, "report.json"), report)]


def _run_exponent(cfg, outdir):
    kappa0 = _as_complex(cfg["kappa0"])
    lo, hi = cfg["t_window"]
    times = np.linspace(lo, hi, cfg["samples"])
    series = spread_series(kappa0, times, cfg["method"])
    fit = fit_exponent(series, (lo, hi))
    spread = os.path.join(outdir, "spread.csv")
    series.write_csv(spread)
    fit_path = _write_json(os.path.join(outdir, "fit.json"), fit.to_json())
    report = {
        "fit": fit.to_json(),
        "nonmonotone_steps": series.nonmonotone,
        "level_probability_at_t_hi": total_level_probability(kappa0, hi),
    }
    return [spread, fit_path, _write_json(os.path.join(outdir, "report.json"), report)]


def _metric(fn, *args):
    try:
        return fn(*args)
    except StarkFloqError as exc:
        return {"error": str(exc)}


def _run_sim2d(cfg, outdir):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params = Lattice2DParams.for_drive(
            _as_complex(cfg["kappa0"]), cfg["omega"], J=cfg["J"], omega0=cfg["omega0"], size=tuple(cfg["size"])
        )
    result = run_lattice(
        params,
        cfg["packet"],
        n0=cfg["n0"],
        sid=cfg["scenario"] or "custom",
        snapshot_times=cfg["snapshot_times"],
        tau=cfg["tau"],
        t_max=cfg["t_max"],
        tol=cfg["tol"],
    )
    files = result.write(outdir)
    widths = column_widths(result.trace.normalized, params)
    exponent = _metric(width_exponent, widths, params)
    report = {
        "scenario": result.sid,
        "packet_velocity": _metric(packet_velocity, result),
        "breathing_period_columns": _metric(breathing_period, widths, params),
        "bloch_period_columns": 2.0 * params.J * 2.0 * math.pi / params.omega0,
        "width_exponent": exponent if isinstance(exponent, dict) else {"z": exponent[0], "stderr": exponent[1]},
        "total_probability": {"min": float(result.totals.min()), "max": float(result.totals.max())},
        "trace_samples": result.trace.count,
        "trace_stopped_at": result.trace.stopped_at,
        "warnings": [str(w.message) for w in caught],
    }
    files.append(_write_json(os.path.join(outdir, "report.json"), report))
    return files


def set_path(config, dotted, value):
    """Set ``config[a][b]... = value`` for ``dotted = "a.b..."``, creating objects as needed.

    A number sitting where ``re``/``im`` is addressed is promoted to a complex object.
    """
    keys = dotted.split(".")
    if not all(keys):
        raise ConfigError(dotted, "malformed dotted path")
    node = config
    for i, key in enumerate(keys[:-1]):
        child = node.get(key)
        if child is None:
            child = node[key] = {}
        elif isinstance(child, (int, float)) and not isinstance(child, bool) and keys[i + 1] in ("re", "im"):
            child = node[key] = {"re": float(child), "im": 0.0}
        elif isinstance(child, str) and keys[i + 1] in ("re", "im"):
            child = node[key] = encode_complex(parse_complex(child, ".".join(keys[: i + 1])))
        elif not isinstance(child, dict):
            raise ConfigError(".".join(keys[: i + 1]), "cannot descend into a non-object value")
        node = child
    node[keys[-1]] = value


def _point_dirname(index):
    return f"point_{index:03d}"


def _run_point(job):
    index, command, config, outdir = job
    values = config.pop("__values__")
    try:
        run_command(command, config, outdir)
        return {"index": index, "dir": _point_dirname(index), "values": values, "status": "ok", "exit_code": 0}
    except Exception as exc:  # collected into the index, the sweep carries on
        code = exit_code_for(exc)
        return {
            "index": index,
            "dir": _point_dirname(index),
            "values": values,
            "status": "error",
            "exit_code": code,
            "error": f"{type(exc).__name__}: {exc}",
        }


def worker_count(default=None):
    """Pool width from ``STARKFLOQ_WORKERS``, else ``default``, else the number of logical cores."""
    env = os.environ.get("STARKFLOQ_WORKERS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError("STARKFLOQ_WORKERS", f"expected a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("STARKFLOQ_WORKERS", "must be >= 1")
        return n
    return default or os.cpu_count() or 1


def _run_sweep(cfg, outdir):
    keys = list(cfg["sweep"])
    jobs = []
    for index, combo in enumerate(itertools.product(*(cfg["sweep"][k] for k in keys))):
        config = copy.deepcopy(cfg["base"])
        for key, value in zip(keys, combo):
            set_path(config, key, value)
        config["__values__"] = dict(zip(keys, combo))
        jobs.append((index, cfg["command"], config, os.path.join(outdir, _point_dirname(index))))
    workers = min(worker_count(), len(jobs))
    if workers == 1:
        points = [_run_point(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_run_point, jobs))
    failed = [p for p in points if p["status"] != "ok"]
    index = {"command": cfg["command"], "swept": keys, "points": points, "failures": len(failed)}
    path = _write_json(os.path.join(outdir, "index.json"), index)
    files = [path]
    for p in points:
        d = os.path.join(outdir, p["dir"])
        if os.path.isdir(d):
            files.extend(os.path.join(d, name) for name in sorted(os.listdir(d)))
    if failed:
        raise SweepError(failed, files)
    return files


class SweepError(StarkFloqError):
    """Some grid points failed; the rest completed and are indexed."""

    def __init__(self, failed, files):
        super().__init__(f"{len(failed)} sweep point(s) failed: " + "; ".join(p["error"] for p in failed))
        self.failed = failed
        self.files = files
        self.exit_code = max(p["exit_code"] for p in failed)


RUNNERS = {
    "spectrum": _run_spectrum,
    "bloch": _run_bloch,
    "exponent": _run_exponent,
    "sim2d": _run_sim2d,
    "sweep": _run_sweep,
}


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(outdir, command, parameters, started, files, status="ok"):
    """Write ``manifest.json`` atomically (temporary file, then rename)."""
    outputs = []
    for path in files:
        outputs.append(
            {
                "path": os.path.relpath(path, outdir),
                "sha256": file_digest(path),
                "bytes": os.path.getsize(path),
            }
        )
    manifest = {
        "command": command,
        "parameters": parameters,
        "code_version": f"starkfloq {__version__}",
        "started": started,
        "finished": _now(),
        "status": status,
        "outputs": outputs,
    }
    fd, tmp = tempfile.mkstemp(prefix=".manifest-", suffix=".json", dir=outdir)
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, os.path.join(outdir, "manifest.json"))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return manifest


def run_command(command, raw_config, outdir):
    """Resolve ``raw_config``, run ``command`` into ``outdir`` and write the manifest."""
    started = _now()
    params = resolve_config(command, raw_config)
    os.makedirs(outdir, exist_ok=True)
    try:
        files = RUNNERS[command](params, outdir)
    except SweepError as exc:
        write_manifest(outdir, command, params, started, exc.files, status="partial")
        raise
    return write_manifest(outdir, command, params, started, files)


def load_config(path, overrides=(), command=None):
    """Read a JSON config (or a run manifest) and apply ``key=value`` overrides."""
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
        if "parameters" in raw and "command" in raw:
            if command is not None and raw["command"] != command:
                raise ConfigError("command", f"manifest was written by {raw['command']!r}, not {command!r}")
            raw = raw["parameters"]
    raw = copy.deepcopy(raw)
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(item, "overrides take the form key=value")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        set_path(raw, key.strip(), value)
    return raw


def exit_code_for(exc):
    if isinstance(exc, SweepError):
        return exc.exit_code
    if isinstance(exc, (ConfigError, WindowError)):
        return EXIT_CONFIG
    if isinstance(exc, (StarkFloqError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(
        prog="starkfloq",
        description="Ladder spectra, Bloch dynamics, resonant spreading and 2D lattice replays.",
    )
    parser.add_argument("--version", action="version", version=f"starkfloq {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file or a manifest.json from an earlier run")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a dotted config path; VALUE is parsed as JSON when possible",
    )
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config, args.overrides, args.command)
        manifest = run_command(args.command, raw, args.out)
    except Exception as exc:
        code = exit_code_for(exc)
        kind = "config error" if code == EXIT_CONFIG else "numerical failure"
        print(f"starkfloq {args.command}: {kind}: {exc}", file=sys.stderr)
        return code
    print(f"wrote {len(manifest['outputs'])} file(s) to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
