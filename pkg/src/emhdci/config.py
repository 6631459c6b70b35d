"""Run configuration: flat key = value files with flag overrides.

The file format is one `key = value` pair per line, `#` comments; list values
are comma-separated.  Flags override file values, which override the desk
defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .intermittency import ParameterError
from .iteration import Schedule, default_desk_schedule, generated_schedule

DEFAULT_TOLERANCES = {
    "residual": 1e-6,
    "residual_initial": 1e-12,
    "structural": 1e-12,
    "cancellation": 1e-9,
    "partsum": 1e-8,
}


def _parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if "," in value:
            out[key] = [_parse_scalar(v) for v in value.split(",") if v.strip()]
        else:
            out[key] = _parse_scalar(value)
    return out


@dataclass
class RunConfig:
    n_space: int = 64
    n_time: int = 17
    n_pad: int = 2
    lambda0: int = 8
    schedule: Schedule = dc_field(default_factory=default_desk_schedule)
    family_file: str | None = None
    out_dir: str = "run"
    threads: int = 1
    seed: int = 20240801
    tolerances: dict = dc_field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def to_manifest(self) -> dict:
        return {
            "n_space": self.n_space, "n_time": self.n_time, "n_pad": self.n_pad,
            "lambda0": self.lambda0, "schedule": self.schedule.to_dict(),
            "family_file": self.family_file, "threads": self.threads,
            "seed": self.seed, "tolerances": dict(self.tolerances),
        }

    @classmethod
    def from_manifest(cls, d: dict) -> "RunConfig":
        return cls(n_space=d["n_space"], n_time=d["n_time"], n_pad=d["n_pad"],
                   lambda0=d["lambda0"], schedule=Schedule.from_dict(d["schedule"]),
                   family_file=d.get("family_file"), threads=d.get("threads", 1),
                   seed=d.get("seed", 20240801),
                   tolerances=d.get("tolerances", dict(DEFAULT_TOLERANCES)))


def _as_list(value, kind=float):
    if isinstance(value, (list, tuple)):
        return [kind(v) for v in value]
    return [kind(value)]


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    """Merge defaults < file < flags into a RunConfig."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})

    cfg = RunConfig()
    if "grid" in merged:
        pair = _as_list(merged.pop("grid"), int)
        if len(pair) != 2:
            raise ParameterError("grid must be 'n_space,n_time'")
        cfg.n_space, cfg.n_time = pair
    cfg.n_space = int(merged.pop("n_space", cfg.n_space))
    cfg.n_time = int(merged.pop("n_time", cfg.n_time))
    cfg.n_pad = int(merged.pop("n_pad", cfg.n_pad))
    cfg.lambda0 = int(merged.pop("lambda0", cfg.lambda0))
    cfg.family_file = merged.pop("family", cfg.family_file)
    cfg.out_dir = str(merged.pop("out", cfg.out_dir))
    cfg.threads = int(merged.pop("threads", cfg.threads))
    cfg.seed = int(merged.pop("seed", cfg.seed))

    tol_entries = merged.pop("tol", None)
    if tol_entries is not None:
        if not isinstance(tol_entries, list):
            tol_entries = [tol_entries]
        for tol in tol_entries:
            name, _, value = str(tol).partition("=")
            if not value:
                raise ParameterError(f"--tol needs NAME=VALUE, got {tol!r}")
            cfg.tolerances[name.strip()] = float(value)
    for key in [k for k in merged if k.startswith("tol.")]:
        cfg.tolerances[key[4:]] = float(merged.pop(key))

    cfg.schedule = _build_schedule(merged, cfg.lambda0)
    if merged:
        raise ParameterError(f"unknown config keys: {sorted(merged)}")
    return cfg


def _build_schedule(merged: dict, lambda0: int) -> Schedule:
    sched_kwargs = {}
    for key in ("c", "epsilon", "eps_factor", "eps_b", "eps_r", "alpha"):
        if key in merged:
            sched_kwargs[key] = float(merged.pop(key))

    if "a" in merged and "b" in merged:
        a, b = int(merged.pop("a")), int(merged.pop("b"))
        beta = float(merged.pop("beta", 0.05))
        levels = int(merged.pop("levels", 3))
        return generated_schedule(a, b, beta, levels, **sched_kwargs)

    default = default_desk_schedule()
    lambdas = _as_list(merged.pop("lambdas", None) or [], int)
    if not lambdas:
        lam1 = merged.pop("lambda1", None)
        if lam1 is not None:
            lambdas = [lambda0, int(lam1)]
        else:
            lambdas = [lambda0] + list(default.lambdas[1:]) if lambda0 != default.lambdas[0] \
                else list(default.lambdas)
    elif lambdas[0] != lambda0:
        lambdas = [lambda0] + lambdas

    n_levels = len(lambdas)
    n_steps = max(1, n_levels - 1)

    if "deltas" in merged:
        deltas = _as_list(merged.pop("deltas"))
    elif "beta" in merged:
        beta = float(merged.pop("beta"))
        deltas = [float(l) ** (-2.0 * beta) for l in lambdas]
    else:
        deltas = list(default.deltas[:n_levels])
        while len(deltas) < n_levels:
            deltas.append(deltas[-1] * 0.95)

    def per_step(key, fallback):
        if key + "s" in merged:
            vals = _as_list(merged.pop(key + "s"))
        elif key in merged:
            vals = [float(merged.pop(key))] * n_steps
        else:
            vals = [fallback(q) for q in range(n_steps)]
        return vals

    rs = [int(v) for v in per_step("r", lambda q: 1)]
    sigmas = per_step("sigma", lambda q: 1.0 / lambdas[q + 1])
    ells = per_step("ell", lambda q: 1.0 / lambdas[q + 1])
    return Schedule(tuple(lambdas), tuple(deltas), tuple(rs), tuple(sigmas),
                    tuple(ells), **sched_kwargs)
