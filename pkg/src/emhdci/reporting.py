"""Run-directory persistence: manifest, snapshots, ledgers, CSV and figures.

The report path writes the delimited series and ledger files plus matplotlib
figures rendered alongside them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .diagnostics import DiagnosticsReport, LevelSummary
from .iteration import IterationState, Schedule, StepRecord
from .spectral import Grid, read_field, write_field

MANIFEST = "manifest.json"
LEVELS = "levels.json"
STEPS = "steps.json"
LEDGER = "ledger.csv"
SERIES = "series_energy_helicity.csv"
SUMMARY = "summary.json"


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(run_dir: Path, manifest: dict) -> None:
    _dump_json(run_dir / MANIFEST, manifest)


def read_manifest(run_dir: Path) -> dict:
    path = Path(run_dir) / MANIFEST
    if not path.exists():
        raise FileNotFoundError(f"{run_dir} is not a run directory (no {MANIFEST})")
    return json.loads(path.read_text())


def state_dir(run_dir: Path, q: int) -> Path:
    return Path(run_dir) / f"state_q{q}"


def write_state(run_dir: Path, state: IterationState) -> Path:
    target = state_dir(run_dir, state.q)
    target.mkdir(parents=True, exist_ok=True)
    for name in ("A", "B", "R", "p"):
        write_field(target / f"{name}.fld", getattr(state, name))
    _dump_json(target / "state.json", {"q": state.q, "schedule": state.schedule.to_dict()})
    return target


def read_state(run_dir: Path, q: int, workers: int = 1) -> IterationState:
    target = state_dir(run_dir, q)
    meta = json.loads((target / "state.json").read_text())
    fields = {name: read_field(target / f"{name}.fld", workers=workers)
              for name in ("A", "B", "R", "p")}
    return IterationState(q=meta["q"], schedule=Schedule.from_dict(meta["schedule"]), **fields)


def latest_level(run_dir: Path) -> int:
    qs = [int(p.name[7:]) for p in Path(run_dir).glob("state_q*") if p.name[7:].isdigit()]
    if not qs:
        raise FileNotFoundError(f"no state snapshots in {run_dir}")
    return max(qs)


def append_level(run_dir: Path, summary: LevelSummary) -> None:
    path = Path(run_dir) / LEVELS
    data = json.loads(path.read_text()) if path.exists() else []
    data = [d for d in data if d["q"] != summary.q]
    data.append(summary.to_dict())
    data.sort(key=lambda d: d["q"])
    _dump_json(path, data)


def read_levels(run_dir: Path) -> list[LevelSummary]:
    path = Path(run_dir) / LEVELS
    if not path.exists():
        return []
    return [LevelSummary.from_dict(d) for d in json.loads(path.read_text())]


def _record_to_dict(rec: StepRecord) -> dict:
    return {"q": rec.q, "epsilon": rec.epsilon,
            "params": {"lam_next": rec.params.lam_next, "delta_next": rec.params.delta_next,
                       "r": rec.params.r, "sigma": rec.params.sigma, "ell": rec.params.ell,
                       "c": rec.params.c, "epsilon": rec.params.epsilon},
            "norms": rec.norms, "residuals": rec.residuals, "parts": rec.parts}


def _record_from_dict(d: dict):
    from .iteration.schedule import StepParams
    p = d["params"]
    rec = StepRecord(q=d["q"], params=StepParams(**p), epsilon=d["epsilon"])
    rec.norms, rec.residuals, rec.parts = d["norms"], d["residuals"], d["parts"]
    return rec


def append_step(run_dir: Path, rec: StepRecord) -> None:
    path = Path(run_dir) / STEPS
    data = json.loads(path.read_text()) if path.exists() else []
    data = [d for d in data if d["q"] != rec.q]
    data.append(_record_to_dict(rec))
    data.sort(key=lambda d: d["q"])
    _dump_json(path, data)


def read_steps(run_dir: Path) -> list[StepRecord]:
    path = Path(run_dir) / STEPS
    if not path.exists():
        return []
    return [_record_from_dict(d) for d in json.loads(path.read_text())]


def write_ledger_csv(run_dir: Path, report: DiagnosticsReport) -> Path:
    path = Path(run_dir) / LEDGER
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "quantity", "measured", "claimed", "ratio", "asserted", "holds", "source"])
        for r in report.rows:
            writer.writerow([r.q, r.quantity, f"{r.measured:.12g}", f"{r.claimed:.12g}",
                             f"{r.ratio:.6g}", r.asserted, r.holds, r.source])
    return path


def write_series_csv(run_dir: Path, levels: list[LevelSummary]) -> Path:
    """(t, E_q, H_q, ...) with one E/H column pair per level."""
    path = Path(run_dir) / SERIES
    if not levels:
        raise ValueError("no level summaries to report")
    t = levels[0].times
    header = ["t"]
    columns = [t]
    for lv in levels:
        header += [f"E{lv.q}", f"H{lv.q}"]
        columns += [lv.energy, lv.helicity]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(t)):
            writer.writerow([f"{col[i]:.15g}" for col in columns])
    return path


def write_summary(run_dir: Path, levels: list[LevelSummary],
                  report: DiagnosticsReport) -> Path:
    payload = {"levels": {}}
    for lv in levels:
        payload["levels"][str(lv.q)] = {
            "energy_gap": float(abs(lv.energy[-1] - lv.energy[0])),
            "helicity_gap": float(abs(lv.helicity[-1] - lv.helicity[0])),
            "B_L2": lv.B_L2, "R_L1": lv.R_L1, "residual": lv.residual,
        }
    payload["ledger_assert_failures"] = [r.quantity for r in report.failed_assertions()]
    rows = {}
    for r in report.rows:
        rows.setdefault(r.quantity, []).append(
            {"q": r.q, "measured": r.measured, "claimed": r.claimed,
             "ratio": r.ratio, "asserted": r.asserted, "holds": r.holds})
    payload["ledger"] = rows
    path = Path(run_dir) / SUMMARY
    _dump_json(path, payload)
    return path


def render_figures(run_dir: Path, levels: list[LevelSummary],
                   report: DiagnosticsReport) -> list[Path]:
    """Energy/helicity curves per level and the ledger ratio chart."""
    run_dir = Path(run_dir)
    fig_dir = run_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    written = []

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    for lv in levels:
        axes[0].plot(lv.times, lv.energy, label=f"level {lv.q}")
        axes[1].plot(lv.times, lv.helicity, label=f"level {lv.q}")
    t = levels[0].times
    vol = (2 * np.pi) ** 3
    axes[0].plot(t, t ** 2 / vol, "k:", lw=1, label="t^2/(2pi)^3")
    axes[0].set_xlabel("t"); axes[0].set_ylabel("magnetic energy")
    axes[1].set_xlabel("t"); axes[1].set_ylabel("magnetic helicity")
    for ax in axes:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = fig_dir / "energy_helicity.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    rows = [r for r in report.rows if np.isfinite(r.ratio) and r.claimed > 0]
    if rows:
        fig, ax = plt.subplots(figsize=(8, 0.32 * len(rows) + 1.2))
        labels = [f"q{r.q} {r.quantity}" for r in rows]
        ratios = [max(r.ratio, 1e-12) for r in rows]
        colors = ["tab:green" if r.holds else "tab:red" for r in rows]
        ax.barh(range(len(rows)), ratios, color=colors)
        ax.set_yticks(range(len(rows)), labels, fontsize=7)
        ax.axvline(1.0, color="k", lw=1)
        ax.set_xscale("log")
        ax.set_xlabel("measured / claimed")
        fig.tight_layout()
        path = fig_dir / "ledger_ratios.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
