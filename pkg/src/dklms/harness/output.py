"""Result files: learning-curve CSV, run manifest and summary."""

from __future__ import annotations

import json
from pathlib import Path

from .config import dump_config
from .experiment import ExperimentResult


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def csv_header(algorithms) -> list[str]:
    cols = ["n"]
    for name in algorithms:
        cols += [f"{name}_mse", f"{name}_cumloss"]
    return cols


def emit_results(result: ExperimentResult, out_dir) -> dict:
    """Write ``<name>.csv``, ``<name>.manifest.yaml`` and ``<name>.summary.json``.

    The manifest is the fully resolved config and can be passed back to
    ``run --config``. Truncated (diverged) traces leave trailing cells empty.
    """
    if not result.traces:
        raise ValueError("no traces to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    names = list(cfg.algorithms)
    traces = [result.traces[n] for n in names]
    rows = max(len(t.mse) for t in traces)

    paths = {
        "csv": out / f"{cfg.name}.csv",
        "manifest": out / f"{cfg.name}.manifest.yaml",
        "summary": out / f"{cfg.name}.summary.json",
    }
    lines = [",".join(csv_header(names))]
    for i in range(rows):
        cells = [str(i + 1)]
        for t in traces:
            cells += [_fmt(t.mse[i]), _fmt(t.cumulative_loss[i])] if i < len(t.mse) else ["", ""]
        lines.append(",".join(cells))
    paths["csv"].write_text("\n".join(lines) + "\n")

    paths["manifest"].write_text(f"# resolved configuration of run '{cfg.name}'\n" + dump_config(cfg))

    summary = {
        t.algorithm: {
            "steady_state_mse": t.steady_state_mse,
            "diverged": t.diverged,
            "steps_recorded": len(t.mse),
            "regret_slope": t.regret_slope,
            "final_regret": None if t.regret is None or not len(t.regret) else float(t.regret[-1]),
        }
        for t in traces
    }
    paths["summary"].write_text(json.dumps(summary, indent=2) + "\n")
    return paths
