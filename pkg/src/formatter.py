from typing import Optional

import pandas as pd

from src.autodiff.gradcheck import GradCheckReport
from src.evaluation import EvalReport
from src.styles import STYLE_ORDER, StyleSplit

RULE = "━" * 40


def _fmt(value: Optional[float], digits: int = 4) -> str:
    """Format a metric, or 'N/A' if it is undefined."""
    if value is None or pd.isna(value):
        return "N/A"
    return f"{value:.{digits}f}"


def _table(frame: pd.DataFrame) -> str:
    shown = frame.copy()
    for column in ("auc", "fitb"):
        if column in shown:
            shown[column] = [_fmt(v) for v in shown[column]]
    return shown.to_string(index=False)


def format_eval_report(report: EvalReport) -> str:
    lines = [
        f"Evaluation ({report.scorer}, split: {report.split or 'all'})",
        RULE,
        f"Sets:      {report.sets:,}",
        f"Questions: {report.questions:,}",
        f"AUC:       {_fmt(report.auc)}",
        f"FITB:      {_fmt(report.fitb)}",
    ]
    for by, table in report.breakdowns.items():
        lines += [
            "",
            f"By {by}:",
            _table(table.table),
            f"Weighted avg.  AUC {_fmt(table.weighted_auc)}  FITB {_fmt(table.weighted_fitb)}",
        ]
    return "\n".join(lines)


def format_style_counts(split: StyleSplit) -> str:
    total = sum(split.counts.values())
    frame = pd.DataFrame({
        "style": [label.value for label in STYLE_ORDER],
        "sets": [split.counts[label] for label in STYLE_ORDER],
    })
    frame["share"] = [_fmt(c / total if total else None, 3) for c in frame["sets"]]
    return "\n".join([
        f"Style split of {total:,} compatible set(s)",
        RULE,
        frame.to_string(index=False),
    ])


def format_gradcheck(report: GradCheckReport, seed: int) -> str:
    status = "PASS" if report.passed else "FAIL"
    lines = [
        f"Gradient check (seed {seed}): {status}",
        RULE,
        f"Coordinates checked: {report.checked:,}",
        f"Non-smooth skipped:  {len(report.non_smooth):,}",
        f"Max relative error:  {report.max_rel_error:.3e}",
        f"Max absolute error:  {report.max_abs_error:.3e}",
    ]
    if report.worst is not None:
        w = report.worst
        lines.append(
            f"Worst: {w.param}{list(w.index)} analytic {w.analytic:.6e} numeric {w.numeric:.6e}"
        )
    if report.per_param:
        frame = pd.DataFrame(
            sorted(report.per_param.items()), columns=["param", "max_rel_error"]
        )
        frame["max_rel_error"] = [f"{v:.3e}" for v in frame["max_rel_error"]]
        lines += ["", frame.to_string(index=False)]
    return "\n".join(lines)


def format_collocation(results: dict) -> str:
    lines = ["Generated outfits", RULE]
    for style, result in results.items():
        final = result.acceptances[-1]["score"] if result.acceptances else None
        lines.append(f"{style.value:<14} {', '.join(result.outfit.item_ids)}  (score {_fmt(final)})")
    return "\n".join(lines)
