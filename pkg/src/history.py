"""CSV persistence for per-epoch training curves."""

import csv
import logging
import os
from pathlib import Path
from typing import Sequence, Union

logger = logging.getLogger(__name__)

CURVE_HEADERS = ["epoch", "loss", "compatibility_loss", "focal_loss", "triplet_loss"]


def save_curves(records: Sequence[dict], path: Union[str, Path]) -> None:
    """Write one row per epoch; columns a curve lacks are left blank.

    Args:
        records: Per-epoch dicts as returned by the training loops.
        path: Destination CSV; parent directories are created.
    """
    unknown = sorted({k for r in records for k in r} - set(CURVE_HEADERS))
    if unknown:
        raise ValueError(f"Unknown curve column(s): {', '.join(unknown)}")
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CURVE_HEADERS, restval="")
        writer.writeheader()
        for record in records:
            writer.writerow({k: _cell(v) for k, v in record.items()})
    logger.info("Wrote %d curve row(s) to %s", len(records), path)


def _cell(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def load_curves(path: Union[str, Path]) -> list[dict]:
    """Read a curve CSV back; blank cells are dropped from each record."""
    records = []
    with open(path, "r", newline="") as f:
        for row in csv.DictReader(f):
            record: dict = {"epoch": int(row["epoch"])}
            for key in CURVE_HEADERS[1:]:
                if row.get(key):
                    record[key] = float(row[key])
            records.append(record)
    return records
