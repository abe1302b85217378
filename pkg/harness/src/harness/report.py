"""CSV tables and the run manifest."""

from __future__ import annotations

import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from shared import RunManifest

FLOAT_FORMAT = "%.17g"


def complex_columns(frame: dict, name: str, values) -> None:
    values = np.asarray(values, dtype=np.complex128)
    frame[f"re_{name}"] = values.real
    frame[f"im_{name}"] = values.imag


def empirical_orders(n_B: Sequence[int], errors: Sequence[float]) -> list[float | None]:
    """log(e_i / e_{i+1}) / log(n_{i+1} / n_i), aligned with the finer run; None for the first row."""
    orders: list[float | None] = [None]
    for (n0, e0), (n1, e1) in zip(zip(n_B, errors), zip(n_B[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            orders.append(math.log(e0 / e1) / math.log(n1 / n0))
        else:
            orders.append(None)
    return orders


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_manifest(manifest: RunManifest, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.to_json() + "\n")
    return path


def format_elapsed(seconds: float) -> str:
    m, s = divmod(seconds, 60)
    h, m = divmod(int(m), 60)
    if h:
        return f"{h}h{m:02d}m"
    if m:
        return f"{m}m{int(s):02d}s"
    return f"{s:.2f}s"
