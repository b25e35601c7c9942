"""CSV panels, atomic file output and JSON round trips for fitted models."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PanelData
from .exceptions import InvalidInputError
from .pipeline import PhaseIIResult, PhaseIResult, Scaling, block_to_coeffs, var_residuals

FIT_FORMAT = "sparsevarma-fit"
FIT_VERSION = 1


class CsvFormatError(InvalidInputError):
    """Malformed CSV input; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def read_panel(path) -> PanelData:
    """Read a header-plus-rows numeric CSV (time ascending, no missing values)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(path, 1, "file is empty") from None
        names = [h.strip() for h in header]
        if not names or any(not n for n in names):
            raise CsvFormatError(path, 1, "header must name every column")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(names):
                raise CsvFormatError(path, line, f"expected {len(names)} cells, found {len(row)}")
            vals = []
            for col, cell in zip(names, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvFormatError(path, line, f"non-numeric value {cell!r} in column {col!r}") from None
                if not math.isfinite(v):
                    raise CsvFormatError(path, line, f"missing or non-finite value in column {col!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise CsvFormatError(path, 2, "no data rows")
    return PanelData(np.array(rows), names)


def panel_to_csv(values, names) -> str:
    out = [",".join(names)]
    out.extend(",".join(repr(float(v)) for v in row) for row in np.atleast_2d(values))
    return "\n".join(out) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, allow_nan=False) + "\n")


@dataclass
class FitRecord:
    """A fitted VAR or VARMA rebuilt from JSON, ready for :func:`forecast_h`.

    ``phi`` and ``theta`` are on the standardized working scale; ``history``
    holds the last observations on that scale and ``error_history`` the
    matching Phase-I residuals.
    """

    phi: np.ndarray
    theta: np.ndarray
    scaling: Scaling
    history: np.ndarray
    error_history: np.ndarray | None
    phase1_pi: np.ndarray | None
    names: list

    @property
    def d(self) -> int:
        return self.phi.shape[0]

    @property
    def ar_block(self):
        return self.phi

    @property
    def ma_block(self):
        return self.theta

    @property
    def ar_coeffs(self):
        return block_to_coeffs(self.phi, self.d)

    @property
    def ma_coeffs(self):
        return block_to_coeffs(self.theta, self.d)

    def errors_for(self, values):
        if self.phase1_pi is None or self.phase1_pi.size == 0:
            if self.theta.size:
                raise InvalidInputError("fit stores no Phase-I coefficients to rebuild residuals")
            return None
        p_tilde = self.phase1_pi.shape[1] // self.d
        if values.shape[0] <= p_tilde:
            raise InvalidInputError(f"history needs more than {p_tilde} rows to rebuild residuals")
        out = np.full(values.shape, np.nan)
        out[p_tilde:] = var_residuals(values, self.phase1_pi, p_tilde)
        return out

    @classmethod
    def from_dict(cls, obj) -> "FitRecord":
        if obj.get("format") != FIT_FORMAT:
            raise InvalidInputError("not a fit file")
        d = len(obj["names"])

        def block(key):
            val = obj.get(key)
            arr = np.asarray(val if val else np.zeros((d, 0)), dtype=float)
            return arr.reshape(d, -1)

        err = obj.get("error_tail")
        return cls(phi=block("phi"), theta=block("theta"),
                   scaling=Scaling(np.asarray(obj["scaling"]["mean"], float),
                                   np.asarray(obj["scaling"]["scale"], float)),
                   history=np.asarray(obj["history_tail"], float).reshape(-1, d),
                   error_history=None if not err else np.asarray(err, float).reshape(-1, d),
                   phase1_pi=block("phase1_pi") if obj.get("phase1_pi") else None,
                   names=list(obj["names"]))


def _tail(arr, n):
    if arr is None or n == 0:
        return []
    return np.asarray(arr)[-n:].tolist()


def fit_to_dict(phase1: PhaseIResult | None, phase2: PhaseIIResult, names, config=None) -> dict:
    """JSON-ready description of a two-phase fit (see the README for the schema)."""
    from .evaluate import lag_matrix

    scaling = phase2.scaling if phase2.scaling is not None else Scaling.identity(phase2.d)
    keep = max(phase2.p, 1 if phase1 is None else phase1.p_tilde)
    report = lag_matrix(phase2)
    return {
        "format": FIT_FORMAT,
        "version": FIT_VERSION,
        "names": list(names),
        "T": int(phase2.history.shape[0]),
        "config": None if config is None else config.to_dict(),
        "orders": {"p": phase2.p, "q": phase2.q,
                   "p_tilde": None if phase1 is None else phase1.p_tilde},
        "lambda": {"phi": phase2.lambda_phi, "theta": phase2.lambda_theta,
                   "pi": None if phase1 is None else phase1.lambda_chosen},
        "scaling": scaling.to_dict(),
        "phi": phase2.phi_hat.tolist(),
        "theta": phase2.theta_hat.tolist(),
        "phi_original": scaling.to_original(phase2.phi_hat).tolist(),
        "theta_original": scaling.to_original(phase2.theta_hat).tolist(),
        "phase1_pi": None if phase1 is None else phase1.pi_hat.tolist(),
        "history_tail": _tail(phase2.history, keep),
        "error_tail": _tail(phase2.errors, phase2.q),
        "residual_tail": _tail(phase2.residuals, max(phase2.q, 1)),
        "lag_matrix": report.to_dict(),
        "cv": {"phase1": None if phase1 is None or phase1.cv is None else phase1.cv.to_dict(),
               "phase2": None if phase2.cv is None else phase2.cv.to_dict()},
    }
