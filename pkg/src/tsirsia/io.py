"""CSV readers and writers, run manifests and JSON configs.

The semi-monthly grid splits every month into two equal halves. Yearly
inputs are anchored at mid-year and interpolated onto half-month midpoints.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .model import DemographicSeries, DomainError, SiaCalendar, adjusted_births


class ValidationError(DomainError):
    """Malformed input file or config."""


# --------------------------------------------------------------------------
# helpers

def _read_rows(path) -> tuple[list[str], list[dict]]:
    if not os.path.exists(path):
        raise ValidationError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty file")
        fields = [f.strip() for f in reader.fieldnames]
        rows = []
        for raw in reader:
            if not any((v or "").strip() for v in raw.values()):
                continue
            rows.append({k.strip(): (v or "").strip() for k, v in raw.items() if k is not None})
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return fields, rows


def _number(path, row_no, row, col, kind=float):
    text = row.get(col, "")
    if text == "":
        raise ValidationError(f"{path}: row {row_no}: missing value for '{col}'")
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{path}: row {row_no}: '{col}' is not a number: {text!r}") from None
    if not np.isfinite(value):
        raise ValidationError(f"{path}: row {row_no}: '{col}' must be finite")
    if kind is int:
        if value != int(value):
            raise ValidationError(f"{path}: row {row_no}: '{col}' must be an integer, got {text!r}")
        return int(value)
    return value


def _require(path, fields, needed):
    missing = [c for c in needed if c not in fields]
    if missing:
        raise ValidationError(f"{path}: missing column(s) {', '.join(missing)}")


def _fmt(x: float) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# demography

def semi_month_midpoints(first_year: int, n_years: int) -> np.ndarray:
    """Decimal-year midpoints of the semi-months of ``n_years`` whole years."""
    j = np.arange(24 * n_years)
    return first_year + (j + 0.5) / 24.0


def interpolate_yearly(years, values, grid) -> np.ndarray:
    """Linear interpolation of mid-year values, extrapolated at both ends."""
    x = np.asarray(years, dtype=float) + 0.5
    y = np.asarray(values, dtype=float)
    if len(x) == 1:
        return np.full(len(grid), y[0])
    out = np.interp(grid, x, y)
    lo, hi = grid < x[0], grid > x[-1]
    out[lo] = y[0] + (grid[lo] - x[0]) * (y[1] - y[0]) / (x[1] - x[0])
    out[hi] = y[-1] + (grid[hi] - x[-1]) * (y[-1] - y[-2]) / (x[-1] - x[-2])
    return out


def load_demography(path, efficacy: float | None = None) -> DemographicSeries:
    """Read demographic inputs.

    Rows are keyed by either ``t`` (semi-monthly, contiguous from 1) or
    ``year`` (one row per calendar year, with ``L`` and ``B`` as annual
    totals). Columns ``N``, ``L`` and ``R`` are required; ``B`` is derived
    from them when absent.

    Parameters
    ----------
    path : str or path-like
    efficacy : float, optional
        Vaccine efficacy used when ``B`` has to be derived.

    Returns
    -------
    DemographicSeries
    """
    fields, rows = _read_rows(path)
    if "t" in fields:
        key = "t"
    elif "year" in fields:
        key = "year"
    else:
        raise ValidationError(f"{path}: need a 't' or 'year' column")
    _require(path, fields, ["N", "L", "R"])
    has_B = "B" in fields
    keys, cols = [], {c: [] for c in ("N", "L", "R", "B")}
    for i, row in enumerate(rows, start=2):
        k = _number(path, i, row, key, int)
        if keys and k != keys[-1] + 1:
            what = "semi-month" if key == "t" else "year"
            raise ValidationError(f"{path}: row {i}: {what} {k} does not follow {keys[-1]} "
                                  "(rows must be contiguous and increasing)")
        if key == "t" and not keys and k != 1:
            raise ValidationError(f"{path}: row {i}: semi-month index must start at 1")
        keys.append(k)
        for c in ("N", "L", "R"):
            cols[c].append(_number(path, i, row, c))
        if has_B:
            cols["B"].append(_number(path, i, row, "B"))
        if not 0.0 <= cols["R"][-1] <= 1.0:
            raise ValidationError(f"{path}: row {i}: coverage R={cols['R'][-1]} outside [0, 1]")
        if cols["N"][-1] <= 0:
            raise ValidationError(f"{path}: row {i}: population N must be positive")
        if cols["L"][-1] < 0:
            raise ValidationError(f"{path}: row {i}: births L must be non-negative")

    arrays = {c: np.array(v, dtype=float) for c, v in cols.items() if v}
    if key == "year":
        grid = semi_month_midpoints(keys[0], len(keys))
        arrays = {c: interpolate_yearly(keys, v, grid) for c, v in arrays.items()}
        arrays["L"] = arrays["L"] / 24.0
        if has_B:
            arrays["B"] = arrays["B"] / 24.0
        bad = np.flatnonzero((arrays["R"] < 0) | (arrays["R"] > 1))
        if bad.size:
            raise ValidationError(f"{path}: interpolated coverage leaves [0, 1] at semi-month {bad[0] + 1}")
    if not has_B:
        kw = {} if efficacy is None else {"efficacy": efficacy}
        arrays["B"] = adjusted_births(arrays["L"], arrays["R"], **kw)
    return DemographicSeries(N=arrays["N"], L=arrays["L"], R=arrays["R"], B=arrays["B"])


def write_demography(path, demog: DemographicSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "N", "L", "R", "B"])
        for t in range(len(demog)):
            w.writerow([t + 1, _fmt(demog.N[t]), _fmt(demog.L[t]), _fmt(demog.R[t]), _fmt(demog.B[t])])


# --------------------------------------------------------------------------
# incidence

@dataclass(frozen=True)
class Incidence:
    counts: np.ndarray
    start: tuple[int, int]  # (year, month) of the first count

    def __len__(self) -> int:
        return len(self.counts)


def read_incidence(path) -> Incidence:
    """Monthly counts with their calendar start."""
    fields, rows = _read_rows(path)
    _require(path, fields, ["year", "month", "cases"])
    counts, seen, prev = [], set(), None
    start = None
    for i, row in enumerate(rows, start=2):
        y = _number(path, i, row, "year", int)
        m = _number(path, i, row, "month", int)
        c = _number(path, i, row, "cases", int)
        if not 1 <= m <= 12:
            raise ValidationError(f"{path}: row {i}: month {m} outside 1..12")
        if (y, m) in seen:
            raise ValidationError(f"{path}: row {i}: duplicate month {y}-{m:02d}")
        if c < 0:
            raise ValidationError(f"{path}: row {i}: negative case count {c}")
        idx = 12 * y + (m - 1)
        if prev is not None and idx != prev + 1:
            raise ValidationError(f"{path}: row {i}: {y}-{m:02d} is not the month after the previous "
                                  "row (gap or disorder)")
        if start is None:
            start = (y, m)
        seen.add((y, m))
        prev = idx
        counts.append(c)
    return Incidence(np.array(counts, dtype=np.int64), start)


def load_incidence(path) -> np.ndarray:
    """Contiguous monthly reported counts from ``year,month,cases`` rows."""
    return read_incidence(path).counts


def write_incidence(path, counts, start: tuple[int, int] = (2000, 1)) -> None:
    y, m = start
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "month", "cases"])
        for c in np.asarray(counts):
            w.writerow([y, m, int(c)])
            m += 1
            if m > 12:
                y, m = y + 1, 1


# --------------------------------------------------------------------------
# SIA calendar

def semi_month_index(year: int, month: int, half: int, origin: tuple[int, int]) -> int:
    """1-based semi-month of ``(year, month, half)`` on a grid starting at ``origin``."""
    if half not in (1, 2):
        raise ValidationError(f"half must be 1 or 2, got {half}")
    months = 12 * (year - origin[0]) + (month - origin[1])
    return 2 * months + half


def load_calendar(path, origin: tuple[int, int] | None = None) -> SiaCalendar:
    """Campaign phases with target counts.

    Columns: ``campaign``, ``target`` and either ``t`` or ``year, month,
    half`` (the latter needs ``origin``, the ``(year, month)`` of ``t=1``).
    An optional ``campaign_total`` column sets the denominator; otherwise it
    is the sum of the campaign's phase targets.
    """
    fields, rows = _read_rows(path)
    _require(path, fields, ["campaign", "target"])
    by_date = "t" not in fields
    if by_date:
        _require(path, fields, ["year", "month", "half"])
        if origin is None:
            raise ValidationError(f"{path}: dated phases need the series origin (year, month)")
    camps: dict[str, list] = {}
    totals: dict[str, float] = {}
    for i, row in enumerate(rows, start=2):
        name = row.get("campaign", "")
        if not name:
            raise ValidationError(f"{path}: row {i}: missing campaign name")
        if by_date:
            t = semi_month_index(_number(path, i, row, "year", int), _number(path, i, row, "month", int),
                                 _number(path, i, row, "half", int), origin)
        else:
            t = _number(path, i, row, "t", int)
        if t < 2:
            raise ValidationError(f"{path}: row {i}: phase at t={t} has no preceding semi-month")
        target = _number(path, i, row, "target")
        if target < 0:
            raise ValidationError(f"{path}: row {i}: negative target")
        if any(t == tt for tt, _, _ in camps.get(name, [])):
            raise ValidationError(f"{path}: row {i}: campaign {name!r} has two phases at t={t}")
        camps.setdefault(name, []).append((t, target, i))
        if row.get("campaign_total", ""):
            totals[name] = _number(path, i, row, "campaign_total")

    spans = []
    phases = []
    for name, members in camps.items():
        members.sort()
        total = totals.get(name, sum(tg for _, tg, _ in members))
        if total <= 0:
            raise ValidationError(f"{path}: campaign {name!r} has zero total target")
        deltas = [(t, tg / total) for t, tg, _ in members]
        if sum(d for _, d in deltas) > 1.0 + 1e-9:
            raise ValidationError(f"{path}: campaign {name!r}: phase targets exceed the campaign total")
        first, last = members[0][0], members[-1][0]
        for other, (a, b) in spans:
            if first <= b and a <= last:
                raise ValidationError(f"{path}: campaigns {other!r} and {name!r} overlap")
        spans.append((name, (first, last)))
        phases.append(deltas)
    return SiaCalendar.from_campaigns(phases)


def write_calendar(path, calendar: SiaCalendar) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["campaign", "t", "target", "campaign_total"])
        for j, (k, members) in enumerate(sorted(calendar.campaigns().items()), start=1):
            for t, d in members:
                w.writerow([f"c{j}", t, _fmt(d), "1.0"])


# --------------------------------------------------------------------------
# series, manifest, config

def write_series(path, demog: DemographicSeries, latent=None, C=None) -> None:
    """Semi-monthly table; monthly counts sit on the second half of each month."""
    cols = ["t", "m", "N", "B"]
    if latent is not None:
        cols += ["I", "S", "S_star"]
    if C is not None:
        cols.append("C")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(len(demog)):
            row = [i + 1, i // 2 + 1, _fmt(demog.N[i]), _fmt(demog.B[i])]
            if latent is not None:
                row += [int(latent.I[i]), _fmt(latent.S[i]), _fmt(latent.S_star[i])]
            if C is not None:
                row.append(int(C[i // 2]) if i % 2 == 1 and i // 2 < len(C) else "")
            w.writerow(row)


def write_csv(path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config: dict, seed, files) -> str:
    """Plain-text record of what produced the files in ``out_dir``."""
    from . import __version__

    path = os.path.join(out_dir, "manifest.txt")
    lines = [f"command: {command}", f"tsirsia: {__version__}",
             f"config_sha256: {config_hash(config)}", f"seed: {seed}",
             f"config: {canonical_json(config)}", "files:"]
    for name in sorted(files):
        lines.append(f"  {file_hash(os.path.join(out_dir, name))}  {name}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def load_config(path) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ValidationError(f"{path}: config file not found")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return cfg
