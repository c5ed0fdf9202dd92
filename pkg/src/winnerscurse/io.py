"""Summary-statistic ingestion and report files.

Input is a headered TSV with columns

    snp_id  p_value  beta_hat  se  alpha  p_convention  effect_scale  [follow_up]

``se`` or ``p_value`` may be empty (not both). ``beta_hat`` and ``follow_up``
are on the effect scale (log odds ratio or regression coefficient). Lines
starting with ``#`` are ignored.

Report rows carry effect-scale columns and, for ``log_or`` records, odds-ratio
columns in the same order; see :data:`REPORT_COLUMNS`.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .pipeline import Correction
from .stats import TestContext, standard_normal_isf, standard_normal_sf

P_CONVENTIONS = ("one_sided", "two_sided")
EFFECT_SCALES = ("log_or", "coefficient")
INPUT_COLUMNS = ("snp_id", "p_value", "beta_hat", "se", "alpha", "p_convention", "effect_scale")

# estimator tag -> report column stem
_STEMS = {"N": "naive", "MLE": "mle", "B.L": "bl", "B.H": "bh", "B.BMA": "bma"}
_EFFECT_COLUMNS = ("naive", "mle", "mle_low", "mle_high", "bl", "bl_low", "bl_high",
                   "bh", "bh_low", "bh_high", "bma", "follow_up")
REPORT_COLUMNS = (
    ("snp_id", "effect_scale", "p_convention", "alpha", "t_obs", "se", "c")
    + _EFFECT_COLUMNS
    + ("mle_clamped", "r_hat", "w_m1")
    + tuple("or_" + col for col in _EFFECT_COLUMNS)
)


class RecordError(ValueError):
    """A record that cannot be corrected; the message names the record."""


class NotSignificantRecord(RecordError):
    pass


@dataclass(frozen=True)
class SummaryRecord:
    snp_id: str
    beta_hat: float
    alpha: float
    p_value: Optional[float] = None
    se: Optional[float] = None
    p_convention: str = "one_sided"
    effect_scale: str = "log_or"
    follow_up: Optional[float] = None

    def __post_init__(self):
        if self.p_value is None and self.se is None:
            raise RecordError(f"{self.snp_id}: need a p-value or a standard error")
        if self.p_convention not in P_CONVENTIONS:
            raise RecordError(f"{self.snp_id}: p_convention must be one of {P_CONVENTIONS}")
        if self.effect_scale not in EFFECT_SCALES:
            raise RecordError(f"{self.snp_id}: effect_scale must be one of {EFFECT_SCALES}")
        if not math.isfinite(self.beta_hat) or self.beta_hat == 0:
            raise RecordError(f"{self.snp_id}: beta_hat must be finite and nonzero")
        if self.p_value is not None and not 0 < self.p_value < 1:
            raise RecordError(f"{self.snp_id}: p_value must lie in (0, 1)")
        if self.se is not None and not self.se > 0:
            raise RecordError(f"{self.snp_id}: se must be positive")
        if not 0 < self.alpha < 0.5:
            raise RecordError(f"{self.snp_id}: alpha must lie in (0, 0.5)")

    @property
    def orientation(self) -> int:
        """+1, or -1 when the reported effect is protective and gets flipped to the risk direction."""
        return 1 if self.beta_hat > 0 else -1


def ingest(record: SummaryRecord) -> TestContext:
    """Test context on the risk-oriented scale.

    With a standard error, ``t = |beta| / se``; otherwise the p-value is
    converted under the record's convention and ``se = |beta| / t``.
    """
    beta = abs(record.beta_hat)
    if record.se is not None:
        t, se = beta / record.se, record.se
    else:
        q = record.p_value if record.p_convention == "one_sided" else record.p_value / 2.0
        t = standard_normal_isf(q)
        if not t > 0:
            raise NotSignificantRecord(f"{record.snp_id}: p={record.p_value} gives a nonpositive statistic")
        se = beta / t
    ctx = TestContext(t, record.alpha, se)
    if not ctx.significant:
        raise NotSignificantRecord(
            f"{record.snp_id}: t={t:.4g} does not exceed c={ctx.c:.4g} at alpha={record.alpha:g}"
        )
    return ctx


def reemit(ctx: TestContext, record: SummaryRecord) -> tuple[float, float]:
    """``(p_value, beta_hat)`` implied by an ingested context."""
    p = standard_normal_sf(ctx.t_obs)
    if record.p_convention == "two_sided":
        p *= 2.0
    return p, record.orientation * ctx.t_obs * ctx.se


def _parse_float(text, name, required=True):
    text = (text or "").strip()
    if not text or text.upper() == "NA":
        if required:
            raise RecordError(f"missing {name}")
        return None
    try:
        return float(text)
    except ValueError:
        raise RecordError(f"{name} is not a number: {text!r}") from None


def read_records(path, *, alpha: Optional[float] = None, p_convention: Optional[str] = None):
    """Parse an input TSV.

    Returns ``(records, problems)``; ``problems`` lists ``(line_number, message)``
    for rows that could not be parsed. ``alpha`` and ``p_convention`` override
    the file's columns when given.
    """
    records, problems = [], []
    with open(path, newline="") as fh:
        lines = [(i, line) for i, line in enumerate(fh, start=1) if line.strip() and not line.startswith("#")]
    if not lines:
        return records, problems
    header_line, header = lines[0]
    columns = [h.strip() for h in header.rstrip("\n").split("\t")]
    missing = [c for c in ("snp_id", "beta_hat") if c not in columns]
    if missing:
        problems.append((header_line, f"header lacks required columns {missing}"))
        return records, problems
    reader = csv.DictReader((line for _, line in lines[1:]), fieldnames=columns, delimiter="\t")
    for (lineno, _), row in zip(lines[1:], reader):
        try:
            if None in row:
                raise RecordError("too many fields")
            row_alpha = alpha if alpha is not None else _parse_float(row.get("alpha"), "alpha")
            conv = p_convention or (row.get("p_convention") or "").strip() or "one_sided"
            scale = (row.get("effect_scale") or "").strip() or "log_or"
            records.append((lineno, SummaryRecord(
                snp_id=(row.get("snp_id") or "").strip() or f"line{lineno}",
                beta_hat=_parse_float(row.get("beta_hat"), "beta_hat"),
                alpha=row_alpha,
                p_value=_parse_float(row.get("p_value"), "p_value", required=False),
                se=_parse_float(row.get("se"), "se", required=False),
                p_convention=conv,
                effect_scale=scale,
                follow_up=_parse_float(row.get("follow_up"), "follow_up", required=False),
            )))
        except RecordError as exc:
            problems.append((lineno, str(exc)))
    return records, problems


@dataclass
class ReportRow:
    snp_id: str
    effect_scale: str
    p_convention: str
    alpha: float
    t_obs: float
    se: float
    c: float
    effects: dict  # effect-scale column -> value or None, oriented as reported
    mle_clamped: bool
    r_hat: float
    w_m1: float
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "snp_id": self.snp_id, "effect_scale": self.effect_scale, "p_convention": self.p_convention,
            "alpha": self.alpha, "t_obs": self.t_obs, "se": self.se, "c": self.c,
        }
        out.update(self.effects)
        out.update(mle_clamped=self.mle_clamped, r_hat=self.r_hat, w_m1=self.w_m1)
        for col in _EFFECT_COLUMNS:
            out["or_" + col] = to_reported_scale(self.effects[col], self.effect_scale)
        return out


def to_reported_scale(value, effect_scale):
    """The one place effects become odds ratios."""
    if value is None or effect_scale != "log_or":
        return None
    return math.exp(value)


def build_row(record: SummaryRecord, result: Correction) -> ReportRow:
    sign = record.orientation
    effects = {}
    for tag, stem in _STEMS.items():
        est = result.estimates[tag]
        effects[stem] = sign * est.point
        if stem in ("mle", "bl", "bh"):
            lo, hi = est.interval
            lo, hi = (lo, hi) if sign > 0 else (-hi, -lo)
            effects[stem + "_low"], effects[stem + "_high"] = lo, hi
    effects["follow_up"] = record.follow_up
    effects = {col: effects[col] for col in _EFFECT_COLUMNS}
    ctx = result.ctx
    return ReportRow(
        snp_id=record.snp_id, effect_scale=record.effect_scale, p_convention=record.p_convention,
        alpha=record.alpha, t_obs=ctx.t_obs, se=ctx.se, c=ctx.c, effects=effects,
        mle_clamped=result.estimates["MLE"].clamped, r_hat=result.bridge.r_hat,
        w_m1=result.model_weights[0],
    )


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_tsv(dict_rows, columns, header_lines=()) -> str:
    lines = [f"# {h}" for h in header_lines]
    lines.append("\t".join(columns))
    for row in dict_rows:
        lines.append("\t".join(_fmt(row.get(col)) for col in columns))
    return "\n".join(lines) + "\n"


def format_json(dict_rows, run_metadata) -> str:
    rows = [{k: _json_safe(v) for k, v in row.items()} for row in dict_rows]
    return json.dumps({"run": run_metadata, "rows": rows}, indent=2, sort_keys=False) + "\n"


def write_atomic(path, text: str):
    """Write via a temporary file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_rows(tables):
    for table in tables:
        yield from table.rows()


SUMMARY_COLUMNS = ("alpha", "power", "n", "mu_true", "method", "mean", "bias", "variance", "rmse")


def replicate_rows(tables, names):
    for cell, table in enumerate(tables):
        for i in range(table.replicates):
            row = {"cell": cell, "alpha": table.alpha, "power": table.power, "n": table.n,
                   "seed": table.seeds[i], "t_obs": float(table.t_obs[i])}
            row.update({name: float(table.estimates[i, j]) for j, name in enumerate(names)})
            yield row
