"""Relating speaker-level turn dynamics to post-conversation survey outcomes."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .metrics import SpeakerAggregate

SURVEY_KEYS = ("conversation_id", "speaker")
DEFAULT_OUTCOMES = ("enjoyment", "affect_overall", "shared_reality")
Z_95 = 1.96


@dataclass(frozen=True)
class SurveyRecord:
    conversation_id: str
    speaker: str
    values: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.values.get(name, math.nan)

    @property
    def enjoyment(self) -> float:
        return self["enjoyment"]

    @property
    def affect_overall(self) -> float:
        return self["affect_overall"]

    @property
    def shared_reality(self) -> float:
        return self["shared_reality"]


def read_surveys(path: str | Path) -> list[SurveyRecord]:
    """Read a survey CSV keyed by (conversation_id, speaker).

    Every column besides the keys is kept as a numeric outcome; blank cells
    become NaN.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(SURVEY_KEYS) <= set(reader.fieldnames):
            raise ValueError(f"{path}: survey CSV needs columns {SURVEY_KEYS}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            values = {}
            for k, v in row.items():
                if k in SURVEY_KEYS:
                    continue
                try:
                    values[k] = float(v) if v not in ("", None) else math.nan
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: non-numeric {k}={v!r}") from None
            out.append(SurveyRecord(row["conversation_id"], row["speaker"], values))
    return out


def write_surveys(records: Sequence[SurveyRecord], path: str | Path) -> None:
    names = list(DEFAULT_OUTCOMES)
    for r in records:
        names.extend(k for k in r.values if k not in names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*SURVEY_KEYS, *names])
        for r in records:
            w.writerow([r.conversation_id, r.speaker, *(_fmt(r[n]) for n in names)])


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.6f}"


@dataclass(frozen=True)
class JoinedRow:
    aggregate: SpeakerAggregate
    survey: SurveyRecord

    @property
    def key(self) -> tuple[str, str]:
        return (self.aggregate.conversation_id, self.aggregate.speaker)


@dataclass(frozen=True)
class JoinResult:
    rows: list[JoinedRow]
    unmatched_aggregates: int = 0
    unmatched_surveys: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def join_survey(aggregates: Iterable[SpeakerAggregate], surveys: Iterable[SurveyRecord]) -> JoinResult:
    """Inner join on (conversation_id, speaker); unmatched rows are counted.

    Raises:
        ValueError: a (conversation_id, speaker) key repeats in ``surveys``.
    """
    by_key: dict[tuple[str, str], SurveyRecord] = {}
    for s in surveys:
        key = (s.conversation_id, s.speaker)
        if key in by_key:
            raise ValueError(f"duplicate survey key {key}")
        by_key[key] = s
    rows = []
    unmatched = 0
    used = set()
    for agg in aggregates:
        key = (agg.conversation_id, agg.speaker)
        if key in by_key:
            rows.append(JoinedRow(agg, by_key[key]))
            used.add(key)
        else:
            unmatched += 1
    return JoinResult(rows, unmatched, len(by_key) - len(used))


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    ci_low: float
    ci_high: float
    t: float
    df: int
    p: float
    n: int


@dataclass(frozen=True)
class PairedComparisonResult:
    r_a: float
    r_b: float
    r_ab: float
    t: float
    df: int
    p: float
    n: int


def t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with t test and Fisher-z 95% interval.

    ``t = r * sqrt((n - 2) / (1 - r**2))`` on ``n - 2`` degrees of freedom,
    two-sided. The interval is ``tanh(atanh(r) +/- 1.96 / sqrt(n - 3))``.
    For ``|r| == 1`` the interval collapses to ``[r, r]``, t is infinite and
    p is 0; for ``n == 3`` and ``|r| < 1`` the interval is ``[-1, 1]``.

    Raises:
        ValueError: lengths differ, n < 3, or either input has zero variance
            ("degenerate input").
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("x and y must be 1-D and the same length")
    n = xa.size
    if n < 3:
        raise ValueError(f"pearson needs n >= 3, got {n}")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("degenerate input: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2

    if abs(r) == 1.0:
        return CorrelationResult(r, r, r, math.copysign(math.inf, r), df, 0.0, n)
    t = r * math.sqrt(df / (1.0 - r * r))
    if n > 3:
        z = math.atanh(r)
        half = Z_95 / math.sqrt(n - 3)
        lo, hi = math.tanh(z - half), math.tanh(z + half)
    else:
        lo, hi = -1.0, 1.0
    return CorrelationResult(r, lo, hi, t, df, t_two_sided_p(t, df), n)


def williams_test(r_a: float, r_b: float, r_ab: float, n: int) -> PairedComparisonResult:
    """Williams' t for two dependent correlations sharing one variable.

    ``r_a`` and ``r_b`` correlate predictors a and b with a common outcome;
    ``r_ab`` correlates the predictors. Two-sided p on ``n - 3`` df.

    Raises:
        ValueError: a correlation outside (-1, 1), n < 5, or a non-positive
            denominator ("degenerate correlation matrix").
    """
    for name, r in (("r_a", r_a), ("r_b", r_b), ("r_ab", r_ab)):
        if not -1.0 < r < 1.0:
            raise ValueError(f"{name}={r} must lie in (-1, 1)")
    if n < 5:
        raise ValueError(f"williams_test needs n >= 5, got {n}")
    # Terms grouped so swapping r_a and r_b negates t exactly.
    k = 1 - (r_a * r_a + r_b * r_b) - r_ab * r_ab + 2 * (r_a * r_b) * r_ab
    rbar = (r_a + r_b) / 2
    denom = 2 * k * (n - 1) / (n - 3) + rbar**2 * (1 - r_ab) ** 3
    if not denom > 0:
        raise ValueError("degenerate correlation matrix")
    t = (r_a - r_b) * math.sqrt((n - 1) * (1 + r_ab) / denom)
    df = n - 3
    return PairedComparisonResult(r_a, r_b, r_ab, t, df, t_two_sided_p(t, df), n)


@dataclass(frozen=True)
class ModelComparison:
    outcome: str
    baseline: CorrelationResult
    naturalturn: CorrelationResult
    williams: PairedComparisonResult
    n: int


def paired_vectors(
    joined_baseline: Iterable[JoinedRow], joined_naturalturn: Iterable[JoinedRow], outcome: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align (baseline duration, NaturalTurn duration, outcome) on shared keys.

    Keys missing on either side, lacking a mean duration, or with a NaN
    outcome are dropped.
    """
    base = {row.key: row for row in joined_baseline}
    xb, xn, y = [], [], []
    for row in joined_naturalturn:
        other = base.get(row.key)
        if other is None:
            continue
        dn = row.aggregate.mean_turn_duration_s
        db = other.aggregate.mean_turn_duration_s
        val = row.survey[outcome]
        if dn is None or db is None or math.isnan(val):
            continue
        xb.append(db)
        xn.append(dn)
        y.append(val)
    return np.asarray(xb), np.asarray(xn), np.asarray(y)


def compare_models(
    joined_baseline: Iterable[JoinedRow], joined_naturalturn: Iterable[JoinedRow], outcome: str
) -> ModelComparison:
    """Correlate each model's mean turn duration with ``outcome`` and test the difference.

    The Williams test uses the empirical correlation between the two
    duration measures as ``r_ab``; a positive t means the NaturalTurn
    correlation is the larger one.
    """
    xb, xn, y = paired_vectors(joined_baseline, joined_naturalturn, outcome)
    n = len(y)
    if n < 4:
        raise ValueError(f"compare_models needs at least 4 shared speakers, got {n}")
    rb = pearson(xb, y)
    rn = pearson(xn, y)
    r_ab = pearson(xn, xb).r
    w = williams_test(rn.r, rb.r, r_ab, n)
    return ModelComparison(outcome, rb, rn, w, n)
