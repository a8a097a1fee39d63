"""CSV readers and writers for transcripts, features, summaries and reports."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import Histogram, SpeakerAggregate, SummaryStats, TurnFeatures
from .outcomes import ModelComparison
from .segmentation import Transcript, Turn, TurnKind

TRANSCRIPT_COLUMNS = (
    "conversation_id", "turn_id", "speaker", "kind", "start_s", "end_s",
    "duration_s", "n_words", "parent_turn_id", "text",
)
FEATURE_COLUMNS = (
    "conversation_id", "turn_id", "speaker", "kind", "duration_s", "n_words",
    "interval_to_prev_s", "is_overlap", "same_speaker", "excluded",
)
SUMMARY_COLUMNS = (
    "model", "mean_turn_duration_s", "mean_words_per_turn",
    "mean_turns_per_speaker_per_conversation", "mean_interval_ms",
    "prop_negative_intervals", "n_turns", "n_intervals", "n_speakers",
)
AGGREGATE_COLUMNS = (
    "conversation_id", "speaker", "n_turns", "mean_turn_duration_s",
    "mean_words_per_turn", "prop_overlap",
)
REPORT_COLUMNS = (
    "test", "model", "outcome", "n", "r", "ci_low", "ci_high", "t", "df", "p", "r_a", "r_b", "r_ab",
)
HISTOGRAM_COLUMNS = ("bin_start", "bin_end", "count")

_MS = Decimal("0.001")


def _ms(x: float) -> Decimal:
    return Decimal(repr(float(x))).quantize(_MS, rounding=ROUND_HALF_UP)


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def _quote(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _plain(s: str) -> str:
    return _quote(s) if any(c in s for c in ',"\r\n') else s


def atomic_write(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def transcripts_to_csv(transcripts: Iterable[Transcript], header: bool = True) -> str:
    lines = [",".join(TRANSCRIPT_COLUMNS)] if header else []
    for tr in transcripts:
        for t in tr.turns:
            start, end = _ms(t.start_s), _ms(t.end_s)
            lines.append(
                ",".join(
                    (
                        _plain(tr.conversation_id),
                        str(t.turn_id),
                        _plain(t.speaker),
                        t.kind.value,
                        str(start),
                        str(end),
                        str(end - start),
                        str(t.n_words),
                        "" if t.parent_turn_id is None else str(t.parent_turn_id),
                        _quote(t.text),
                    )
                )
            )
    return "\n".join(lines) + "\n"


def write_transcripts(transcripts: Iterable[Transcript], path: str | Path) -> None:
    atomic_write(path, transcripts_to_csv(transcripts))


def _check_header(fieldnames, expected, path) -> None:
    if fieldnames is None or tuple(fieldnames) != tuple(expected):
        raise ValueError(f"{path}: expected columns {expected}, got {fieldnames}")


def read_transcripts(path: str | Path, model: str = "") -> list[Transcript]:
    """Read a transcript CSV (one or many conversations) back into Transcripts.

    Turns come back without their word tokens; spans, kinds, parents and text
    are preserved, which is everything the statistics need.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, TRANSCRIPT_COLUMNS, path)
        by_conv: dict[str, list[Turn]] = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                turn = Turn(
                    turn_id=int(row["turn_id"]),
                    speaker=row["speaker"],
                    kind=TurnKind(row["kind"]),
                    start_s=float(row["start_s"]),
                    end_s=float(row["end_s"]),
                    text=row["text"],
                    parent_turn_id=int(row["parent_turn_id"]) if row["parent_turn_id"] else None,
                )
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            by_conv.setdefault(row["conversation_id"], []).append(turn)
    return [Transcript(conv, model, tuple(turns)) for conv, turns in by_conv.items()]


def read_transcript_inputs(paths: Sequence[str | Path], model: str = "") -> list[Transcript]:
    """Read transcript CSVs from files and/or directories (``*.csv``, sorted)."""
    out = []
    for p in paths:
        p = Path(p)
        files = sorted(p.glob("*.csv")) if p.is_dir() else [p]
        if p.is_dir() and not files:
            raise FileNotFoundError(f"no transcript CSVs in {p}")
        for f in files:
            out.extend(read_transcripts(f, model))
    return out


def features_to_csv(features: Iterable[TurnFeatures]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FEATURE_COLUMNS)
    for f in features:
        w.writerow(
            [
                f.conversation_id,
                f.turn_id,
                f.speaker,
                f.kind.value,
                str(_ms(f.duration_s)),
                f.n_words,
                "" if f.interval_to_prev_s is None else str(_ms(f.interval_to_prev_s)),
                "true" if f.is_overlap else "false",
                "true" if f.same_speaker else "false",
                ";".join(sorted(f.excluded)),
            ]
        )
    return buf.getvalue()


def read_features(path: str | Path) -> list[TurnFeatures]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, FEATURE_COLUMNS, path)
        return [
            TurnFeatures(
                conversation_id=row["conversation_id"],
                turn_id=int(row["turn_id"]),
                speaker=row["speaker"],
                kind=TurnKind(row["kind"]),
                duration_s=float(row["duration_s"]),
                n_words=int(row["n_words"]),
                interval_to_prev_s=float(row["interval_to_prev_s"]) if row["interval_to_prev_s"] else None,
                same_speaker=row["same_speaker"] == "true",
                excluded=frozenset(r for r in row["excluded"].split(";") if r),
            )
            for row in reader
        ]


def summaries_to_csv(summaries: Iterable[SummaryStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summaries:
        w.writerow([s.model] + [_num(getattr(s, c)) for c in SUMMARY_COLUMNS[1:]])
    return buf.getvalue()


def read_summaries(path: str | Path) -> list[SummaryStats]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, SUMMARY_COLUMNS, path)
        out = []
        for row in reader:
            vals = {c: float(row[c]) if row[c] else math.nan for c in SUMMARY_COLUMNS[1:6]}
            counts = {c: int(row[c]) for c in SUMMARY_COLUMNS[6:]}
            out.append(SummaryStats(model=row["model"], **vals, **counts))
        return out


def table_to_csv(a: SummaryStats, b: SummaryStats) -> str:
    """Side-by-side five-statistic table: one row per statistic, one column per model."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic", a.model or "a", b.model or "b"])
    for attr, label in SummaryStats.STATISTICS:
        w.writerow([label, f"{getattr(a, attr):.2f}", f"{getattr(b, attr):.2f}"])
    return buf.getvalue()


def histogram_to_csv(hist: Histogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTOGRAM_COLUMNS)
    for lo, hi, count in hist.bins:
        w.writerow([_num(lo), _num(hi), count])
    return buf.getvalue()


def aggregates_to_csv(aggregates: Iterable[SpeakerAggregate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for a in aggregates:
        w.writerow(
            [a.conversation_id, a.speaker, a.n_turns, _num(a.mean_turn_duration_s),
             _num(a.mean_words_per_turn), _num(a.prop_overlap)]
        )
    return buf.getvalue()


def read_aggregates(path: str | Path) -> list[SpeakerAggregate]:
    def opt(v: str) -> float | None:
        return float(v) if v else None

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, AGGREGATE_COLUMNS, path)
        return [
            SpeakerAggregate(
                conversation_id=row["conversation_id"],
                speaker=row["speaker"],
                n_turns=int(row["n_turns"]),
                mean_turn_duration_s=opt(row["mean_turn_duration_s"]),
                mean_words_per_turn=opt(row["mean_words_per_turn"]),
                prop_overlap=opt(row["prop_overlap"]),
            )
            for row in reader
        ]


def report_to_csv(comparisons: Iterable[ModelComparison]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for c in comparisons:
        for model, res in (("baseline", c.baseline), ("naturalturn", c.naturalturn)):
            w.writerow(
                ["pearson", model, c.outcome, res.n, _num(res.r), _num(res.ci_low),
                 _num(res.ci_high), _num(res.t), res.df, _num(res.p), "", "", ""]
            )
        wt = c.williams
        w.writerow(
            ["williams", "naturalturn-vs-baseline", c.outcome, wt.n, "", "", "", _num(wt.t),
             wt.df, _num(wt.p), _num(wt.r_a), _num(wt.r_b), _num(wt.r_ab)]
        )
    return buf.getvalue()
