"""Turn features, outlier filtering, corpus summaries and histogram exports."""

from __future__ import annotations

import dataclasses
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import TurnModelConfig
from .segmentation import Transcript, TurnKind

FIRST_TURN = "first_turn"
DURATION_CAP = "duration_cap"
INTERVAL_RANGE = "interval_range"
EXCLUSION_REASONS = (FIRST_TURN, DURATION_CAP, INTERVAL_RANGE)


@dataclass(frozen=True)
class TurnFeatures:
    conversation_id: str
    turn_id: int
    speaker: str
    kind: TurnKind
    duration_s: float
    n_words: int
    interval_to_prev_s: float | None = None
    same_speaker: bool = False
    excluded: frozenset[str] = field(default_factory=frozenset)

    @property
    def is_primary(self) -> bool:
        return self.kind is TurnKind.PRIMARY

    @property
    def is_overlap(self) -> bool:
        return self.interval_to_prev_s is not None and self.interval_to_prev_s < 0

    @property
    def duration_eligible(self) -> bool:
        return self.is_primary and not (self.excluded & {FIRST_TURN, DURATION_CAP})

    @property
    def interval_eligible(self) -> bool:
        return (
            self.is_primary
            and self.interval_to_prev_s is not None
            and not (self.excluded & {FIRST_TURN, INTERVAL_RANGE})
        )


def compute_features(transcript: Transcript) -> list[TurnFeatures]:
    """One feature row per turn.

    Primary turns after the first carry ``interval_to_prev_s``: this turn's
    start minus the previous Primary turn's end, whoever spoke it. A negative
    interval is an overlap. ``same_speaker`` flags intervals between two
    Primary turns of one speaker. Secondary and Backchannel rows carry no
    interval.
    """
    rows = []
    prev = None
    for turn in transcript.turns:
        interval = None
        same = False
        if turn.kind is TurnKind.PRIMARY:
            if prev is not None:
                interval = turn.start_s - prev.end_s
                same = prev.speaker == turn.speaker
            prev = turn
        rows.append(
            TurnFeatures(
                conversation_id=transcript.conversation_id,
                turn_id=turn.turn_id,
                speaker=turn.speaker,
                kind=turn.kind,
                duration_s=turn.duration_s,
                n_words=turn.n_words,
                interval_to_prev_s=interval,
                same_speaker=same,
            )
        )
    return rows


def apply_filters(features: Iterable[TurnFeatures], config: TurnModelConfig | None = None) -> list[TurnFeatures]:
    """Mark exclusions on Primary turn rows; nothing is deleted.

    * ``first_turn``: the first Primary turn of each conversation, when
      ``config.drop_first_turn``.
    * ``duration_cap``: duration strictly above ``max_turn_duration_s``.
    * ``interval_range``: interval outside the closed range
      [``interval_min_s``, ``interval_max_s``]. Only the interval is dropped
      from statistics; the turn's duration stays eligible.

    Existing marks are replaced, so re-filtering with a new config is safe.
    """
    config = config or TurnModelConfig()
    seen_conv: set[str] = set()
    out = []
    for f in features:
        reasons = set()
        if f.kind is TurnKind.PRIMARY:
            if f.conversation_id not in seen_conv:
                seen_conv.add(f.conversation_id)
                if config.drop_first_turn:
                    reasons.add(FIRST_TURN)
            if f.duration_s > config.max_turn_duration_s:
                reasons.add(DURATION_CAP)
            iv = f.interval_to_prev_s
            if iv is not None and not (config.interval_min_s <= iv <= config.interval_max_s):
                reasons.add(INTERVAL_RANGE)
        out.append(dataclasses.replace(f, excluded=frozenset(reasons)))
    return out


class RunningMean:
    """Streaming mean with an associative merge."""

    __slots__ = ("n", "mean")

    def __init__(self) -> None:
        self.n = 0
        self.mean = 0.0

    def add(self, x: float) -> None:
        self.n += 1
        self.mean += (x - self.mean) / self.n

    def merge(self, other: RunningMean) -> RunningMean:
        out = RunningMean()
        out.n = self.n + other.n
        if out.n:
            out.mean = self.mean + (other.mean - self.mean) * (other.n / out.n)
        return out

    def value(self) -> float:
        return self.mean if self.n else math.nan


@dataclass(frozen=True)
class SummaryStats:
    model: str
    mean_turn_duration_s: float
    mean_words_per_turn: float
    mean_turns_per_speaker_per_conversation: float
    mean_interval_ms: float
    prop_negative_intervals: float
    n_turns: int = 0
    n_intervals: int = 0
    n_speakers: int = 0

    STATISTICS = (
        ("mean_turn_duration_s", "Mean Turn Duration (s)"),
        ("mean_words_per_turn", "Mean Number of Words per Turn"),
        ("mean_turns_per_speaker_per_conversation", "Mean Number of Turns per Speaker per Conversation"),
        ("mean_interval_ms", "Mean Interval Between Turns (ms)"),
        ("prop_negative_intervals", "Proportion of Negative Turn Intervals (i.e., Overlaps)"),
    )


class SummaryAccumulator:
    """Reduce feature rows into :class:`SummaryStats`; mergeable across workers."""

    def __init__(self) -> None:
        self.duration = RunningMean()
        self.words = RunningMean()
        self.interval = RunningMean()
        self.n_negative = 0
        self.turns_per_speaker: dict[tuple[str, str], int] = {}

    def add(self, features: Iterable[TurnFeatures]) -> SummaryAccumulator:
        for f in features:
            key = (f.conversation_id, f.speaker)
            self.turns_per_speaker.setdefault(key, 0)
            if f.duration_eligible:
                self.duration.add(f.duration_s)
                self.words.add(f.n_words)
                self.turns_per_speaker[key] += 1
            if f.interval_eligible:
                self.interval.add(f.interval_to_prev_s)
                self.n_negative += f.interval_to_prev_s < 0
        return self

    def merge(self, other: SummaryAccumulator) -> SummaryAccumulator:
        out = SummaryAccumulator()
        out.duration = self.duration.merge(other.duration)
        out.words = self.words.merge(other.words)
        out.interval = self.interval.merge(other.interval)
        out.n_negative = self.n_negative + other.n_negative
        out.turns_per_speaker = dict(self.turns_per_speaker)
        for k, v in other.turns_per_speaker.items():
            out.turns_per_speaker[k] = out.turns_per_speaker.get(k, 0) + v
        return out

    def result(self, model: str = "") -> SummaryStats:
        if self.duration.n == 0:
            raise ValueError("empty summary")
        counts = list(self.turns_per_speaker.values())
        n_iv = self.interval.n
        return SummaryStats(
            model=model,
            mean_turn_duration_s=self.duration.value(),
            mean_words_per_turn=self.words.value(),
            mean_turns_per_speaker_per_conversation=sum(counts) / len(counts),
            mean_interval_ms=self.interval.value() * 1000.0,
            prop_negative_intervals=self.n_negative / n_iv if n_iv else math.nan,
            n_turns=self.duration.n,
            n_intervals=n_iv,
            n_speakers=len(counts),
        )


def summarize(features: Iterable[TurnFeatures], model: str = "") -> SummaryStats:
    """Table-1 statistics over eligible Primary turns.

    Duration and word means use Primary turns without ``first_turn`` or
    ``duration_cap`` marks. Interval mean (in ms) and the overlap proportion
    use intervals without ``first_turn`` or ``interval_range`` marks. Turns
    per speaker averages the eligible Primary count over every
    (conversation, speaker) pair present in ``features``.

    Raises:
        ValueError: no eligible turns ("empty summary").
    """
    return SummaryAccumulator().add(features).result(model)


@dataclass(frozen=True)
class SpeakerAggregate:
    conversation_id: str
    speaker: str
    n_turns: int
    mean_turn_duration_s: float | None = None
    mean_words_per_turn: float | None = None
    prop_overlap: float | None = None


def speaker_aggregates(features: Iterable[TurnFeatures]) -> list[SpeakerAggregate]:
    """Per (conversation, speaker) means over eligible Primary turns.

    Speakers with no eligible turns get ``n_turns=0`` and ``None`` means.
    """
    durations: dict[tuple[str, str], list[float]] = defaultdict(list)
    words: dict[tuple[str, str], list[int]] = defaultdict(list)
    intervals: dict[tuple[str, str], list[float]] = defaultdict(list)
    keys: dict[tuple[str, str], None] = {}
    for f in features:
        key = (f.conversation_id, f.speaker)
        keys[key] = None
        if f.duration_eligible:
            durations[key].append(f.duration_s)
            words[key].append(f.n_words)
        if f.interval_eligible:
            intervals[key].append(f.interval_to_prev_s)
    out = []
    for key in sorted(keys):
        d, w, iv = durations.get(key, []), words.get(key, []), intervals.get(key, [])
        out.append(
            SpeakerAggregate(
                conversation_id=key[0],
                speaker=key[1],
                n_turns=len(d),
                mean_turn_duration_s=sum(d) / len(d) if d else None,
                mean_words_per_turn=sum(w) / len(w) if w else None,
                prop_overlap=sum(1 for x in iv if x < 0) / len(iv) if iv else None,
            )
        )
    return out


@dataclass(frozen=True)
class Histogram:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    overflow: int = 0

    @property
    def bins(self) -> list[tuple[float, float, int]]:
        return list(zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts))


def histogram(values: Sequence[float], bin_width: float, lo: float, hi: float) -> Histogram:
    """Bin ``values`` into half-open bins ``[lo + k*w, lo + (k+1)*w)``.

    The last edge is clipped to ``hi``. Values outside ``[lo, hi)`` are
    dropped and counted in ``overflow``.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    if not lo < hi:
        raise ValueError("histogram range requires lo < hi")
    n_bins = max(1, math.ceil((hi - lo) / bin_width - 1e-9))
    edges = lo + bin_width * np.arange(n_bins + 1, dtype=float)
    edges[-1] = hi
    v = np.asarray(values, dtype=float)
    inside = (v >= lo) & (v < hi)
    idx = np.searchsorted(edges, v[inside], side="right") - 1
    counts = np.bincount(np.clip(idx, 0, n_bins - 1), minlength=n_bins)
    return Histogram(tuple(float(e) for e in edges), tuple(int(c) for c in counts), int((~inside).sum()))
