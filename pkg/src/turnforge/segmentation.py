"""Turn models: Baseline, Intermediate and NaturalTurn segmentation.

Baseline starts a new turn at every change of speaker in the chronological
token stream. NaturalTurn first merges each speaker's words across silences
shorter than ``max_pause_s`` and then treats any listener utterance that
finishes inside the current primary turn as secondary speech. Intermediate
sits between the two: Baseline turns with whole backchannel turns demoted and
the fragments around them re-joined.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .backchannel import is_backchannel
from .config import TurnModelConfig
from .tokens import TokenStream, WordToken


class TurnKind(str, enum.Enum):
    PRIMARY = "Primary"
    SECONDARY = "Secondary"
    BACKCHANNEL = "Backchannel"

    def __str__(self) -> str:
        return self.value


MODELS = ("baseline", "intermediate", "naturalturn")


@dataclass(frozen=True)
class UtteranceGroup:
    """A speaker's consecutive tokens with every inner silence < max_pause."""

    speaker: str
    tokens: tuple[WordToken, ...]

    @property
    def start_s(self) -> float:
        return self.tokens[0].start_s

    @property
    def end_s(self) -> float:
        return self.tokens[-1].end_s

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass(frozen=True)
class Turn:
    turn_id: int
    speaker: str
    kind: TurnKind
    start_s: float
    end_s: float
    text: str
    parent_turn_id: int | None = None
    tokens: tuple[WordToken, ...] = field(default=(), compare=True, repr=False)

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def n_words(self) -> int:
        return len(self.text.split())

    @property
    def is_primary(self) -> bool:
        return self.kind is TurnKind.PRIMARY


@dataclass(frozen=True)
class Transcript:
    conversation_id: str
    model: str
    turns: tuple[Turn, ...] = ()
    config: TurnModelConfig | None = field(default=None, compare=False)

    @property
    def primary_turns(self) -> list[Turn]:
        return [t for t in self.turns if t.kind is TurnKind.PRIMARY]

    @property
    def speakers(self) -> list[str]:
        return sorted({t.speaker for t in self.turns})

    def __len__(self) -> int:
        return len(self.turns)


def _turn(turn_id: int, tokens: Sequence[WordToken], kind: TurnKind, parent: int | None) -> Turn:
    return Turn(
        turn_id=turn_id,
        speaker=tokens[0].speaker,
        kind=kind,
        start_s=tokens[0].start_s,
        end_s=tokens[-1].end_s,
        text=" ".join([t.text for t in tokens]),
        parent_turn_id=parent,
        tokens=tuple(tokens),
    )


def _split_on_silence(tokens: Sequence[WordToken], max_pause_s: float) -> list[list[WordToken]]:
    groups: list[list[WordToken]] = []
    cur: list[WordToken] = []
    prev_end = 0.0
    for tok in tokens:
        if cur and tok.start_s - prev_end >= max_pause_s:
            groups.append(cur)
            cur = []
        cur.append(tok)
        prev_end = tok.end_s
    if cur:
        groups.append(cur)
    return groups


def group_utterances(stream: TokenStream, speaker: str, max_pause_s: float) -> list[UtteranceGroup]:
    """Partition one speaker's tokens into maximal utterance groups.

    A new group starts wherever the silence ``next.start_s - prev.end_s`` is at
    least ``max_pause_s``. An absent speaker yields an empty list.
    """
    if not max_pause_s > 0:
        raise ValueError("max_pause_s must be > 0")
    own = [t for t in stream.tokens if t.speaker == speaker]
    return [UtteranceGroup(speaker, tuple(g)) for g in _split_on_silence(own, max_pause_s)]


def segment_baseline(stream: TokenStream, config: TurnModelConfig | None = None) -> Transcript:
    """One Primary turn per maximal same-speaker run of the chronological tokens."""
    turns = []
    run: list[WordToken] = []
    for tok in stream.tokens:
        if run and tok.speaker != run[0].speaker:
            turns.append(_turn(len(turns) + 1, run, TurnKind.PRIMARY, None))
            run = []
        run.append(tok)
    if run:
        turns.append(_turn(len(turns) + 1, run, TurnKind.PRIMARY, None))
    return Transcript(stream.conversation_id, "baseline", tuple(turns), config)


def segment_naturalturn(stream: TokenStream, config: TurnModelConfig | None = None) -> Transcript:
    """Segment ``stream`` into primary and secondary turns.

    Each speaker's tokens are grouped across silences shorter than
    ``config.max_pause_s``. Groups are then visited by (start_s, speaker):
    a group by the listener that ends no later than the current primary turn
    becomes a Secondary turn hosted by it (relabeled Backchannel when the
    classifier accepts its words); every other group opens a new Primary turn.
    A listener group that starts inside the primary turn but runs past its end
    therefore takes the floor with a negative interval.
    """
    config = config or TurnModelConfig()
    max_pause = config.max_pause_s
    cues = config.cues

    by_speaker: dict[str, list[WordToken]] = {}
    for tok in stream.tokens:
        by_speaker.setdefault(tok.speaker, []).append(tok)
    groups = [g for spk in sorted(by_speaker) for g in _split_on_silence(by_speaker[spk], max_pause)]
    groups.sort(key=lambda g: (g[0].start_s, g[0].speaker))

    turns = []
    host_id = 0
    host_speaker = None
    host_end = 0.0
    for turn_id, g in enumerate(groups, start=1):
        speaker = g[0].speaker
        end = g[-1].end_s
        if host_id and speaker != host_speaker and end <= host_end:
            words = [t.text for t in g]
            kind = TurnKind.BACKCHANNEL if is_backchannel(words, cues, config) else TurnKind.SECONDARY
            turns.append(_turn(turn_id, g, kind, host_id))
        else:
            host_id, host_speaker, host_end = turn_id, speaker, end
            turns.append(_turn(turn_id, g, TurnKind.PRIMARY, None))
    return Transcript(stream.conversation_id, "naturalturn", tuple(turns), config)


def segment_intermediate(stream: TokenStream, config: TurnModelConfig | None = None) -> Transcript:
    """Baseline turns with whole backchannel turns demoted.

    A Baseline turn whose words pass the backchannel classifier is demoted
    when some earlier turn by the other speaker stays primary; the fragments
    of the remaining primary speech are then re-joined wherever consecutive
    same-speaker primary turns are separated by less than ``max_pause_s``.
    Each backchannel's parent is the latest-starting other-speaker primary
    turn that starts no later than it (the enclosing turn when there is one).
    """
    config = config or TurnModelConfig()
    base = segment_baseline(stream, config).turns

    speakers_with_primary: set[str] = set()
    primaries: list[list[WordToken]] = []
    backchannels: list[tuple[WordToken, ...]] = []
    for turn in base:
        others_primary = bool(speakers_with_primary - {turn.speaker})
        if others_primary and is_backchannel(turn.text.split(), config.cues, config):
            backchannels.append(turn.tokens)
            continue
        speakers_with_primary.add(turn.speaker)
        prev = primaries[-1] if primaries else None
        if (
            prev is not None
            and prev[0].speaker == turn.speaker
            and turn.start_s - prev[-1].end_s < config.max_pause_s
        ):
            prev.extend(turn.tokens)
        else:
            primaries.append(list(turn.tokens))

    # (sort key, tokens, kind, index of parent primary)
    items: list[tuple[tuple, Sequence[WordToken], TurnKind, int | None]] = []
    for i, toks in enumerate(primaries):
        items.append(((toks[0].start_s, toks[0].speaker, toks[-1].end_s), toks, TurnKind.PRIMARY, None))
    for toks in backchannels:
        start, speaker = toks[0].start_s, toks[0].speaker
        parent = max(
            (i for i, p in enumerate(primaries) if p[0].speaker != speaker and p[0].start_s <= start),
            key=lambda i: (primaries[i][0].start_s, i),
        )
        items.append(((start, speaker, toks[-1].end_s), toks, TurnKind.BACKCHANNEL, parent))
    items.sort(key=lambda it: it[0])

    primary_ids: dict[int, int] = {}
    for turn_id, (_, toks, kind, _) in enumerate(items, start=1):
        if kind is TurnKind.PRIMARY:
            primary_ids[id(toks)] = turn_id
    turns = []
    for turn_id, (_, toks, kind, parent) in enumerate(items, start=1):
        parent_id = None if parent is None else primary_ids[id(primaries[parent])]
        turns.append(_turn(turn_id, toks, kind, parent_id))
    return Transcript(stream.conversation_id, "intermediate", tuple(turns), config)


SEGMENTERS: dict[str, Callable[[TokenStream, TurnModelConfig | None], Transcript]] = {
    "baseline": segment_baseline,
    "intermediate": segment_intermediate,
    "naturalturn": segment_naturalturn,
}


def segment(stream: TokenStream, model: str = "naturalturn", config: TurnModelConfig | None = None) -> Transcript:
    try:
        fn = SEGMENTERS[model.lower()]
    except KeyError:
        raise ValueError(f"unknown turn model {model!r}; expected one of {MODELS}") from None
    return fn(stream, config)
