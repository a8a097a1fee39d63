"""Synthetic two-speaker conversations with planted turn structure.

Timing is generated in integer milliseconds with safety margins around every
threshold, so NaturalTurn segmentation under the generating config recovers
the planted turns exactly:

* words inside a planted group are separated by less than half of
  ``max_pause``; separate groups of one speaker by at least ``max_pause``
  plus a margin;
* injected listener utterances start after the host turn starts and end
  before it ends;
* a straddling exchange starts the next turn inside the current one and
  ends it after the current one ends.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import TurnModelConfig
from .io import atomic_write, transcripts_to_csv
from .outcomes import SurveyRecord, write_surveys
from .segmentation import Transcript, Turn, TurnKind
from .tokens import TokenStream, WordToken, serialize_tokens

LEXICON = (
    "the and you that it was for on are with they be at one have this from by "
    "had not what all were when we there can an your which their said if do will "
    "each about how up out them then she many some her would make like him into "
    "time has look two more write go see number no way could people my than first "
    "water been call who oil its now find long down day did get come made may part "
    "over new sound take only little work know place year live me back give most "
    "very after thing our just name good sentence man think say great where help "
    "through much before line too mean old any same tell boy follow came want show "
    "also around form three small set put end does another large must big even such "
    "because turn here why ask went men read need land different home us move try "
    "kind hand picture again change off play spell air away animal house point page "
    "letter mother answer found study still learn should america world"
).split()

SPEAKERS = ("0", "1")
_MARGIN_MS = 10


class InfeasibleParamsError(ValueError):
    pass


@dataclass(frozen=True)
class SynthParams:
    """Generator parameters.

    Turn durations are log-normal with the given mean/sd (seconds) scaled by
    a per-speaker log-normal factor with log-sd ``speaker_duration_sd``.
    Exchange gaps are normal, clipped to ``[gap_min_s, gap_max_s]``. Each
    primary turn offers one listener injection opportunity, or one per
    ``listener_window_s`` seconds of planned duration when that is set; each
    opportunity independently injects a backchannel and/or a parallel
    utterance with the given rates. ``straddle_rate`` is the chance that an
    exchange overlaps, the next speaker starting ``overlap_range_s`` before
    the current turn ends.
    """

    seed: int = 0
    n_conversations: int = 10
    turns_per_conversation: tuple[int, int] = (10, 30)
    turn_duration_mean_s: float = 6.0
    turn_duration_sd_s: float = 4.0
    turn_duration_range_s: tuple[float, float] = (0.3, 60.0)
    speaker_duration_sd: float = 0.0
    gap_mean_s: float = 0.2
    gap_sd_s: float = 0.3
    gap_min_s: float = 0.0
    gap_max_s: float = 2.0
    backchannel_rate: float = 0.3
    parallel_rate: float = 0.2
    straddle_rate: float = 0.0
    overlap_range_s: tuple[float, float] = (0.1, 0.8)
    listener_window_s: float | None = None
    words_per_second: float = 2.5
    effect_size: float = 0.3
    survey_noise_sd: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def check_params(params: SynthParams, config: TurnModelConfig) -> None:
    """Raise InfeasibleParamsError when exact planting is impossible."""
    for name in ("backchannel_rate", "parallel_rate", "straddle_rate"):
        v = getattr(params, name)
        if not 0.0 <= v <= 1.0:
            raise InfeasibleParamsError(f"{name}={v} must be in [0, 1]")
    lo, hi = params.turns_per_conversation
    if not 1 <= lo <= hi:
        raise InfeasibleParamsError("turns_per_conversation must satisfy 1 <= lo <= hi")
    if params.n_conversations < 0:
        raise InfeasibleParamsError("n_conversations must be >= 0")
    if not (params.turn_duration_mean_s > 0 and params.turn_duration_sd_s >= 0):
        raise InfeasibleParamsError("turn duration distribution must have positive mean")
    dlo, dhi = params.turn_duration_range_s
    if not 0 < dlo <= dhi:
        raise InfeasibleParamsError("turn_duration_range_s must satisfy 0 < lo <= hi")
    if not 0.0 <= params.gap_min_s <= params.gap_max_s:
        raise InfeasibleParamsError("gap truncation must satisfy 0 <= gap_min_s <= gap_max_s")
    olo, ohi = params.overlap_range_s
    if params.straddle_rate > 0 and not 0 < olo <= ohi:
        raise InfeasibleParamsError("overlap_range_s must satisfy 0 < lo <= hi")
    if params.listener_window_s is not None and not params.listener_window_s > 0:
        raise InfeasibleParamsError("listener_window_s must be positive")
    if not params.words_per_second > 0:
        raise InfeasibleParamsError("words_per_second must be positive")
    if config.max_pause_s * 1000 < 4 * _MARGIN_MS:
        raise InfeasibleParamsError("max_pause_s too small to plant distinct groups")
    if params.backchannel_rate > 0:
        if config.backchannel_fraction >= 1.0:
            raise InfeasibleParamsError("backchannel_fraction >= 1 admits no backchannel")
        if not _openers(config):
            raise InfeasibleParamsError("every cue word is a prohibited start")
    if params.parallel_rate > 0 and not _lexicon(config):
        raise InfeasibleParamsError("lexicon exhausted by the cue list")


def _openers(config: TurnModelConfig) -> list[str]:
    return sorted(config.cue_list - config.prohibited_start_list)


def _lexicon(config: TurnModelConfig) -> list[str]:
    return [w for w in LEXICON if w not in config.cue_list]


class _Planter:
    def __init__(self, params: SynthParams, config: TurnModelConfig, rng: np.random.Generator, conv_id: str):
        self.p = params
        self.config = config
        self.rng = rng
        self.conv_id = conv_id
        self.max_pause_ms = int(round(config.max_pause_s * 1000))
        self.lexicon = _lexicon(config)
        self.openers = _openers(config)
        self.cues = sorted(config.cue_list)
        wps = params.words_per_second
        self.word_ms = (max(20, int(600 / wps)), max(21, int(1000 / wps)))
        self.gap_ms = (5, max(6, min(int(500 / wps) + 10, self.max_pause_ms // 2)))

    def ms(self, lo: float, hi: float) -> int:
        return int(self.rng.integers(int(lo), int(hi) + 1))

    def separation(self) -> int:
        return self.max_pause_ms + self.ms(2 * _MARGIN_MS, 400)

    def tokens(self, speaker: str, words: list[str], start: int) -> list[WordToken]:
        out = []
        t = start
        for i, w in enumerate(words):
            if i:
                t += self.ms(*self.gap_ms)
            end = t + self.ms(*self.word_ms)
            conf = round(float(self.rng.uniform(0.6, 1.0)), 3)
            out.append(WordToken(self.conv_id, speaker, w, t / 1000, end / 1000, conf))
            t = end
        return out

    def primary_tokens(self, speaker: str, start: int, need_end: int) -> list[WordToken]:
        out = []
        t = start
        while not out or t < need_end:
            if out:
                t += self.ms(*self.gap_ms)
            end = t + self.ms(*self.word_ms)
            w = self.lexicon[self.rng.integers(len(self.lexicon))] if self.lexicon else "word"
            conf = round(float(self.rng.uniform(0.6, 1.0)), 3)
            out.append(WordToken(self.conv_id, speaker, w, t / 1000, end / 1000, conf))
            t = end
        return out

    def backchannel_words(self) -> list[str]:
        n = self.ms(1, min(3, self.config.backchannel_max_words))
        words = [self.openers[self.rng.integers(len(self.openers))]]
        words += [self.cues[self.rng.integers(len(self.cues))] for _ in range(n - 1)]
        return words

    def parallel_words(self) -> list[str]:
        n = self.ms(1, 6)
        return [self.lexicon[self.rng.integers(len(self.lexicon))] for _ in range(n)]

    def duration_ms(self, scale: float) -> int:
        p = self.p
        sigma2 = math.log1p((p.turn_duration_sd_s / p.turn_duration_mean_s) ** 2)
        mu = math.log(p.turn_duration_mean_s) - sigma2 / 2
        d = float(self.rng.lognormal(mu, math.sqrt(sigma2))) * scale
        lo, hi = p.turn_duration_range_s
        return int(round(min(max(d, lo), hi) * 1000))

    def gap(self) -> int:
        p = self.p
        g = float(self.rng.normal(p.gap_mean_s, p.gap_sd_s))
        return int(round(min(max(g, p.gap_min_s), p.gap_max_s) * 1000))


def generate_conversation(
    params: SynthParams, conversation_index: int, config: TurnModelConfig | None = None
) -> tuple[TokenStream, Transcript]:
    """Generate one conversation and its planted NaturalTurn transcript.

    Returns:
        ``(tokens, ground_truth)`` where ``segment_naturalturn(tokens, config)``
        equals ``ground_truth`` exactly.

    Raises:
        InfeasibleParamsError: the parameters cannot be planted exactly.
    """
    config = config or TurnModelConfig()
    check_params(params, config)
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, conversation_index]))
    conv_id = f"synth-{params.seed}-{conversation_index:05d}"
    pl = _Planter(params, config, rng, conv_id)

    scale = {s: float(rng.lognormal(0.0, params.speaker_duration_sd)) for s in SPEAKERS}
    lo, hi = params.turns_per_conversation
    n_turns = pl.ms(lo, hi)
    speaker = SPEAKERS[int(rng.integers(2))]
    start = pl.ms(0, 2000)
    avail = {s: 0 for s in SPEAKERS}
    must_exceed = 0
    olo, ohi = (round(x * 1000) for x in params.overlap_range_s)

    # (tokens, kind, index of host unit)
    units: list[tuple[list[WordToken], TurnKind, int | None]] = []
    for k in range(n_turns):
        listener = SPEAKERS[1 - SPEAKERS.index(speaker)]
        s = start
        target = pl.duration_ms(scale[speaker])
        straddle = k < n_turns - 1 and rng.random() < params.straddle_rate
        overlap = pl.ms(olo, ohi) if straddle else 0
        gap = 0 if straddle else pl.gap()

        n_opp = 1
        if params.listener_window_s is not None:
            n_opp = max(1, int(target // (params.listener_window_s * 1000)))
        # (earliest start, kind, words); opportunities spread evenly over the planned turn
        plans = []
        slot = target / n_opp
        for j in range(n_opp):
            at = s + int(j * slot + slot * float(rng.uniform(0.1, 0.7)))
            if rng.random() < params.backchannel_rate:
                plans.append((at, TurnKind.BACKCHANNEL, pl.backchannel_words()))
            if rng.random() < params.parallel_rate:
                plans.append((at, TurnKind.SECONDARY, pl.parallel_words()))

        secondaries = []
        listener_free = avail[listener]
        for at, kind, words in plans:
            toks = pl.tokens(listener, words, max(at, s + _MARGIN_MS, listener_free))
            secondaries.append((toks, kind))
            listener_free = round(toks[-1].end_s * 1000) + pl.separation()
        last_sec_end = round(secondaries[-1][0][-1].end_s * 1000) if secondaries else s

        need_end = max(s + target, last_sec_end + _MARGIN_MS, must_exceed + _MARGIN_MS)
        if straddle:
            need_end = max(need_end, listener_free + overlap, s + overlap + _MARGIN_MS)
        else:
            need_end = max(need_end, listener_free - gap)
        prim = pl.primary_tokens(speaker, s, need_end)
        host = len(units)
        units.append((prim, TurnKind.PRIMARY, None))
        for toks, kind in secondaries:
            units.append((toks, kind, host))

        e = round(prim[-1].end_s * 1000)
        avail[speaker] = e + pl.separation()
        if secondaries:
            avail[listener] = listener_free
        if straddle:
            start, must_exceed = e - overlap, e
        else:
            start, must_exceed = e + gap, 0
        speaker = listener

    order = sorted(range(len(units)), key=lambda i: (units[i][0][0].start_s, units[i][0][0].speaker))
    ids = {u: n for n, u in enumerate(order, start=1)}
    turns = []
    for u in order:
        toks, kind, host = units[u]
        turns.append(
            Turn(
                turn_id=ids[u],
                speaker=toks[0].speaker,
                kind=kind,
                start_s=toks[0].start_s,
                end_s=toks[-1].end_s,
                text=" ".join(t.text for t in toks),
                parent_turn_id=None if host is None else ids[host],
                tokens=tuple(toks),
            )
        )
    all_tokens = tuple(t for toks, _, _ in units for t in toks)
    return TokenStream(conv_id, all_tokens), Transcript(conv_id, "naturalturn", tuple(turns), config)


@dataclass
class SynthCorpus:
    params: SynthParams
    streams: list[TokenStream] = field(default_factory=list)
    truths: list[Transcript] = field(default_factory=list)
    surveys: list[SurveyRecord] = field(default_factory=list)


def _true_mean_durations(truths: list[Transcript]) -> dict[tuple[str, str], float]:
    out = {}
    for tr in truths:
        prim = tr.primary_turns
        for spk in SPEAKERS:
            eligible = [t.duration_s for t in prim[1:] if t.speaker == spk]
            if not eligible:
                eligible = [t.duration_s for t in prim if t.speaker == spk]
            out[(tr.conversation_id, spk)] = float(np.mean(eligible)) if eligible else math.nan
    return out


def synth_surveys(params: SynthParams, truths: list[Transcript]) -> list[SurveyRecord]:
    """Survey rows whose outcomes depend linearly on true mean primary duration.

    ``enjoyment`` and ``affect_overall`` are ``5 + effect_size * z + noise``,
    ``shared_reality`` uses half the effect; ``z`` is the corpus-standardized
    true mean duration (0 for a speaker who never held the floor).
    """
    means = _true_mean_durations(truths)
    vals = np.array([v for v in means.values() if not math.isnan(v)])
    mu = float(vals.mean()) if vals.size else 0.0
    sd = float(vals.std()) if vals.size > 1 and vals.std() > 0 else 1.0
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 0x5EED]))
    out = []
    for (conv, spk), v in means.items():
        z = 0.0 if math.isnan(v) else (v - mu) / sd
        noise = rng.normal(0.0, params.survey_noise_sd, size=3)
        out.append(
            SurveyRecord(
                conv,
                spk,
                {
                    "enjoyment": round(5 + params.effect_size * z + noise[0], 6),
                    "affect_overall": round(5 + params.effect_size * z + noise[1], 6),
                    "shared_reality": round(5 + 0.5 * params.effect_size * z + noise[2], 6),
                },
            )
        )
    return out


def generate_corpus(
    params: SynthParams, out_dir: str | Path | None = None, config: TurnModelConfig | None = None
) -> SynthCorpus:
    """Generate ``params.n_conversations`` conversations plus synthetic surveys.

    With ``out_dir`` the corpus is written as ``tokens/<id>.tsv`` (canonical
    token files), ``truth/<id>.csv`` (transcript CSVs), ``surveys.csv`` and
    ``manifest.json``. Output is byte-identical for a fixed seed.
    """
    config = config or TurnModelConfig()
    check_params(params, config)
    corpus = SynthCorpus(params)
    for i in range(params.n_conversations):
        stream, truth = generate_conversation(params, i, config)
        corpus.streams.append(stream)
        corpus.truths.append(truth)
    corpus.surveys = synth_surveys(params, corpus.truths)

    if out_dir is not None:
        out = Path(out_dir)
        (out / "tokens").mkdir(parents=True, exist_ok=True)
        (out / "truth").mkdir(parents=True, exist_ok=True)
        for stream, truth in zip(corpus.streams, corpus.truths):
            atomic_write(out / "tokens" / f"{stream.conversation_id}.tsv", serialize_tokens(stream))
            atomic_write(out / "truth" / f"{truth.conversation_id}.csv", transcripts_to_csv([truth]))
        write_surveys(corpus.surveys, out / "surveys.csv")
        manifest = {
            "command": "synth",
            "params": params.to_dict(),
            "config": config.to_dict(),
            "conversations": [
                {"conversation_id": s.conversation_id, "seed": [params.seed, i], "n_tokens": len(s)}
                for i, s in enumerate(corpus.streams)
            ],
        }
        atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return corpus
