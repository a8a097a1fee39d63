from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_stream, random_stream, tok
from turnforge import (
    TokenStream,
    TurnKind,
    TurnModelConfig,
    group_utterances,
    reference_oracle,
    segment,
    segment_baseline,
    segment_intermediate,
    segment_naturalturn,
)
from turnforge.io import transcripts_to_csv

P, S, B = TurnKind.PRIMARY, TurnKind.SECONDARY, TurnKind.BACKCHANNEL


def spans(tr):
    return [(t.speaker, t.kind, t.start_s, t.end_s, t.text, t.parent_turn_id) for t in tr.turns]


# --- grouping -----------------------------------------------------------------


def test_group_single_group():
    s = make_stream([("A", "w", a, b) for a, b in [(0.0, 0.5), (0.6, 1.0), (1.2, 1.4), (1.5, 1.7), (1.8, 2.0)]])
    (g,) = group_utterances(s, "A", 1.5)
    assert (g.start_s, g.end_s, len(g.tokens)) == (0.0, 2.0, 5)


def test_group_split_and_merge_by_max_pause(t3):
    assert [(g.start_s, g.end_s) for g in group_utterances(t3, "A", 1.5)] == [(0.0, 1.0), (4.0, 5.0)]
    assert [(g.start_s, g.end_s) for g in group_utterances(t3, "A", 3.5)] == [(0.0, 5.0)]
    assert group_utterances(t3, "B", 1.5) == []


def test_group_boundary_is_inclusive_split():
    s = make_stream([("A", "a", 0.0, 1.0), ("A", "b", 2.5, 3.0)])  # silence exactly 1.5
    assert len(group_utterances(s, "A", 1.5)) == 2
    assert len(group_utterances(s, "A", 1.5001)) == 1


def test_group_rejects_bad_pause(t1):
    with pytest.raises(ValueError):
        group_utterances(t1, "A", 0)


# --- Baseline -----------------------------------------------------------------


def test_baseline_t1(t1):
    tr = segment_baseline(t1)
    assert [(t.speaker, t.text, t.start_s, t.end_s) for t in tr.turns] == [
        ("A", "hello there", 0.0, 1.0),
        ("B", "mhm", 0.7, 0.9),
        ("A", "how are you", 1.2, 2.0),
        ("B", "good", 3.6, 3.9),
    ]
    assert all(t.kind is P for t in tr.turns)


def test_baseline_single_speaker_and_empty(t3):
    assert len(segment_baseline(t3)) == 1
    assert len(segment_baseline(TokenStream("e", ()))) == 0


# --- NaturalTurn --------------------------------------------------------------


def test_naturalturn_t1(t1):
    tr = segment_naturalturn(t1)
    assert spans(tr) == [
        ("A", P, 0.0, 2.0, "hello there how are you", None),
        ("B", B, 0.7, 0.9, "mhm", 1),
        ("B", P, 3.6, 3.9, "good", None),
    ]
    assert [t.turn_id for t in tr.turns] == [1, 2, 3]


def test_naturalturn_t2_overlap(t2):
    tr = segment_naturalturn(t2)
    assert [(t.speaker, t.kind, t.start_s, t.end_s) for t in tr.turns] == [("A", P, 0.0, 5.0), ("B", P, 4.5, 6.0)]


def test_naturalturn_t3(t3):
    assert [t.kind for t in segment_naturalturn(t3).turns] == [P, P]
    assert [t.kind for t in segment_naturalturn(t3, TurnModelConfig(max_pause_s=3.5)).turns] == [P]


def test_naturalturn_empty():
    assert len(segment_naturalturn(TokenStream("e", ()))) == 0
    assert len(reference_oracle(TokenStream("e", ()))) == 0


def test_secondary_non_backchannel_label():
    s = make_stream([("A", "w", 0.0, 5.0), ("B", "that", 1.0, 1.3), ("B", "is", 1.4, 1.6), ("B", "true", 1.7, 2.0)])
    tr = segment_naturalturn(s)
    assert [t.kind for t in tr.turns] == [P, S]
    assert tr.turns[1].parent_turn_id == 1


def test_listener_ending_exactly_at_primary_end_is_secondary():
    s = make_stream([("A", "w", 0.0, 3.0), ("B", "yeah", 2.0, 3.0)])
    assert [t.kind for t in segment_naturalturn(s).turns] == [P, B]


def test_listener_in_trailing_pause_takes_floor():
    # B speaks after A's last token but within max_pause of it: B gets a Primary turn.
    s = make_stream([("A", "w", 0.0, 2.0), ("B", "yeah", 2.5, 2.8)])
    assert [t.kind for t in segment_naturalturn(s).turns] == [P, P]


def test_interjection_in_primary_pause_is_secondary():
    # A pauses 1.0 s (< max_pause) and resumes past B's interjection.
    s = make_stream([("A", "a", 0.0, 1.0), ("B", "mhm", 1.2, 1.5), ("A", "b", 2.0, 3.0)])
    tr = segment_naturalturn(s)
    assert [(t.speaker, t.kind) for t in tr.turns] == [("A", P), ("B", B)]


def test_equal_start_tie_broken_by_speaker():
    s = make_stream([("B", "yeah", 1.0, 1.5), ("A", "so", 1.0, 4.0)])
    tr = segment_naturalturn(s)
    assert [(t.speaker, t.kind) for t in tr.turns] == [("A", P), ("B", B)]


def test_secondary_never_hosts():
    # C-like chain: B's group is secondary inside A; A's later short group is inside B's span
    # but B is not primary, so A's group must open a Primary turn.
    s = make_stream([("A", "x", 0.0, 2.0), ("B", "y", 0.5, 1.9), ("A", "z", 5.0, 5.2)])
    tr = segment_naturalturn(s)
    assert [t.kind for t in tr.turns] == [P, S, P]


def test_custom_cue_list_changes_label(t1):
    tr = segment_naturalturn(t1, TurnModelConfig(cue_list=frozenset()))
    assert tr.turns[1].kind is S


# --- Intermediate ---------------------------------------------------------------


def test_intermediate_t1(t1):
    tr = segment_intermediate(t1)
    assert spans(tr) == [
        ("A", P, 0.0, 2.0, "hello there how are you", None),
        ("B", B, 0.7, 0.9, "mhm", 1),
        ("B", P, 3.6, 3.9, "good", None),
    ]


def test_intermediate_empty_cue_list_equals_baseline(t1):
    cfg = TurnModelConfig(cue_list=frozenset())
    inter = segment_intermediate(t1, cfg)
    assert [(t.speaker, t.start_s, t.end_s, t.kind) for t in inter.turns] == [
        (t.speaker, t.start_s, t.end_s, t.kind) for t in segment_baseline(t1).turns
    ]


def test_intermediate_without_backchannels_equals_baseline_spans():
    s = make_stream([("A", "the", 0, 1), ("B", "plan", 1.2, 2.0), ("A", "good", 2.4, 3.0), ("B", "sounds", 3.5, 4)])
    assert [(t.start_s, t.end_s) for t in segment_intermediate(s).turns] == [
        (t.start_s, t.end_s) for t in segment_baseline(s).turns
    ]


def test_intermediate_leading_backchannel_stays_primary():
    s = make_stream([("B", "yeah", 0.0, 0.3), ("A", "the", 0.5, 1.0)])
    assert [t.kind for t in segment_intermediate(s).turns] == [P, P]


def test_intermediate_merge_respects_max_pause():
    # The A fragments around "mhm" are 2.0 s apart: demoted but not merged.
    s = make_stream([("A", "a", 0.0, 1.0), ("B", "mhm", 1.5, 1.8), ("A", "b", 3.0, 4.0)])
    tr = segment_intermediate(s)
    assert [(t.speaker, t.kind, t.parent_turn_id) for t in tr.turns] == [("A", P, None), ("B", B, 1), ("A", P, None)]


def test_segment_dispatch(t1):
    assert segment(t1, "NaturalTurn") == segment_naturalturn(t1)
    with pytest.raises(ValueError, match="unknown turn model"):
        segment(t1, "turbo")


# --- properties -----------------------------------------------------------------


def _token_multiset(tr):
    return Counter(t for turn in tr.turns for t in turn.tokens)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 1.5, 3.0]))
def test_model_invariants(seed, max_pause):
    stream = random_stream(seed, max_pause, max_tokens=120)
    cfg = TurnModelConfig(max_pause_s=max_pause)
    expected = Counter(stream.tokens)
    for model in ("baseline", "intermediate", "naturalturn"):
        tr = segment(stream, model, cfg)
        assert _token_multiset(tr) == expected, model
        by_id = {t.turn_id: t for t in tr.turns}
        for t in tr.turns:
            assert t.n_words == len(t.tokens)
            assert (t.parent_turn_id is None) == (t.kind is P)
            if t.parent_turn_id is not None:
                parent = by_id[t.parent_turn_id]
                assert parent.kind is P and parent.speaker != t.speaker
        starts = [t.start_s for t in tr.turns]
        assert starts == sorted(starts)

    nt = segment_naturalturn(stream, cfg)
    by_id = {t.turn_id: t for t in nt.turns}
    prims = nt.primary_turns
    for t in nt.turns:
        if t.kind is not P:
            parent = by_id[t.parent_turn_id]
            assert parent.start_s <= t.start_s and t.end_s <= parent.end_s
        else:
            for a, b in zip(t.tokens, t.tokens[1:]):
                assert b.start_s - a.end_s < max_pause
    for spk in nt.speakers:
        own = [t for t in prims if t.speaker == spk]
        for a, b in zip(own, own[1:]):
            assert b.start_s >= a.end_s  # same-speaker primaries never overlap
    for a, b in zip(prims, prims[1:]):
        if a.speaker == b.speaker:
            assert b.start_s - a.end_s >= max_pause

    base = segment_baseline(stream)
    assert " ".join(t.text for t in base.turns) == " ".join(t.text for t in stream.tokens)
    assert nt == reference_oracle(stream, cfg)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_no_parallel_speech_matches_baseline(seed):
    rng = np.random.default_rng(seed)
    toks, clock, spk = [], 0, "0"
    for _ in range(int(rng.integers(1, 12))):
        for _ in range(int(rng.integers(1, 5))):
            d = int(rng.integers(100, 600))
            toks.append(tok(spk, "w", clock / 1000, (clock + d) / 1000))
            clock += d + int(rng.integers(0, 1400))
        # the next speaker waits so each speaker's own silence is at least max_pause
        clock += 1500
        spk = "1" if spk == "0" else "0"
    stream = TokenStream("c", tuple(toks))
    nt = segment_naturalturn(stream)
    assert all(t.kind is P for t in nt.turns)
    assert [(t.speaker, t.start_s, t.end_s) for t in nt.turns] == [
        (t.speaker, t.start_s, t.end_s) for t in segment_baseline(stream).turns
    ]


def test_determinism_byte_identical():
    stream = random_stream(11, max_tokens=400)
    outs = {transcripts_to_csv([segment(stream, m)]) for m in ["naturalturn"] * 3}
    assert len(outs) == 1


def test_oracle_matches_on_seeded_streams():
    for seed in range(200):
        stream = random_stream(seed)
        assert segment_naturalturn(stream) == reference_oracle(stream), seed
