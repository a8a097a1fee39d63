from __future__ import annotations

import filecmp
import json

import pytest

from turnforge import (
    SynthParams,
    TurnKind,
    TurnModelConfig,
    apply_filters,
    compute_features,
    generate_conversation,
    generate_corpus,
    pearson,
    reference_oracle,
    segment,
    segment_baseline,
    segment_naturalturn,
    speaker_aggregates,
)
from turnforge.io import read_transcripts
from turnforge.outcomes import join_survey, paired_vectors
from turnforge.synth import InfeasibleParamsError
from turnforge.tokens import read_tokens


def test_seed42_recovers_planted_labels():
    params = SynthParams(seed=42, n_conversations=1, turns_per_conversation=(10, 10), backchannel_rate=0.5)
    stream, truth = generate_conversation(params, 0)
    assert len(truth.primary_turns) == 10
    assert any(t.kind is TurnKind.BACKCHANNEL for t in truth.turns)
    assert segment_naturalturn(stream) == truth
    assert reference_oracle(stream) == truth


def test_no_parallel_speech_equals_baseline():
    params = SynthParams(seed=3, n_conversations=5, backchannel_rate=0, parallel_rate=0, straddle_rate=0)
    for i in range(5):
        stream, truth = generate_conversation(params, i)
        nt = segment_naturalturn(stream)
        assert nt == truth
        assert all(t.kind is TurnKind.PRIMARY for t in nt.turns)
        assert [(t.start_s, t.end_s) for t in nt.turns] == [(t.start_s, t.end_s) for t in segment_baseline(stream).turns]


def test_straddle_every_exchange_overlaps():
    params = SynthParams(seed=5, n_conversations=5, straddle_rate=1.0)
    for i in range(5):
        stream, truth = generate_conversation(params, i)
        assert segment_naturalturn(stream) == truth
        ivs = [f.interval_to_prev_s for f in compute_features(truth) if f.interval_to_prev_s is not None]
        assert ivs and all(iv < 0 for iv in ivs)


@pytest.mark.parametrize("bc", [0.0, 0.3, 0.8])
@pytest.mark.parametrize("straddle", [0.0, 0.2])
@pytest.mark.parametrize("window", [None, 2.0])
def test_planted_recovery_grid(bc, straddle, window):
    params = SynthParams(seed=9, n_conversations=8, backchannel_rate=bc, straddle_rate=straddle,
                         parallel_rate=0.4, listener_window_s=window)
    for i in range(8):
        stream, truth = generate_conversation(params, i)
        assert segment_naturalturn(stream) == truth


def test_recovery_under_nondefault_config():
    cfg = TurnModelConfig(max_pause_s=0.8, cue_list=frozenset({"sure", "yes"}), prohibited_start_list=frozenset())
    params = SynthParams(seed=2, n_conversations=6, backchannel_rate=0.6, straddle_rate=0.3)
    for i in range(6):
        stream, truth = generate_conversation(params, i, cfg)
        assert segment_naturalturn(stream, cfg) == truth


def test_corpus_counts_and_files(tmp_path):
    corpus = generate_corpus(SynthParams(seed=7, n_conversations=50), tmp_path)
    assert len(list((tmp_path / "tokens").glob("*.tsv"))) == 50
    assert len(list((tmp_path / "truth").glob("*.csv"))) == 50
    assert len(corpus.surveys) == 100
    assert sum(1 for _ in open(tmp_path / "surveys.csv")) == 101
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["params"]["seed"] == 7 and len(manifest["conversations"]) == 50
    # files round-trip into the in-memory corpus
    first = corpus.streams[0]
    assert read_tokens(tmp_path / "tokens" / f"{first.conversation_id}.tsv") == first
    truth = read_transcripts(tmp_path / "truth" / f"{first.conversation_id}.csv", "naturalturn")[0]
    assert [(t.start_s, t.end_s, t.kind) for t in truth.turns] == [
        (t.start_s, t.end_s, t.kind) for t in corpus.truths[0].turns
    ]


def test_corpus_byte_identical(tmp_path):
    params = SynthParams(seed=7, n_conversations=10, straddle_rate=0.2)
    generate_corpus(params, tmp_path / "a")
    generate_corpus(params, tmp_path / "b")
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in ("tokens", "truth"):
        match, mismatch, errors = filecmp.cmpfiles(
            tmp_path / "a" / sub, tmp_path / "b" / sub,
            [p.name for p in (tmp_path / "a" / sub).iterdir()], shallow=False,
        )
        assert not mismatch and not errors


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(backchannel_rate=1.5),
        dict(turns_per_conversation=(5, 2)),
        dict(turn_duration_range_s=(0.0, 5.0)),
        dict(gap_min_s=2.0, gap_max_s=1.0),
        dict(straddle_rate=0.5, overlap_range_s=(0.0, 0.5)),
        dict(words_per_second=0),
    ],
)
def test_infeasible_params(kwargs):
    with pytest.raises(InfeasibleParamsError):
        generate_conversation(SynthParams(**kwargs), 0)


def test_infeasible_config():
    cfg = TurnModelConfig(cue_list=frozenset({"so"}))
    with pytest.raises(InfeasibleParamsError, match="prohibited"):
        generate_conversation(SynthParams(backchannel_rate=0.5), 0, cfg)
    with pytest.raises(InfeasibleParamsError):
        generate_conversation(SynthParams(), 0, TurnModelConfig(max_pause_s=0.01))


def test_planted_effect_recovered_for_naturalturn():
    corpus = generate_corpus(SynthParams(seed=0, n_conversations=100, effect_size=0.3))
    joined = {}
    for model in ("baseline", "naturalturn"):
        rows = [f for s in corpus.streams for f in apply_filters(compute_features(segment(s, model)))]
        joined[model] = join_survey(speaker_aggregates(rows), corpus.surveys)
    xb, xn, y = paired_vectors(joined["baseline"], joined["naturalturn"], "enjoyment")
    assert len(y) == 200
    r = pearson(xn, y)
    assert r.r > 0 and r.p < 0.01
