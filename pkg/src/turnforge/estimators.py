"""scikit-learn compatible wrappers around the segmentation and metrics pipeline.

Samples are conversations: segmenters take TokenStreams and emit Transcripts,
:class:`TurnFeatureExtractor` flattens Transcripts into TurnFeatures rows and
:class:`TurnFilter` marks outlier exclusions. The steps chain with
``sklearn.pipeline.make_pipeline``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import TurnModelConfig
from .metrics import SpeakerAggregate, SummaryStats, apply_filters, compute_features, speaker_aggregates, summarize
from .parallel import segment_many
from .segmentation import MODELS, Transcript
from .tokens import TokenStream
from .validation import check_features, check_token_streams, check_transcripts


class TurnSegmenter(TransformerMixin, BaseEstimator):
    """Segment conversations into turns under one turn model.

    Parameters
    ----------
    model : {"baseline", "intermediate", "naturalturn"}
    max_pause_s : float
        Longest silence that still continues a speaker's primary turn.
    backchannel_max_words, backchannel_fraction : backchannel rule thresholds.
    cue_list, prohibited_start_list : iterable of str or None
        ``None`` uses the shipped default lists.
    min_confidence, confidence_mode : low-confidence token handling, applied
        before segmentation (``confidence_mode`` in off/flag/remove).
    n_jobs : int or None
        Worker processes for ``transform``; ``TURNFORGE_THREADS`` overrides.
    """

    def __init__(
        self,
        model="naturalturn",
        max_pause_s=1.5,
        backchannel_max_words=3,
        backchannel_fraction=0.5,
        cue_list=None,
        prohibited_start_list=None,
        min_confidence=0.0,
        confidence_mode="off",
        n_jobs=None,
    ):
        self.model = model
        self.max_pause_s = max_pause_s
        self.backchannel_max_words = backchannel_max_words
        self.backchannel_fraction = backchannel_fraction
        self.cue_list = cue_list
        self.prohibited_start_list = prohibited_start_list
        self.min_confidence = min_confidence
        self.confidence_mode = confidence_mode
        self.n_jobs = n_jobs

    @classmethod
    def from_config(cls, config: TurnModelConfig, model: str = "naturalturn", n_jobs=None) -> TurnSegmenter:
        return cls(
            model=model,
            max_pause_s=config.max_pause_s,
            backchannel_max_words=config.backchannel_max_words,
            backchannel_fraction=config.backchannel_fraction,
            cue_list=config.cue_list,
            prohibited_start_list=config.prohibited_start_list,
            min_confidence=config.min_confidence,
            confidence_mode=config.confidence_mode,
            n_jobs=n_jobs,
        )

    def _build_config(self) -> TurnModelConfig:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        kwargs = dict(
            max_pause_s=float(self.max_pause_s),
            backchannel_max_words=int(self.backchannel_max_words),
            backchannel_fraction=float(self.backchannel_fraction),
            min_confidence=float(self.min_confidence),
            confidence_mode=self.confidence_mode,
        )
        if self.cue_list is not None:
            kwargs["cue_list"] = frozenset(self.cue_list)
        if self.prohibited_start_list is not None:
            kwargs["prohibited_start_list"] = frozenset(self.prohibited_start_list)
        return TurnModelConfig(**kwargs)

    def fit(self, X=None, y=None):
        """Validate parameters; segmentation itself learns nothing from data."""
        self.config_ = self._build_config()
        return self

    def transform(self, X) -> list[Transcript]:
        check_is_fitted(self, "config_")
        streams = check_token_streams(X)
        return segment_many(streams, self.model, self.config_, self.n_jobs)

    def segment(self, stream: TokenStream) -> Transcript:
        return self.transform([stream])[0]


class TurnFeatureExtractor(TransformerMixin, BaseEstimator):
    """Transcripts to per-turn feature rows (durations, word counts, intervals)."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return [row for tr in check_transcripts(X) for row in compute_features(tr)]


class TurnFilter(TransformerMixin, BaseEstimator):
    """Mark first-turn, duration-cap and interval-range exclusions."""

    def __init__(self, max_turn_duration_s=120.0, interval_min_s=-5.0, interval_max_s=5.0, drop_first_turn=True):
        self.max_turn_duration_s = max_turn_duration_s
        self.interval_min_s = interval_min_s
        self.interval_max_s = interval_max_s
        self.drop_first_turn = drop_first_turn

    def fit(self, X=None, y=None):
        self.config_ = TurnModelConfig(
            max_turn_duration_s=float(self.max_turn_duration_s),
            interval_min_s=float(self.interval_min_s),
            interval_max_s=float(self.interval_max_s),
            drop_first_turn=bool(self.drop_first_turn),
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        return apply_filters(check_features(X), self.config_)


class TurnSummarizer(BaseEstimator):
    """Fit corpus-level statistics on filtered feature rows.

    After ``fit``, ``summary_`` holds the five corpus statistics and
    ``aggregates_`` the per-speaker rows; ``transform`` returns the
    per-speaker aggregates for new rows.
    """

    def __init__(self, model=""):
        self.model = model

    def fit(self, X, y=None):
        rows = check_features(X)
        self.summary_: SummaryStats = summarize(rows, self.model)
        self.aggregates_: list[SpeakerAggregate] = speaker_aggregates(rows)
        return self

    def transform(self, X) -> list[SpeakerAggregate]:
        check_is_fitted(self, "summary_")
        return speaker_aggregates(check_features(X))

    def fit_transform(self, X, y=None):
        return self.fit(X).aggregates_
