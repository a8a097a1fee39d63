"""Primary/secondary turn segmentation for timestamped STT transcripts."""

from .backchannel import CueList, default_cue_list, is_backchannel, load_cue_list
from .config import ConfigError, TurnModelConfig, load_config, parse_config
from .estimators import TurnFeatureExtractor, TurnFilter, TurnSegmenter, TurnSummarizer
from .metrics import (
    Histogram,
    SpeakerAggregate,
    SummaryStats,
    TurnFeatures,
    apply_filters,
    compute_features,
    histogram,
    speaker_aggregates,
    summarize,
)
from .oracle import reference_oracle
from .outcomes import (
    CorrelationResult,
    PairedComparisonResult,
    SurveyRecord,
    compare_models,
    join_survey,
    pearson,
    williams_test,
)
from .segmentation import (
    Transcript,
    Turn,
    TurnKind,
    UtteranceGroup,
    group_utterances,
    segment,
    segment_baseline,
    segment_intermediate,
    segment_naturalturn,
)
from .synth import SynthParams, generate_conversation, generate_corpus
from .tokens import (
    TokenFormatError,
    TokenStream,
    WordToken,
    adapt_stereo_stt,
    filter_tokens,
    parse_canonical_tokens,
    serialize_tokens,
)

__version__ = "0.1.0"
