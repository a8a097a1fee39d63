"""Command-line interface.

Processing order for token input is fixed: adapt, confidence filter, segment,
features, filters, statistics/analysis. Every command writes one JSON run
manifest next to its primary output.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .backchannel import load_cue_list
from .config import TurnModelConfig, load_config
from .io import (
    aggregates_to_csv,
    atomic_write,
    features_to_csv,
    histogram_to_csv,
    read_summaries,
    read_transcript_inputs,
    report_to_csv,
    summaries_to_csv,
    table_to_csv,
    transcripts_to_csv,
)
from .metrics import apply_filters, compute_features, histogram, speaker_aggregates, summarize
from .oracle import reference_oracle
from .outcomes import DEFAULT_OUTCOMES, compare_models, join_survey, read_surveys
from .parallel import resolve_workers, segment_files, segment_many
from .segmentation import MODELS, segment_naturalturn
from .synth import SynthParams, generate_conversation, generate_corpus
from .tokens import adapt_stereo_stt, read_tokens, serialize_tokens

logger = logging.getLogger("turnforge")

PIPELINE_ORDER = ["adapt", "confidence_filter", "segment", "features", "filters", "stats/analyze"]


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    config: dict | None = None
    counts: dict[str, int] = field(default_factory=dict)
    version: str = __version__
    processing_order: list[str] = field(default_factory=lambda: list(PIPELINE_ORDER))
    extra: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        atomic_write(path, json.dumps(self.__dict__, indent=2, sort_keys=True, default=str) + "\n")


def _config(args) -> TurnModelConfig:
    config = load_config(args.config) if getattr(args, "config", None) else TurnModelConfig()
    if getattr(args, "cues", None):
        cues = load_cue_list(args.cues)
        config = config.replace(cue_list=cues.cues, prohibited_start_list=cues.prohibited_starts)
    return config


def _manifest_path(args, primary_out: Path) -> Path:
    if getattr(args, "manifest", None):
        return Path(args.manifest)
    if primary_out.suffix:
        return primary_out.with_name(primary_out.name + ".manifest.json")
    return primary_out / "manifest.json"


def _token_files(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(p.glob("*.tsv"))
            if not found:
                raise FileNotFoundError(f"no token files (*.tsv) in {p}")
            files.extend(found)
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"input not found: {p}")
    return files


def cmd_segment(args) -> int:
    config = _config(args)
    files = _token_files(args.input)
    out = Path(args.out)
    if args.out.endswith(("/", "\\")) or out.is_dir():
        # One CSV per conversation, written atomically by the workers.
        results = segment_files(files, out, args.model, config, n_jobs=args.jobs)
        outputs = [r.output_path for r in results]
        n_conv = len(results)
        n_tokens = sum(r.n_tokens for r in results)
        n_turns = sum(r.n_turns for r in results)
    else:
        streams = [read_tokens(f) for f in files]
        transcripts = segment_many(streams, args.model, config, n_jobs=args.jobs)
        atomic_write(out, transcripts_to_csv(transcripts))
        outputs = [str(out)]
        n_conv = len(streams)
        n_tokens = sum(len(s) for s in streams)
        n_turns = sum(len(t) for t in transcripts)
    RunManifest(
        command="segment",
        inputs=[str(f) for f in files],
        outputs=outputs,
        config=config.to_dict(),
        counts={
            "conversations": n_conv,
            "tokens_read": n_tokens,
            "turns_emitted": n_turns,
            "workers": resolve_workers(args.jobs),
        },
        extra={"model": args.model},
    ).write(_manifest_path(args, out))
    return 0


def cmd_adapt(args) -> int:
    src = Path(args.input)
    doc = json.loads(src.read_text(encoding="utf-8"))
    stream = adapt_stereo_stt(doc, conversation_id=args.conversation_id)
    out = Path(args.out)
    atomic_write(out, serialize_tokens(stream))
    RunManifest(
        command="adapt",
        inputs=[str(src)],
        outputs=[str(out)],
        counts={"tokens_read": len(stream)},
    ).write(_manifest_path(args, out))
    return 0


def _features_for(paths: Sequence[str], config: TurnModelConfig, model: str = ""):
    transcripts = read_transcript_inputs(paths, model)
    feats = [f for tr in transcripts for f in apply_filters(compute_features(tr), config)]
    return transcripts, feats


def cmd_stats(args) -> int:
    config = _config(args)
    model = args.model or Path(args.input[0]).stem
    transcripts, feats = _features_for(args.input, config, model)
    summary = summarize(feats, model)
    out = Path(args.out)
    atomic_write(out, summaries_to_csv([summary]))
    outputs = [str(out)]
    counts = {
        "conversations": len(transcripts),
        "turns_read": sum(len(t) for t in transcripts),
        "rows_excluded": sum(1 for f in feats if f.excluded),
    }
    if args.features:
        atomic_write(Path(args.features), features_to_csv(feats))
        outputs.append(args.features)
    if args.aggregates:
        atomic_write(Path(args.aggregates), aggregates_to_csv(speaker_aggregates(feats)))
        outputs.append(args.aggregates)
    if args.hist_durations:
        h = histogram([f.duration_s for f in feats if f.duration_eligible], args.duration_bin, 0.0, config.max_turn_duration_s)
        atomic_write(Path(args.hist_durations), histogram_to_csv(h))
        outputs.append(args.hist_durations)
        counts["duration_hist_overflow"] = h.overflow
    if args.hist_intervals:
        h = histogram(
            [f.interval_to_prev_s for f in feats if f.interval_eligible],
            args.interval_bin,
            config.interval_min_s,
            config.interval_max_s,
        )
        atomic_write(Path(args.hist_intervals), histogram_to_csv(h))
        outputs.append(args.hist_intervals)
        counts["interval_hist_overflow"] = h.overflow
    RunManifest(
        command="stats", inputs=list(args.input), outputs=outputs, config=config.to_dict(), counts=counts
    ).write(_manifest_path(args, out))
    return 0


def _summary_for(path: str, label: str | None, config: TurnModelConfig):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("model,"):
        s = read_summaries(path)[0]
    else:
        _, feats = _features_for([path], config)
        s = summarize(feats, Path(path).stem)
    if label:
        s = type(s)(**{**s.__dict__, "model": label})
    return s


def cmd_compare(args) -> int:
    config = _config(args)
    a = _summary_for(args.a, args.label_a, config)
    b = _summary_for(args.b, args.label_b, config)
    out = Path(args.out)
    atomic_write(out, table_to_csv(a, b))
    RunManifest(
        command="compare", inputs=[args.a, args.b], outputs=[str(out)], config=config.to_dict()
    ).write(_manifest_path(args, out))
    return 0


def cmd_analyze(args) -> int:
    config = _config(args)
    surveys = read_surveys(args.surveys)
    _, fb = _features_for(args.baseline, config, "baseline")
    _, fn = _features_for(args.naturalturn, config, "naturalturn")
    jb = join_survey(speaker_aggregates(fb), surveys)
    jn = join_survey(speaker_aggregates(fn), surveys)
    outcomes = args.outcomes.split(",") if args.outcomes else list(DEFAULT_OUTCOMES)
    comparisons = [compare_models(jb, jn, o) for o in outcomes]
    out = Path(args.out)
    atomic_write(out, report_to_csv(comparisons))
    RunManifest(
        command="analyze",
        inputs=[*args.baseline, *args.naturalturn, args.surveys],
        outputs=[str(out)],
        config=config.to_dict(),
        counts={
            "survey_rows": len(surveys),
            "joined_baseline": len(jb),
            "joined_naturalturn": len(jn),
            "unmatched_aggregates": jb.unmatched_aggregates + jn.unmatched_aggregates,
        },
        extra={"note": "simple correlations only; no multilevel clustering by conversation"},
    ).write(_manifest_path(args, out))
    return 0


def _synth_params(args) -> SynthParams:
    base = {}
    if args.params:
        base = json.loads(Path(args.params).read_text(encoding="utf-8"))
        for k in ("turns_per_conversation", "turn_duration_range_s", "overlap_range_s"):
            if k in base:
                base[k] = tuple(base[k])
    for key in ("seed", "n_conversations", "backchannel_rate", "parallel_rate", "straddle_rate", "effect_size"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    return SynthParams(**base)


def cmd_synth(args) -> int:
    config = _config(args)
    params = _synth_params(args)
    out = Path(args.out)
    corpus = generate_corpus(params, out, config)
    logger.info("wrote %d conversations to %s", len(corpus.streams), out)
    return 0


def cmd_verify(args) -> int:
    config = _config(args)
    if args.synth:
        params = SynthParams(seed=args.seed, n_conversations=args.synth, straddle_rate=0.2)
        pairs = [generate_conversation(params, i, config) for i in range(args.synth)]
        streams = [s for s, _ in pairs]
        inputs = [f"synth:seed={args.seed},n={args.synth}"]
    else:
        files = _token_files(args.input)
        streams = [read_tokens(f) for f in files]
        inputs = [str(f) for f in files]
    mismatches = []
    for s in streams:
        if segment_naturalturn(s, config) != reference_oracle(s, config):
            mismatches.append(s.conversation_id)
    for cid in mismatches:
        print(f"MISMATCH {cid}")
    print(f"verified {len(streams)} conversations, {len(mismatches)} mismatches")
    if args.out:
        out = Path(args.out)
        atomic_write(out, json.dumps({"checked": len(streams), "mismatches": mismatches}, indent=2) + "\n")
        RunManifest(
            command="verify",
            inputs=inputs,
            outputs=[str(out)],
            config=config.to_dict(),
            counts={"conversations": len(streams), "mismatches": len(mismatches)},
        ).write(_manifest_path(args, out))
    return 1 if mismatches else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="turnforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"turnforge {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="key=value config file (TurnModelConfig fields)")
            p.add_argument("--cues", help="cue-list file overriding cue/prohibited lists")
        p.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")

    p = sub.add_parser("segment", help="token files -> transcript CSV")
    p.add_argument("--model", choices=MODELS, default="naturalturn")
    p.add_argument("--input", nargs="+", required=True, help="token files or directories of *.tsv")
    p.add_argument("--out", required=True, help="CSV file, or a directory (trailing /) for one CSV per conversation")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (TURNFORGE_THREADS overrides)")
    common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("adapt", help="stereo STT JSON -> canonical token file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--conversation-id")
    common(p, config=False)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("stats", help="transcript CSV -> summary statistics and histograms")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="label for the summary row (default: input file stem)")
    p.add_argument("--features")
    p.add_argument("--aggregates")
    p.add_argument("--hist-durations")
    p.add_argument("--hist-intervals")
    p.add_argument("--duration-bin", type=float, default=1.0)
    p.add_argument("--interval-bin", type=float, default=0.1)
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("compare", help="two transcripts or summaries -> side-by-side table")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--label-a")
    p.add_argument("--label-b")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analyze", help="transcripts + surveys -> correlation report")
    p.add_argument("--baseline", nargs="+", required=True)
    p.add_argument("--naturalturn", nargs="+", required=True)
    p.add_argument("--surveys", required=True)
    p.add_argument("--outcomes", help="comma-separated survey columns")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--params", help="JSON file of SynthParams fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-conversations", dest="n_conversations", type=int)
    p.add_argument("--backchannel-rate", type=float)
    p.add_argument("--parallel-rate", type=float)
    p.add_argument("--straddle-rate", type=float)
    p.add_argument("--effect-size", type=float)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check the engine against the reference oracle")
    p.add_argument("--input", nargs="+", help="token files or directories")
    p.add_argument("--synth", type=int, help="verify N generated conversations instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "verify" and not (args.input or args.synth):
        print("error: verify needs --input or --synth", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
