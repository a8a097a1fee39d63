"""Worker pool for segmenting many conversations."""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import TurnModelConfig
from .io import atomic_write, transcripts_to_csv
from .segmentation import Transcript, Turn, TurnKind, segment
from .tokens import TokenStream, filter_tokens, read_tokens

THREADS_ENV = "TURNFORGE_THREADS"


def resolve_workers(n_jobs: int | None = None) -> int:
    """Worker count: ``TURNFORGE_THREADS`` wins, then ``n_jobs`` (-1 = all CPUs), else 1."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    else:
        n = 1 if n_jobs is None else n_jobs
    if n < 0:
        n = os.cpu_count() or 1
    return max(1, n)


def _run_one(stream: TokenStream, model: str, config: TurnModelConfig) -> Transcript:
    return segment(filter_tokens(stream, config), model, config)


# Streams visible to forked workers; set only while a pool is alive.
_SHARED: Sequence[TokenStream] = ()

# Per-turn fields plus token positions, cheap to send between processes.
Packed = tuple[list[tuple], np.ndarray, np.ndarray]


def _pack(stream: TokenStream, tr: Transcript) -> Packed:
    pos = {id(t): k for k, t in enumerate(stream.tokens)}
    idx: list[int] = []
    offsets = [0]
    meta = []
    for t in tr.turns:
        idx.extend(pos[id(w)] for w in t.tokens)
        offsets.append(len(idx))
        meta.append((t.turn_id, t.speaker, t.kind.value, t.start_s, t.end_s, t.text, t.parent_turn_id))
    return meta, np.asarray(idx, dtype=np.int32), np.asarray(offsets, dtype=np.int64)


def _unpack(stream: TokenStream, packed: Packed, model: str, config: TurnModelConfig) -> Transcript:
    meta, idx, offsets = packed
    toks = stream.tokens
    pos = idx.tolist()
    bounds = offsets.tolist()
    turns = tuple(
        Turn(tid, spk, TurnKind(kind), a, b, text, parent, tuple(toks[j] for j in pos[bounds[k] : bounds[k + 1]]))
        for k, (tid, spk, kind, a, b, text, parent) in enumerate(meta)
    )
    return Transcript(stream.conversation_id, model, turns, config)


def _run_shared(i: int, model: str, config: TurnModelConfig) -> tuple[str, Packed]:
    stream = filter_tokens(_SHARED[i], config)
    tr = segment(stream, model, config)
    return tr.model, _pack(stream, tr)


def segment_many(
    streams: Sequence[TokenStream],
    model: str = "naturalturn",
    config: TurnModelConfig | None = None,
    n_jobs: int | None = None,
) -> list[Transcript]:
    """Confidence-filter and segment each stream, optionally across processes.

    Output order matches ``streams``. Where ``fork`` is available, workers
    read the streams from inherited memory and send back token positions
    rather than token objects, so the parent shares its token instances with
    the returned turns.
    """
    global _SHARED
    config = config or TurnModelConfig()
    workers = resolve_workers(n_jobs)
    if workers == 1 or len(streams) < 2:
        return [_run_one(s, model, config) for s in streams]
    chunk = max(1, len(streams) // (workers * 4))
    if "fork" not in mp.get_all_start_methods():
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(partial(_run_one, model=model, config=config), streams, chunksize=chunk))
    _SHARED = streams
    try:
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as pool:
            packed = list(pool.map(partial(_run_shared, model=model, config=config), range(len(streams)),
                                   chunksize=chunk))
    finally:
        _SHARED = ()
    return [_unpack(filter_tokens(s, config), p, name, config) for s, (name, p) in zip(streams, packed)]


@dataclass(frozen=True)
class FileResult:
    """Counts reported by a worker for one conversation file."""

    conversation_id: str
    input_path: str
    output_path: str
    n_tokens: int
    n_turns: int


def _segment_file(path: Path, out_dir: Path, model: str, config: TurnModelConfig) -> FileResult:
    stream = read_tokens(path)
    tr = _run_one(stream, model, config)
    out = out_dir / f"{stream.conversation_id}.csv"
    atomic_write(out, transcripts_to_csv([tr]))
    return FileResult(stream.conversation_id, str(path), str(out), len(stream), len(tr))


def segment_files(
    paths: Sequence[str | Path],
    out_dir: str | Path,
    model: str = "naturalturn",
    config: TurnModelConfig | None = None,
    n_jobs: int | None = None,
) -> list[FileResult]:
    """Read, segment and write one transcript CSV per token file.

    Each worker handles whole files and writes its output atomically, so
    only small count records cross process boundaries. Results follow the
    order of ``paths``.

    Raises:
        ValueError: two files share a conversation id.
    """
    config = config or TurnModelConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = resolve_workers(n_jobs)
    fn = partial(_segment_file, out_dir=out_dir, model=model, config=config)
    paths = [Path(p) for p in paths]
    if workers == 1 or len(paths) < 2:
        results = [fn(p) for p in paths]
    else:
        chunk = max(1, len(paths) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, paths, chunksize=chunk))
    seen: dict[str, str] = {}
    for r in results:
        if r.conversation_id in seen:
            raise ValueError(f"duplicate conversation_id {r.conversation_id!r} in {seen[r.conversation_id]} "
                             f"and {r.input_path}")
        seen[r.conversation_id] = r.input_path
    return results
