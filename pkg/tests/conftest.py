from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from turnforge import TokenStream, WordToken

FIXTURES = Path(__file__).parent / "fixtures"


def tok(speaker, text, start, end, conv="c", confidence=1.0):
    return WordToken(conv, speaker, text, start, end, confidence)


def make_stream(spec, conv="c"):
    """Stream from (speaker, text, start, end) tuples."""
    return TokenStream(conv, tuple(tok(s, w, a, b, conv) for s, w, a, b in spec))


T1 = [
    ("A", "hello", 0.0, 0.5),
    ("A", "there", 0.6, 1.0),
    ("A", "how", 1.2, 1.4),
    ("A", "are", 1.5, 1.7),
    ("A", "you", 1.8, 2.0),
    ("B", "mhm", 0.7, 0.9),
    ("B", "good", 3.6, 3.9),
]
T2 = [
    ("A", "so", 0.0, 1.0),
    ("A", "the", 1.2, 2.5),
    ("A", "plan", 2.7, 5.0),
    ("B", "sounds", 4.5, 5.5),
    ("B", "fine", 5.6, 6.0),
]
T3 = [("A", "first", 0.0, 1.0), ("A", "second", 4.0, 5.0)]


@pytest.fixture
def t1():
    return make_stream(T1, "t1")


@pytest.fixture
def t2():
    return make_stream(T2, "t2")


@pytest.fixture
def t3():
    return make_stream(T3, "t3")


WORDS = ("yeah", "mhm", "okay", "so", "well", "i'm", "the", "plan", "sounds", "good", "right", "wow")


def random_stream(seed: int, max_pause: float = 1.5, max_tokens: int = 500, conv: str | None = None) -> TokenStream:
    """Random two-speaker stream with gaps clustered at the max_pause boundary.

    Times are integer milliseconds so ties between speakers and between a
    listener end and a primary end happen often.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, max_tokens + 1))
    mp_ms = int(round(max_pause * 1000))
    gap_choices = np.array([0, 1, 50, 200, mp_ms - 1, mp_ms, mp_ms + 1, 2 * mp_ms, 5000])
    clock = {"0": int(rng.integers(0, 3000)), "1": int(rng.integers(0, 3000))}
    toks = []
    for _ in range(n):
        spk = "0" if rng.random() < 0.6 else "1"
        if rng.random() < 0.7:
            gap = int(rng.choice(gap_choices))
        else:
            gap = int(rng.integers(0, 3 * mp_ms))
        start = clock[spk] + gap
        dur = int(rng.choice([0, 100, 300, 700]))
        clock[spk] = start + dur
        toks.append(WordToken(conv or f"r{seed}", spk, str(rng.choice(WORDS)), start / 1000, (start + dur) / 1000))
    return TokenStream(conv or f"r{seed}", tuple(toks))


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
