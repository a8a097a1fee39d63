"""Naive NaturalTurn reference used to cross-check the segmentation engine.

Quadratic on purpose: every group is classified by a full re-scan of all
earlier groups instead of carrying a running "current primary" state. A
listener group is secondary exactly when some earlier group by the other
speaker ends at or after it; disjointness of each speaker's groups makes that
host unique and necessarily primary.
"""

from __future__ import annotations

from .backchannel import is_backchannel
from .config import TurnModelConfig
from .segmentation import Transcript, Turn, TurnKind
from .tokens import TokenStream


def _groups_for(tokens, max_pause_s):
    if not tokens:
        return []
    cuts = [0]
    for k in range(1, len(tokens)):
        if tokens[k].start_s - tokens[k - 1].end_s >= max_pause_s:
            cuts.append(k)
    cuts.append(len(tokens))
    return [tuple(tokens[a:b]) for a, b in zip(cuts, cuts[1:])]


def reference_oracle(stream: TokenStream, config: TurnModelConfig | None = None) -> Transcript:
    config = config or TurnModelConfig()
    units = []
    for speaker in sorted({t.speaker for t in stream.tokens}):
        own = [t for t in stream.tokens if t.speaker == speaker]
        units.extend(_groups_for(own, config.max_pause_s))
    units.sort(key=lambda u: (u[0].start_s, u[0].speaker))

    turns = []
    for i, unit in enumerate(units):
        hosts = [
            j
            for j in range(i)
            if units[j][0].speaker != unit[0].speaker and units[j][-1].end_s >= unit[-1].end_s
        ]
        words = [t.text for t in unit]
        if hosts:
            parent = hosts[-1] + 1
            bc = is_backchannel(words, config.cues, config)
            kind = TurnKind.BACKCHANNEL if bc else TurnKind.SECONDARY
        else:
            parent, kind = None, TurnKind.PRIMARY
        turns.append(
            Turn(
                turn_id=i + 1,
                speaker=unit[0].speaker,
                kind=kind,
                start_s=unit[0].start_s,
                end_s=unit[-1].end_s,
                text=" ".join(words),
                parent_turn_id=parent,
                tokens=unit,
            )
        )
    return Transcript(stream.conversation_id, "naturalturn", tuple(turns), config)
