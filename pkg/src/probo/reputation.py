"""Researcher and institution reputation recomputed from the chain alone.

Score is a transparent linear count: accepted proposals earn, rejections
cost, every verification performed earns regardless of outcome. Scores can
go negative; flooring at zero would blunt the penalty that makes careless
submissions expensive.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

from .errors import InvalidChain
from .ledger import AcceptanceRecord, Chain, ExpiryRecord, GenesisRecord, RejectionRecord, validate_chain

UNAFFILIATED = "unaffiliated"


@dataclass(frozen=True)
class ReputationWeights:
    w_accept: float = 3.0
    w_verify: float = 1.0
    w_reject: float = 3.0

    def __post_init__(self):
        for name in ("w_accept", "w_verify", "w_reject"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0")


@dataclass(frozen=True)
class ActivityCounts:
    accepted: int = 0
    rejected: int = 0
    verified: int = 0

    def add(self, accepted=0, rejected=0, verified=0) -> "ActivityCounts":
        return ActivityCounts(self.accepted + accepted, self.rejected + rejected,
                              self.verified + verified)


@dataclass
class ScoreBoard:
    """Per-key scores and activity counts; keys are node ids, or affiliation
    strings for institution boards."""

    scores: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    affiliations: dict = field(default_factory=dict)


def _score(counts: ActivityCounts, w: ReputationWeights) -> float:
    return w.w_accept * counts.accepted - w.w_reject * counts.rejected \
        + w.w_verify * counts.verified


def compute_scores(chain: Chain, weights: ReputationWeights = ReputationWeights()) -> ScoreBoard:
    """Scan every decision record: the proponent's accept/reject counter and
    each listed verifier's verify counter, then the linear formula. Expiry
    records credit no one. Pure function of the chain."""
    result = validate_chain(chain)
    if not result.ok:
        raise InvalidChain(f"invalid at index {result.index}: {result.reason}")

    counts: dict[str, ActivityCounts] = {}
    affiliations: dict[str, object] = {}

    def seen(node):
        counts.setdefault(node.id, ActivityCounts())
        affiliations.setdefault(node.id, node.affiliation)

    def bump(node, **kw):
        seen(node)
        counts[node.id] = counts[node.id].add(**kw)

    for block in chain:
        payload = block.payload
        if isinstance(payload, GenesisRecord):
            for node, _balance in payload.config.allocations:
                seen(node)
        elif isinstance(payload, AcceptanceRecord):
            bump(payload.proponent, accepted=1)
            for r in payload.reports:
                bump(r.verifier, verified=1)
        elif isinstance(payload, RejectionRecord):
            bump(payload.proponent, rejected=1)
            for r in payload.reports:
                bump(r.verifier, verified=1)
        elif isinstance(payload, ExpiryRecord):
            seen(payload.proponent)

    scores = {node_id: _score(c, weights) for node_id, c in counts.items()}
    return ScoreBoard(scores=scores, counts=counts, affiliations=affiliations)


def rank(board: ScoreBoard) -> list:
    """(id, score) pairs, descending by score, ties by ascending id."""
    return sorted(board.scores.items(), key=lambda item: (-item[1], item[0]))


def institution_scores(chain: Chain, weights: ReputationWeights = ReputationWeights()) -> ScoreBoard:
    """Roll node scores up by affiliation; unaffiliated nodes group under
    the reserved key. Institution score is exactly the sum of member
    scores."""
    node_board = compute_scores(chain, weights)
    scores: dict[str, float] = {}
    counts: dict[str, ActivityCounts] = {}
    for node_id, score in node_board.scores.items():
        key = node_board.affiliations.get(node_id) or UNAFFILIATED
        scores[key] = scores.get(key, 0.0) + score
        c = node_board.counts[node_id]
        counts[key] = counts.get(key, ActivityCounts()).add(
            accepted=c.accepted, rejected=c.rejected, verified=c.verified)
    return ScoreBoard(scores=scores, counts=counts, affiliations={})


def ranking_csv(board: ScoreBoard) -> str:
    """CSV export: rank,id,score,accepted,rejected,verified."""
    buf = io.StringIO()
    buf.write("rank,id,score,accepted,rejected,verified\n")
    for position, (key, score) in enumerate(rank(board), start=1):
        c = board.counts.get(key, ActivityCounts())
        buf.write(f"{position},{key},{_fmt(score)},{c.accepted},{c.rejected},{c.verified}\n")
    return buf.getvalue()


def _fmt(score: float) -> str:
    return str(int(score)) if float(score).is_integer() else repr(float(score))
