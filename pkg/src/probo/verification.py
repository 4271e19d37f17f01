"""Commit-reveal verification and quorum aggregation.

The proponent's hash notarizes their exact outputs; a verifier's verdict
comes from tolerance comparison against the declared intervals and the
revealed proponent table, not bit-exact hash equality. Bit-exact matching is
the degenerate case low = high = value. A request is decided at exactly
min_reports reports; the accept threshold is exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

from .errors import MixedRequestIds, UnknownMetric, UnorderedReports
from .studies import OutputTable, commit_outputs
from .tokenomics import NodeId


class VerdictValue(str, Enum):
    MATCH = "match"
    MISMATCH = "mismatch"


@dataclass(frozen=True)
class OverlapResult:
    """Top-k ranked-feature intersection check."""

    k: int
    overlap: float
    passed: bool

    def to_dict(self) -> dict:
        return {"k": self.k, "overlap": self.overlap, "passed": self.passed}

    @classmethod
    def from_dict(cls, d: dict) -> "OverlapResult":
        return cls(k=int(d["k"]), overlap=float(d["overlap"]), passed=bool(d["passed"]))


@dataclass(frozen=True)
class Verdict:
    """Match iff every tolerance check passed; detail records each check."""

    value: VerdictValue
    metric_results: dict
    overlaps: dict = field(default_factory=dict)

    @property
    def matched(self) -> bool:
        return self.value is VerdictValue.MATCH

    def to_dict(self) -> dict:
        d = {"value": self.value.value,
             "metric_results": dict(self.metric_results)}
        if self.overlaps:
            d["overlaps"] = {k: v.to_dict() for k, v in self.overlaps.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(
            value=VerdictValue(d["value"]),
            metric_results={k: bool(v) for k, v in d["metric_results"].items()},
            overlaps={k: OverlapResult.from_dict(v)
                      for k, v in d.get("overlaps", {}).items()},
        )


@dataclass(frozen=True)
class VerifierReport:
    """One verifier's reproduced table, its hash, and the verdict."""

    request_id: str
    verifier: NodeId
    output_table: OutputTable
    output_hash: str
    verdict: Verdict
    timestamp: int

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "verifier": self.verifier.to_dict(),
            "output_table": self.output_table.to_dict(),
            "output_hash": self.output_hash,
            "verdict": self.verdict.to_dict(),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerifierReport":
        return cls(
            request_id=d["request_id"],
            verifier=NodeId.from_dict(d["verifier"]),
            output_table=OutputTable.from_dict(d["output_table"]),
            output_hash=d["output_hash"],
            verdict=Verdict.from_dict(d["verdict"]),
            timestamp=int(d["timestamp"]),
        )


def parse_threshold(value) -> Fraction:
    """Accept "2/3", "0.6", or a number; floats go through their decimal
    string so 0.6 means 3/5, not the nearest binary float."""
    if isinstance(value, Fraction):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


@dataclass(frozen=True)
class QuorumConfig:
    min_reports: int = 3
    accept_threshold: Fraction = Fraction(2, 3)

    def __post_init__(self):
        object.__setattr__(self, "accept_threshold", parse_threshold(self.accept_threshold))
        if self.min_reports < 1:
            raise ValueError("min_reports must be >= 1")
        if not 0 < self.accept_threshold <= 1:
            raise ValueError("accept_threshold must be in (0, 1]")

    def to_dict(self) -> dict:
        return {"min_reports": self.min_reports,
                "accept_threshold": str(self.accept_threshold)}

    @classmethod
    def from_dict(cls, d: dict) -> "QuorumConfig":
        return cls(min_reports=int(d.get("min_reports", 3)),
                   accept_threshold=parse_threshold(d.get("accept_threshold", "2/3")))


class Decision(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    EXPIRED = "expired"


def verify_commitment(table: OutputTable, committed: str) -> bool:
    """True iff the table hashes to the registered commitment. Used at
    settlement to prove the revealed proponent table is the committed one."""
    return commit_outputs(table) == committed


def compare_outputs(proponent: OutputTable, verifier: OutputTable, tolerances) -> Verdict:
    """Evaluate a verifier's reproduction against the declared tolerances.

    Per spec: the metric passes iff the verifier's value lies in
    [low, high]; a metric missing from the verifier table fails its check.
    When list_k is set, the top-k feature lists must overlap by at least
    min_overlap (fraction of k). A tolerance naming a metric absent from the
    proponent table is a malformed request and raises UnknownMetric.
    """
    metric_results: dict[str, bool] = {}
    overlaps: dict[str, OverlapResult] = {}
    for t in tolerances:
        if t.metric not in proponent.metrics:
            raise UnknownMetric(t.metric)
        value = verifier.metrics.get(t.metric)
        metric_results[t.metric] = value is not None and t.low <= value <= t.high
        if t.list_k is not None:
            k = t.list_k
            top_p = set(proponent.ranked_features[:k])
            top_v = set(verifier.ranked_features[:k])
            overlap = len(top_p & top_v) / k
            overlaps[t.metric] = OverlapResult(
                k=k, overlap=overlap,
                passed=t.min_overlap is not None and overlap >= t.min_overlap)
    passed = all(metric_results.values()) and all(o.passed for o in overlaps.values())
    return Verdict(
        value=VerdictValue.MATCH if passed else VerdictValue.MISMATCH,
        metric_results=metric_results,
        overlaps=overlaps,
    )


def eligible(verifier: NodeId, request_proponent: NodeId, existing_reports) -> bool:
    """A node may verify any request except its own, once."""
    if verifier.id == request_proponent.id:
        return False
    return all(r.verifier.id != verifier.id for r in existing_reports)


def aggregate(reports, quorum: QuorumConfig, now: int, deadline: int) -> Decision:
    """Fold ordered verifier reports into a decision.

    Below min_reports the request is Pending until the deadline passes, then
    Expired. The decision is taken at exactly min_reports reports: Accepted
    iff the Match fraction meets the accept threshold, else Rejected.
    Reports beyond min_reports never arrive through the engine and are
    ignored here.
    """
    reports = list(reports)
    ids = {r.request_id for r in reports}
    if len(ids) > 1:
        raise MixedRequestIds(sorted(ids))
    if any(a.timestamp > b.timestamp for a, b in zip(reports, reports[1:])):
        raise UnorderedReports()
    if len(reports) < quorum.min_reports:
        return Decision.EXPIRED if now > deadline else Decision.PENDING
    counted = reports[:quorum.min_reports]
    matches = sum(1 for r in counted if r.verdict.matched)
    if Fraction(matches, quorum.min_reports) >= quorum.accept_threshold:
        return Decision.ACCEPTED
    return Decision.REJECTED
