"""Append-only hash-chained ledger of accepted, rejected, and expired
requests, with canonical serialization, validation, and flat-file
persistence.

There is no proof-of-work and no fork choice: the desk-scale chain has a
single sequencer, and consensus concerns study validity, not block order.
The genesis block embeds the network configuration, so payload invariants
(like the minimum report count in decision records) are checkable from the
chain alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .canonical import ZERO_DIGEST, canonical_bytes, canonical_digest, digest, is_digest
from .errors import InvalidChain, InvalidConfig, InvalidPayload, TimestampRegression
from .studies import OutputTable, StudyDescriptor
from .tokenomics import EconomicParams, NodeId, Settlement
from .verification import QuorumConfig, VerifierReport

DEFAULT_HORIZON_HOURS = 720


@dataclass(frozen=True)
class GenesisConfig:
    """Network start state: node allocations plus the economic, quorum, and
    time-horizon parameters every later block is checked against."""

    allocations: tuple  # ((NodeId, balance), ...)
    economics: EconomicParams = field(default_factory=EconomicParams)
    quorum: QuorumConfig = field(default_factory=QuorumConfig)
    horizon_hours: int = DEFAULT_HORIZON_HOURS

    def to_dict(self) -> dict:
        return {
            "nodes": [{**node.to_dict(), "balance": balance}
                      for node, balance in self.allocations],
            "economics": self.economics.to_dict(),
            "quorum": self.quorum.to_dict(),
            "horizon_hours": self.horizon_hours,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenesisConfig":
        return cls(
            allocations=tuple((NodeId.from_dict(n), int(n["balance"]))
                              for n in d["nodes"]),
            economics=EconomicParams.from_dict(d["economics"]),
            quorum=QuorumConfig.from_dict(d["quorum"]),
            horizon_hours=int(d.get("horizon_hours", DEFAULT_HORIZON_HOURS)),
        )


def _config_problems(config: GenesisConfig) -> list:
    problems = []
    if not config.allocations:
        problems.append("empty node list")
    seen = set()
    for node, balance in config.allocations:
        if node.id in seen:
            problems.append(f"duplicate node id {node.id}")
        seen.add(node.id)
        if balance < 0:
            problems.append(f"negative balance for {node.id}")
    if config.economics.min_deposit < 1:
        problems.append("min_deposit must be >= 1")
    if config.economics.verifier_reward < 1:
        problems.append("verifier_reward must be >= 1")
    if config.horizon_hours < 1:
        problems.append("horizon_hours must be >= 1")
    return problems


@dataclass(frozen=True)
class GenesisRecord:
    type = "genesis"
    config: GenesisConfig

    def to_dict(self) -> dict:
        return {"type": self.type, "config": self.config.to_dict()}

    def validate(self, genesis_config) -> list:
        return _config_problems(self.config)


@dataclass(frozen=True)
class _DecisionRecord:
    """Shared shape of acceptance and rejection payloads."""

    request_id: str
    descriptor: StudyDescriptor
    proponent_output: OutputTable
    commitment: str
    proponent: NodeId
    reports: tuple
    settlement: Settlement

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "request_id": self.request_id,
            "descriptor": self.descriptor.to_dict(),
            "proponent_output": self.proponent_output.to_dict(),
            "commitment": self.commitment,
            "proponent": self.proponent.to_dict(),
            "reports": [r.to_dict() for r in self.reports],
            "settlement": self.settlement.to_dict(),
        }

    def validate(self, genesis_config) -> list:
        problems = []
        if genesis_config is not None:
            need = genesis_config.quorum.min_reports
            if len(self.reports) < need:
                problems.append(
                    f"{self.type} record carries {len(self.reports)} reports, needs {need}")
        for r in self.reports:
            if r.request_id != self.request_id:
                problems.append(f"report for {r.request_id} under record {self.request_id}")
        if not is_digest(self.commitment):
            problems.append("malformed commitment digest")
        return problems


@dataclass(frozen=True)
class AcceptanceRecord(_DecisionRecord):
    type = "acceptance"


@dataclass(frozen=True)
class RejectionRecord(_DecisionRecord):
    type = "rejection"


@dataclass(frozen=True)
class ExpiryRecord:
    type = "expiry"

    request_id: str
    descriptor: StudyDescriptor
    commitment: str
    proponent: NodeId
    reports: tuple  # partial, below quorum
    settlement: Settlement

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "request_id": self.request_id,
            "descriptor": self.descriptor.to_dict(),
            "commitment": self.commitment,
            "proponent": self.proponent.to_dict(),
            "reports": [r.to_dict() for r in self.reports],
            "settlement": self.settlement.to_dict(),
        }

    def validate(self, genesis_config) -> list:
        problems = []
        for r in self.reports:
            if r.request_id != self.request_id:
                problems.append(f"report for {r.request_id} under record {self.request_id}")
        return problems


def payload_from_dict(d: dict):
    kind = d.get("type")
    if kind == "genesis":
        return GenesisRecord(config=GenesisConfig.from_dict(d["config"]))
    if kind in ("acceptance", "rejection"):
        cls = AcceptanceRecord if kind == "acceptance" else RejectionRecord
        return cls(
            request_id=d["request_id"],
            descriptor=StudyDescriptor.from_dict(d["descriptor"]),
            proponent_output=OutputTable.from_dict(d["proponent_output"]),
            commitment=d["commitment"],
            proponent=NodeId.from_dict(d["proponent"]),
            reports=tuple(VerifierReport.from_dict(r) for r in d["reports"]),
            settlement=Settlement.from_dict(d["settlement"]),
        )
    if kind == "expiry":
        return ExpiryRecord(
            request_id=d["request_id"],
            descriptor=StudyDescriptor.from_dict(d["descriptor"]),
            commitment=d["commitment"],
            proponent=NodeId.from_dict(d["proponent"]),
            reports=tuple(VerifierReport.from_dict(r) for r in d["reports"]),
            settlement=Settlement.from_dict(d["settlement"]),
        )
    raise InvalidPayload(f"unknown payload type {kind!r}")


def compute_block_hash(index: int, timestamp: int, prev_hash: str, payload_dict: dict) -> str:
    return canonical_digest({
        "index": index,
        "timestamp": timestamp,
        "prev_hash": prev_hash,
        "payload": payload_dict,
    })


@dataclass(frozen=True)
class Block:
    index: int
    timestamp: int
    prev_hash: str
    payload: object
    block_hash: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "timestamp": self.timestamp,
            "prev_hash": self.prev_hash,
            "payload": self.payload.to_dict(),
            "block_hash": self.block_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Block":
        # no integrity checks here; validate_chain is the arbiter
        return cls(
            index=int(d["index"]),
            timestamp=int(d["timestamp"]),
            prev_hash=d["prev_hash"],
            payload=payload_from_dict(d["payload"]),
            block_hash=d["block_hash"],
        )


def make_block(index: int, timestamp: int, prev_hash: str, payload) -> Block:
    return Block(
        index=index,
        timestamp=timestamp,
        prev_hash=prev_hash,
        payload=payload,
        block_hash=compute_block_hash(index, timestamp, prev_hash, payload.to_dict()),
    )


class Chain:
    """Ordered block list, genesis first. Mutated only through append_block."""

    def __init__(self, blocks=None):
        self.blocks: list[Block] = list(blocks) if blocks else []

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @property
    def tail(self) -> Block:
        if not self.blocks:
            raise InvalidChain("empty chain")
        return self.blocks[-1]

    @property
    def genesis_config(self) -> GenesisConfig:
        if not self.blocks or not isinstance(self.blocks[0].payload, GenesisRecord):
            raise InvalidChain("chain has no genesis record")
        return self.blocks[0].payload.config


def genesis(config: GenesisConfig, timestamp: int = 0) -> Chain:
    """Create a one-block chain whose genesis record snapshots the config.
    Deterministic: same config and timestamp give the same block hash."""
    problems = _config_problems(config)
    if problems:
        raise InvalidConfig("; ".join(problems))
    block = make_block(0, timestamp, ZERO_DIGEST, GenesisRecord(config=config))
    return Chain([block])


def append_block(chain: Chain, payload, timestamp: int) -> Block:
    """Seal a payload as the new tail block. The chain grows by one; the new
    block links to the previous tail."""
    tail = chain.tail
    if timestamp < tail.timestamp:
        raise TimestampRegression(f"{timestamp} < {tail.timestamp}")
    if isinstance(payload, GenesisRecord):
        raise InvalidPayload("genesis record only valid at index 0")
    problems = payload.validate(chain.genesis_config)
    if problems:
        raise InvalidPayload("; ".join(problems))
    block = make_block(len(chain.blocks), timestamp, tail.block_hash, payload)
    chain.blocks.append(block)
    return block


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    index: Optional[int] = None
    reason: Optional[str] = None
    detail: str = ""

    def __bool__(self):
        return self.ok


OK = ValidationResult(ok=True)

BAD_GENESIS = "BadGenesis"
BROKEN_LINK = "BrokenLink"
BAD_HASH = "BadHash"
TIMESTAMP_REGRESSION = "TimestampRegression"
INVALID_PAYLOAD = "InvalidPayload"


def validate_chain(chain: Chain) -> ValidationResult:
    """Walk the chain and report the first invalid block, if any.

    Check order per block: genesis shape, back link, timestamp order,
    recomputed hash, then payload invariants; a payload byte flip therefore
    reports BadHash, and a zeroed back link reports BrokenLink.
    """
    def bad(i, reason, detail=""):
        return ValidationResult(ok=False, index=i, reason=reason, detail=detail)

    if not chain.blocks:
        return bad(0, BAD_GENESIS, "empty chain")
    config = None
    for i, block in enumerate(chain.blocks):
        if i == 0:
            if not isinstance(block.payload, GenesisRecord):
                return bad(0, BAD_GENESIS, "first payload is not a genesis record")
            if block.prev_hash != ZERO_DIGEST:
                return bad(0, BAD_GENESIS, "genesis prev_hash is not all zeros")
            if block.index != 0:
                return bad(0, BAD_GENESIS, "genesis index is not 0")
            problems = _config_problems(block.payload.config)
            if problems:
                return bad(0, BAD_GENESIS, "; ".join(problems))
            config = block.payload.config
        else:
            prev = chain.blocks[i - 1]
            if block.prev_hash != prev.block_hash:
                return bad(i, BROKEN_LINK)
            if block.timestamp < prev.timestamp:
                return bad(i, TIMESTAMP_REGRESSION)
        recomputed = compute_block_hash(block.index, block.timestamp,
                                        block.prev_hash, block.payload.to_dict())
        if recomputed != block.block_hash:
            return bad(i, BAD_HASH)
        if i > 0:
            if block.index != i:
                return bad(i, INVALID_PAYLOAD, f"stored index {block.index} at position {i}")
            if isinstance(block.payload, GenesisRecord):
                return bad(i, INVALID_PAYLOAD, "genesis record past index 0")
            problems = block.payload.validate(config)
            if problems:
                return bad(i, INVALID_PAYLOAD, "; ".join(problems))
    return OK


# --- persistence: JSON Lines, one block per line, bit-reproducible ---

def chain_to_lines(chain: Chain) -> list:
    return [canonical_bytes(b.to_dict()).decode("utf-8") for b in chain.blocks]


def save_chain(chain: Chain, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in chain_to_lines(chain):
            f.write(line + "\n")


def load_chain(path) -> Chain:
    blocks = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                blocks.append(Block.from_dict(json.loads(line)))
    return Chain(blocks)
