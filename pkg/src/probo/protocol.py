"""Pending-request lifecycle shared by the CLI and the simulator.

A submission is atomic: descriptor validation, commitment check, and escrow
opening either all succeed or nothing changes. A request reaching quorum or
its deadline is settled through the bank and sealed as a block in the same
motion, so every settlement has a matching chain record, rejections and
expirations included.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    CommitmentMismatch,
    DescriptorInvalid,
    DuplicateRequest,
    TimestampRegression,
)
from .ledger import AcceptanceRecord, Chain, ExpiryRecord, RejectionRecord, append_block
from .studies import OutputTable, StudyDescriptor, commit_outputs, validate_descriptor
from .tokenomics import BankState, EconomicParams, Settlement
from .verification import (
    Decision,
    QuorumConfig,
    VerifierReport,
    aggregate,
    eligible,
    verify_commitment,
)


@dataclass
class PendingRequest:
    """A broadcast request awaiting verifier reports."""

    descriptor: StudyDescriptor
    commitment: str
    proponent_output: OutputTable
    deposit: int
    submitted_at: int
    deadline: int
    reports: list = field(default_factory=list)

    @property
    def request_id(self) -> str:
        return self.descriptor.request_id

    @property
    def proponent(self):
        return self.descriptor.proponent

    def to_dict(self) -> dict:
        return {
            "descriptor": self.descriptor.to_dict(),
            "commitment": self.commitment,
            "proponent_output": self.proponent_output.to_dict(),
            "deposit": self.deposit,
            "submitted_at": self.submitted_at,
            "deadline": self.deadline,
            "reports": [r.to_dict() for r in self.reports],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PendingRequest":
        return cls(
            descriptor=StudyDescriptor.from_dict(d["descriptor"]),
            commitment=d["commitment"],
            proponent_output=OutputTable.from_dict(d["proponent_output"]),
            deposit=int(d["deposit"]),
            submitted_at=int(d["submitted_at"]),
            deadline=int(d["deadline"]),
            reports=[VerifierReport.from_dict(r) for r in d["reports"]],
        )


def submit_request(bank: BankState, descriptor: StudyDescriptor, output_table: OutputTable,
                   deposit: int, params: EconomicParams, now: int, horizon: int,
                   pending_ids, commitment: str = None) -> PendingRequest:
    """Validate, commit, and escrow a new request.

    The commitment normally comes from the table itself; a caller-supplied
    commitment that does not match the revealed table is refused outright
    (table and hash are both public from broadcast, so tampering is
    trivially caught at the door).
    """
    if descriptor.request_id in pending_ids:
        raise DuplicateRequest(descriptor.request_id)
    violations = validate_descriptor(descriptor, horizon=horizon)
    if violations:
        raise DescriptorInvalid(violations)
    if commitment is None:
        commitment = commit_outputs(output_table)
    elif not verify_commitment(output_table, commitment):
        raise CommitmentMismatch(descriptor.request_id)
    # escrow last: it is the only mutation
    bank.open_escrow(descriptor.proponent, deposit, descriptor.request_id, params,
                     timestamp=now)
    return PendingRequest(
        descriptor=descriptor.with_deadline(now + horizon),
        commitment=commitment,
        proponent_output=output_table,
        deposit=deposit,
        submitted_at=now,
        deadline=now + horizon,
    )


def can_report(pending: PendingRequest, verifier, quorum: QuorumConfig, now: int) -> bool:
    """True if the verifier may still file on this request: not the
    proponent, no prior report, quorum not yet reached, deadline not past."""
    if len(pending.reports) >= quorum.min_reports:
        return False
    if now > pending.deadline:
        return False
    return eligible(verifier, pending.proponent, pending.reports)


def decide(pending: PendingRequest, quorum: QuorumConfig, now: int) -> Decision:
    return aggregate(pending.reports, quorum, now, pending.deadline)


_RECORD_FOR_DECISION = {
    Decision.ACCEPTED: AcceptanceRecord,
    Decision.REJECTED: RejectionRecord,
}


def settle_and_record(bank: BankState, chain: Chain, pending: PendingRequest,
                      decision: Decision, params: EconomicParams, timestamp: int):
    """Close the escrow for a decided request and seal the outcome block.

    Returns (settlement, block). The revealed table must match the
    registered commitment; acceptance mints rewards, rejection forfeits the
    deposit to the verifiers in arrival order, expiry refunds.
    """
    if not verify_commitment(pending.proponent_output, pending.commitment):
        raise CommitmentMismatch(pending.request_id)
    if timestamp < chain.tail.timestamp:
        # fail before the bank mutates; settle + append must be atomic
        raise TimestampRegression(f"{timestamp} < {chain.tail.timestamp}")
    verifiers = [r.verifier for r in pending.reports]
    settlement = bank.settle(pending.request_id, decision, verifiers, params,
                             timestamp=timestamp)
    if decision is Decision.EXPIRED:
        payload = ExpiryRecord(
            request_id=pending.request_id,
            descriptor=pending.descriptor,
            commitment=pending.commitment,
            proponent=pending.proponent,
            reports=tuple(pending.reports),
            settlement=settlement,
        )
    else:
        payload = _RECORD_FOR_DECISION[decision](
            request_id=pending.request_id,
            descriptor=pending.descriptor,
            proponent_output=pending.proponent_output,
            commitment=pending.commitment,
            proponent=pending.proponent,
            reports=tuple(pending.reports),
            settlement=settlement,
        )
    block = append_block(chain, payload, timestamp)
    return settlement, block
