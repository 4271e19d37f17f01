"""Accounts, balances, supply accounting, and the escrow state machine.

Probos are indivisible integers. The single conservation rule everything
else hangs off: sum(balances) + sum(open escrow deposits) equals
genesis_supply + total_minted, after every operation. New probos are minted
only when an accepted settlement rewards its verifiers.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

from .errors import (
    AlreadySettled,
    DepositBelowMinimum,
    DuplicateAccount,
    DuplicateRequest,
    EmptyVerifierSet,
    InsufficientFunds,
    PostGenesisMint,
    ProboError,
    UnknownAccount,
    UnknownEscrow,
)


@dataclass(frozen=True)
class NodeId:
    """Persistent opaque identifier for a researcher, lab, or institution
    member (ORCID-like). Affiliation is an optional institution key used
    for reputation rollups."""

    id: str
    affiliation: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"id": self.id}
        if self.affiliation is not None:
            d["affiliation"] = self.affiliation
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NodeId":
        return cls(id=d["id"], affiliation=d.get("affiliation"))


def _key(node) -> str:
    return node.id if isinstance(node, NodeId) else node


@dataclass(frozen=True)
class EconomicParams:
    """Network-wide economic knobs.

    min_deposit gates submissions; verifier_reward is the flat per-verifier
    amount minted on acceptance. Their ratio is the reported tuning knob for
    overall supply growth.
    """

    min_deposit: int = 10
    verifier_reward: int = 5

    @property
    def deposit_reward_ratio(self) -> Fraction:
        return Fraction(self.min_deposit, self.verifier_reward)

    def to_dict(self) -> dict:
        return {"min_deposit": self.min_deposit, "verifier_reward": self.verifier_reward}

    @classmethod
    def from_dict(cls, d: dict) -> "EconomicParams":
        return cls(min_deposit=int(d["min_deposit"]), verifier_reward=int(d["verifier_reward"]))


class EscrowState(str, Enum):
    OPEN = "open"
    SETTLED_ACCEPTED = "settled_accepted"
    SETTLED_REJECTED = "settled_rejected"
    SETTLED_EXPIRED = "settled_expired"


class SettlementKind(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    EXPIRED = "expired"


_STATE_FOR_KIND = {
    SettlementKind.ACCEPTED: EscrowState.SETTLED_ACCEPTED,
    SettlementKind.REJECTED: EscrowState.SETTLED_REJECTED,
    SettlementKind.EXPIRED: EscrowState.SETTLED_EXPIRED,
}


@dataclass
class EscrowContract:
    """Deposit locked at submission; transitions exactly once from OPEN to
    one of the settled states."""

    request_id: str
    proponent: NodeId
    deposit: int
    state: EscrowState = EscrowState.OPEN
    opened_at: int = 0
    settled_at: Optional[int] = None

    def to_dict(self) -> dict:
        d = {
            "request_id": self.request_id,
            "proponent": self.proponent.to_dict(),
            "deposit": self.deposit,
            "state": self.state.value,
            "opened_at": self.opened_at,
        }
        if self.settled_at is not None:
            d["settled_at"] = self.settled_at
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EscrowContract":
        return cls(
            request_id=d["request_id"],
            proponent=NodeId.from_dict(d["proponent"]),
            deposit=int(d["deposit"]),
            state=EscrowState(d["state"]),
            opened_at=int(d["opened_at"]),
            settled_at=d.get("settled_at"),
        )


@dataclass(frozen=True)
class Settlement:
    """Record of where the probos went when a request was decided."""

    kind: SettlementKind
    refunds: dict
    rewards_minted: dict
    forfeits_distributed: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "refunds": dict(self.refunds),
            "rewards_minted": dict(self.rewards_minted),
            "forfeits_distributed": dict(self.forfeits_distributed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Settlement":
        return cls(
            kind=SettlementKind(d["kind"]),
            refunds={k: int(v) for k, v in d["refunds"].items()},
            rewards_minted={k: int(v) for k, v in d["rewards_minted"].items()},
            forfeits_distributed={k: int(v) for k, v in d["forfeits_distributed"].items()},
        )


def split_deposit(amount: int, n: int) -> list[int]:
    """Divide amount into n non-negative integer shares summing exactly to
    amount: floor(amount/n) each, remainder one unit apiece to the earliest
    positions (earliest-reporting verifiers)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    base, rem = divmod(amount, n)
    return [base + 1 if i < rem else base for i in range(n)]


class BankState:
    """Mutable account book. All mutations validate preconditions before
    touching state, so a raised error leaves the bank unchanged."""

    def __init__(self):
        self.accounts: dict[str, int] = {}
        self.nodes: dict[str, NodeId] = {}
        self.escrows: dict[str, EscrowContract] = {}
        self.total_minted: int = 0
        self.genesis_supply: int = 0
        self.sealed: bool = False

    # --- accounts ---

    def create_account(self, node: NodeId, initial: int = 0) -> None:
        """Register a node. Nonzero initial balances are genesis allocations
        and are refused once the bank is sealed."""
        if node.id in self.accounts:
            raise DuplicateAccount(node.id)
        if initial < 0:
            raise ValueError("initial balance must be >= 0")
        if self.sealed and initial > 0:
            raise PostGenesisMint(
                f"cannot allocate {initial} probos to {node.id} after genesis")
        self.accounts[node.id] = initial
        self.nodes[node.id] = node
        self.genesis_supply += initial

    def seal(self) -> None:
        """Close the genesis allocation window."""
        self.sealed = True

    def balance(self, node) -> int:
        key = _key(node)
        if key not in self.accounts:
            raise UnknownAccount(key)
        return self.accounts[key]

    def node(self, node_id: str) -> NodeId:
        if node_id not in self.nodes:
            raise UnknownAccount(node_id)
        return self.nodes[node_id]

    def transfer(self, src, dst, amount: int) -> None:
        src_key, dst_key = _key(src), _key(dst)
        if src_key not in self.accounts:
            raise UnknownAccount(src_key)
        if dst_key not in self.accounts:
            raise UnknownAccount(dst_key)
        if amount < 1:
            raise ValueError("transfer amount must be >= 1")
        if self.accounts[src_key] < amount:
            raise InsufficientFunds(f"{src_key} has {self.accounts[src_key]}, needs {amount}")
        self.accounts[src_key] -= amount
        self.accounts[dst_key] += amount

    # --- escrow ---

    def open_escrow(self, proponent: NodeId, deposit: int, request_id: str,
                    params: EconomicParams, timestamp: int = 0) -> EscrowContract:
        key = _key(proponent)
        if key not in self.accounts:
            raise UnknownAccount(key)
        if deposit < params.min_deposit:
            raise DepositBelowMinimum(f"deposit {deposit} below minimum {params.min_deposit}")
        if request_id in self.escrows:
            raise DuplicateRequest(request_id)
        if self.accounts[key] < deposit:
            raise InsufficientFunds(f"{key} has {self.accounts[key]}, needs {deposit}")
        self.accounts[key] -= deposit
        contract = EscrowContract(
            request_id=request_id,
            proponent=self.nodes[key],
            deposit=deposit,
            opened_at=timestamp,
        )
        self.escrows[request_id] = contract
        return contract

    def settle(self, request_id: str, decision, verifiers: list[NodeId],
               params: EconomicParams, timestamp: int = 0) -> Settlement:
        """Close an open escrow.

        decision may be any string-valued enum (or plain string) equal to
        "accepted", "rejected", or "expired". Accepted refunds the deposit
        and mints verifier_reward per verifier; rejected splits the deposit
        among verifiers in arrival order; expired refunds with no rewards.
        """
        if request_id not in self.escrows:
            raise UnknownEscrow(request_id)
        contract = self.escrows[request_id]
        if contract.state is not EscrowState.OPEN:
            raise AlreadySettled(f"{request_id} is {contract.state.value}")
        try:
            kind = SettlementKind(decision)
        except ValueError:
            raise ProboError(f"cannot settle with decision {decision!r}") from None
        if kind in (SettlementKind.ACCEPTED, SettlementKind.REJECTED) and not verifiers:
            raise EmptyVerifierSet(request_id)

        prop_key = contract.proponent.id
        refunds: dict[str, int] = {}
        rewards: dict[str, int] = {}
        forfeits: dict[str, int] = {}

        if kind is SettlementKind.ACCEPTED:
            refunds[prop_key] = contract.deposit
            self.accounts[prop_key] += contract.deposit
            for v in verifiers:
                reward = params.verifier_reward
                rewards[_key(v)] = rewards.get(_key(v), 0) + reward
                self.accounts[_key(v)] += reward
                self.total_minted += reward
        elif kind is SettlementKind.REJECTED:
            shares = split_deposit(contract.deposit, len(verifiers))
            for v, share in zip(verifiers, shares):
                forfeits[_key(v)] = forfeits.get(_key(v), 0) + share
                self.accounts[_key(v)] += share
        else:
            refunds[prop_key] = contract.deposit
            self.accounts[prop_key] += contract.deposit

        contract.state = _STATE_FOR_KIND[kind]
        contract.settled_at = timestamp
        return Settlement(kind=kind, refunds=refunds, rewards_minted=rewards,
                          forfeits_distributed=forfeits)

    # --- supply ---

    def total_supply(self) -> int:
        return self.genesis_supply + self.total_minted

    def open_deposits(self) -> int:
        return sum(c.deposit for c in self.escrows.values()
                   if c.state is EscrowState.OPEN)

    def check_conservation(self) -> bool:
        return sum(self.accounts.values()) + self.open_deposits() == self.total_supply()

    def snapshot(self) -> "BankState":
        return copy.deepcopy(self)

    # --- persistence ---

    def to_dict(self) -> dict:
        return {
            "accounts": dict(self.accounts),
            "nodes": {k: v.to_dict() for k, v in self.nodes.items()},
            "escrows": {k: v.to_dict() for k, v in self.escrows.items()},
            "total_minted": self.total_minted,
            "genesis_supply": self.genesis_supply,
            "sealed": self.sealed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BankState":
        bank = cls()
        bank.accounts = {k: int(v) for k, v in d["accounts"].items()}
        bank.nodes = {k: NodeId.from_dict(v) for k, v in d["nodes"].items()}
        bank.escrows = {k: EscrowContract.from_dict(v) for k, v in d["escrows"].items()}
        bank.total_minted = int(d["total_minted"])
        bank.genesis_supply = int(d["genesis_supply"])
        bank.sealed = bool(d["sealed"])
        return bank
