"""Study descriptors, standardized output tables, and output-hash commitments.

A descriptor names everything a verifier needs to re-run the work: immutable
data artifacts with content hashes, versioned preprocessing and analysis
software, the analysis protocol, the declared reproducibility tolerances,
and the expected time to validate. Descriptors are modeled, never executed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .canonical import canonical_digest, is_digest
from .errors import InvalidPartition
from .tokenomics import NodeId

SECTION_ORDER = ("data_metadata", "preprocessing", "analysis")

# label prefix for artifacts injected by decompose_pipeline to chain stages
STAGE_OUTPUT_LABEL = "stage-output:"


@dataclass(frozen=True)
class ArtifactRef:
    """Persistent locator for a raw or derived resource plus the hash that
    pins its content and the label tying it to its subject."""

    uri: str
    content_hash: str
    label: str

    def to_dict(self) -> dict:
        return {"uri": self.uri, "content_hash": self.content_hash, "label": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "ArtifactRef":
        return cls(uri=d.get("uri", ""), content_hash=d.get("content_hash", ""),
                   label=d.get("label", ""))


@dataclass(frozen=True)
class SoftwareRef:
    name: str
    version: str
    parameters: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "version": self.version, "parameters": self.parameters}

    @classmethod
    def from_dict(cls, d: dict) -> "SoftwareRef":
        return cls(name=d.get("name", ""), version=d.get("version", ""),
                   parameters=d.get("parameters", ""))


@dataclass(frozen=True)
class ToleranceSpec:
    """Acceptable interval for one reproduced metric, optionally paired with
    a top-k ranked-feature overlap requirement."""

    metric: str
    low: float
    high: float
    list_k: Optional[int] = None
    min_overlap: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"metric": self.metric, "low": self.low, "high": self.high}
        if self.list_k is not None:
            d["list_k"] = self.list_k
        if self.min_overlap is not None:
            d["min_overlap"] = self.min_overlap
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ToleranceSpec":
        return cls(metric=d.get("metric", ""), low=d.get("low", 0.0), high=d.get("high", 0.0),
                   list_k=d.get("list_k"), min_overlap=d.get("min_overlap"))


@dataclass(frozen=True)
class OutputTable:
    """Standardized result summary: named metric values plus a ranked list
    of discriminating features (possibly empty)."""

    metrics: dict
    ranked_features: tuple = ()

    def to_dict(self) -> dict:
        return {"metrics": dict(self.metrics), "ranked_features": list(self.ranked_features)}

    @classmethod
    def from_dict(cls, d: dict) -> "OutputTable":
        return cls(metrics=dict(d.get("metrics", {})),
                   ranked_features=tuple(d.get("ranked_features", ())))


@dataclass(frozen=True)
class DataSection:
    artifacts: tuple = ()
    notes: str = ""

    def to_dict(self) -> dict:
        return {"artifacts": [a.to_dict() for a in self.artifacts], "notes": self.notes}

    @classmethod
    def from_dict(cls, d: dict) -> "DataSection":
        return cls(artifacts=tuple(ArtifactRef.from_dict(a) for a in d.get("artifacts", ())),
                   notes=d.get("notes", ""))


@dataclass(frozen=True)
class PreprocessingSection:
    artifacts: tuple = ()
    software: tuple = ()

    def to_dict(self) -> dict:
        return {"artifacts": [a.to_dict() for a in self.artifacts],
                "software": [s.to_dict() for s in self.software]}

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessingSection":
        return cls(artifacts=tuple(ArtifactRef.from_dict(a) for a in d.get("artifacts", ())),
                   software=tuple(SoftwareRef.from_dict(s) for s in d.get("software", ())))


@dataclass(frozen=True)
class AnalysisSection:
    software: tuple = ()
    protocol: str = ""
    hardware: str = ""

    def to_dict(self) -> dict:
        return {"software": [s.to_dict() for s in self.software],
                "protocol": self.protocol, "hardware": self.hardware}

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisSection":
        return cls(software=tuple(SoftwareRef.from_dict(s) for s in d.get("software", ())),
                   protocol=d.get("protocol", ""), hardware=d.get("hardware", ""))


@dataclass(frozen=True)
class StudyDescriptor:
    """Complete submission envelope. deadline is stamped at submission time
    (submission timestamp + network horizon) and is absent in files."""

    request_id: str
    proponent: NodeId
    title: str
    topic: str
    data_metadata: DataSection = field(default_factory=DataSection)
    preprocessing: PreprocessingSection = field(default_factory=PreprocessingSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    tolerances: tuple = ()
    etv_hours: int = 1
    deadline: Optional[int] = None

    def to_dict(self) -> dict:
        d = {
            "request_id": self.request_id,
            "proponent": self.proponent.to_dict(),
            "title": self.title,
            "topic": self.topic,
            "data_metadata": self.data_metadata.to_dict(),
            "preprocessing": self.preprocessing.to_dict(),
            "analysis": self.analysis.to_dict(),
            "tolerances": [t.to_dict() for t in self.tolerances],
            "etv_hours": self.etv_hours,
        }
        if self.deadline is not None:
            d["deadline"] = self.deadline
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudyDescriptor":
        return cls(
            request_id=d.get("request_id", ""),
            proponent=NodeId.from_dict(d.get("proponent", {"id": ""})),
            title=d.get("title", ""),
            topic=d.get("topic", ""),
            data_metadata=DataSection.from_dict(d.get("data_metadata", {})),
            preprocessing=PreprocessingSection.from_dict(d.get("preprocessing", {})),
            analysis=AnalysisSection.from_dict(d.get("analysis", {})),
            tolerances=tuple(ToleranceSpec.from_dict(t) for t in d.get("tolerances", ())),
            etv_hours=int(d.get("etv_hours", 0)),
            deadline=d.get("deadline"),
        )

    def with_deadline(self, deadline: int) -> "StudyDescriptor":
        return replace(self, deadline=deadline)


@dataclass(frozen=True)
class Commitment:
    """Pre-registered hash binding the proponent to their exact outputs."""

    request_id: str
    output_hash: str

    @classmethod
    def for_table(cls, request_id: str, table: OutputTable) -> "Commitment":
        return cls(request_id=request_id, output_hash=commit_outputs(table))

    def to_dict(self) -> dict:
        return {"request_id": self.request_id, "output_hash": self.output_hash}


def commit_outputs(table: OutputTable) -> str:
    """Hash that uniquely identifies an output table: SHA-256 over its
    canonical bytes. Any change to a metric value or to feature rank order
    changes the digest."""
    return canonical_digest(table.to_dict())


def _check_artifacts(section_name: str, artifacts, violations: list):
    for i, a in enumerate(artifacts):
        where = f"{section_name}[{i}]"
        if not a.uri:
            violations.append(f"{where}: missing uri")
        if not is_digest(a.content_hash):
            violations.append(f"{where}: missing content hash")
        if not a.label:
            violations.append(f"{where}: missing label")


def _check_software(section_name: str, software, violations: list):
    for i, s in enumerate(software):
        where = f"{section_name}.software[{i}]"
        if not s.name:
            violations.append(f"{where}: missing name")
        if not s.version:
            violations.append(f"{where}: missing version")


def validate_descriptor(d: StudyDescriptor, horizon: Optional[int] = None) -> list:
    """Check a descriptor against the submission rules and return the
    complete list of violations (empty list means OK). Total: never raises.

    horizon, when given, is the network time horizon in hours; etv_hours
    must not exceed it.
    """
    violations: list[str] = []
    if not d.request_id:
        violations.append("request_id: empty")
    if not d.proponent.id:
        violations.append("proponent: missing id")
    if not d.topic:
        violations.append("topic: empty")
    if not d.data_metadata.artifacts:
        violations.append("data_metadata: section is empty")
    _check_artifacts("data_metadata", d.data_metadata.artifacts, violations)
    _check_artifacts("preprocessing", d.preprocessing.artifacts, violations)
    _check_software("preprocessing", d.preprocessing.software, violations)
    _check_software("analysis", d.analysis.software, violations)
    if not d.tolerances:
        violations.append("tolerances: list is empty")
    for i, t in enumerate(d.tolerances):
        where = f"tolerances[{i}]"
        if not t.metric:
            violations.append(f"{where}: missing metric name")
        if t.low > t.high:
            violations.append(f"{where}: low exceeds high")
        if t.list_k is not None:
            if t.list_k < 1:
                violations.append(f"{where}: list_k must be positive")
            if t.min_overlap is None:
                violations.append(f"{where}: list_k without min_overlap")
            elif not 0.0 <= t.min_overlap <= 1.0:
                violations.append(f"{where}: min_overlap outside [0, 1]")
    if d.etv_hours < 1:
        violations.append("etv_hours: must be positive")
    elif horizon is not None and d.etv_hours > horizon:
        violations.append("etv exceeds network time horizon")
    return violations


def _stage_sections(boundaries) -> list:
    """Translate boundary labels into per-stage section-label lists.

    Each boundary names the last section of its stage; stages must advance
    through SECTION_ORDER and the final boundary must close the pipeline.
    """
    for b in boundaries:
        if b not in SECTION_ORDER:
            raise InvalidPartition(f"unknown section: {b}")
    if not boundaries:
        raise InvalidPartition("no stage boundaries")
    indices = [SECTION_ORDER.index(b) for b in boundaries]
    if any(j <= i for i, j in zip(indices, indices[1:])):
        raise InvalidPartition("boundaries overlap or run backwards")
    if indices[-1] != len(SECTION_ORDER) - 1:
        raise InvalidPartition("boundaries do not cover the analysis section")
    stages = []
    start = 0
    for end in indices:
        stages.append(SECTION_ORDER[start:end + 1])
        start = end + 1
    return stages


def _stage_link_artifact(prev_request_id: str) -> ArtifactRef:
    # the previous stage's outputs do not exist yet, so the hash pins the
    # reference record itself; the real commitment lands on chain with stage i
    return ArtifactRef(
        uri=f"probo://requests/{prev_request_id}/outputs",
        content_hash=canonical_digest({"stage_output_of": prev_request_id}),
        label=f"{STAGE_OUTPUT_LABEL}{prev_request_id}",
    )


def decompose_pipeline(d: StudyDescriptor, stage_boundaries) -> list:
    """Split a multi-phase study into separately verifiable stage
    descriptors, each broadcast on its own.

    stage_boundaries lists the section that ends each stage, in pipeline
    order. Stage i+1's data section gains an artifact referencing stage i's
    committed outputs; request_ids get the stage index as a suffix.
    """
    stages = _stage_sections(stage_boundaries)
    empty = {
        "data_metadata": DataSection(),
        "preprocessing": PreprocessingSection(),
        "analysis": AnalysisSection(),
    }
    out = []
    for i, labels in enumerate(stages):
        sections = dict(empty)
        for label in labels:
            sections[label] = getattr(d, label)
        request_id = f"{d.request_id}.{i}" if len(stages) > 1 else f"{d.request_id}.0"
        if i > 0:
            prev_id = out[i - 1].request_id
            link = _stage_link_artifact(prev_id)
            sections["data_metadata"] = DataSection(
                artifacts=(link,) + tuple(sections["data_metadata"].artifacts),
                notes=sections["data_metadata"].notes,
            )
        out.append(StudyDescriptor(
            request_id=request_id,
            proponent=d.proponent,
            title=d.title,
            topic=d.topic,
            data_metadata=sections["data_metadata"],
            preprocessing=sections["preprocessing"],
            analysis=sections["analysis"],
            tolerances=d.tolerances,
            etv_hours=d.etv_hours,
            deadline=d.deadline,
        ))
    return out
