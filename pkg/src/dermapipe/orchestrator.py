"""Workflow state machine: initial vision analysis, path classification, and the
lesion / condition / end branches over pluggable model providers."""
from __future__ import annotations

import dataclasses
import json
import re
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from . import features as feat
from . import prompts, segmentation
from .imaging import decode_image
from .providers import ProviderError, ProviderSet
from .segmentation import GrabCutParams, NoLesionError

__all__ = [
    "WorkflowState",
    "Case",
    "Send2LabDecision",
    "IllegalTransitionError",
    "new_case",
    "run_initial_analysis",
    "run_lesion_path",
    "run_condition_followup",
    "run_full",
]


class WorkflowState(str, Enum):
    CREATED = "created"
    INITIAL_ANALYZED = "initial_analyzed"
    LESION_MEASURED = "lesion_measured"
    XAI_COMPLETE = "xai_complete"
    CONDITION_FOLLOWED_UP = "condition_followed_up"
    ENDED = "ended"
    FAILED = "failed"


_LEGAL = {
    WorkflowState.CREATED: {WorkflowState.INITIAL_ANALYZED},
    WorkflowState.INITIAL_ANALYZED: {
        WorkflowState.LESION_MEASURED,
        WorkflowState.CONDITION_FOLLOWED_UP,
        WorkflowState.ENDED,
    },
    WorkflowState.LESION_MEASURED: {WorkflowState.XAI_COMPLETE},
    WorkflowState.XAI_COMPLETE: set(),
    WorkflowState.CONDITION_FOLLOWED_UP: set(),
    WorkflowState.ENDED: set(),
    WorkflowState.FAILED: set(),
}

TERMINAL_STATES = {
    WorkflowState.XAI_COMPLETE,
    WorkflowState.CONDITION_FOLLOWED_UP,
    WorkflowState.ENDED,
    WorkflowState.FAILED,
}


class IllegalTransitionError(RuntimeError):
    def __init__(self, current: WorkflowState, wanted: WorkflowState):
        super().__init__(f"illegal transition {current.value} -> {wanted.value}")
        self.current = current
        self.wanted = wanted


@dataclass(frozen=True)
class Send2LabDecision:
    required: bool
    rationale: str


@dataclass
class Case:
    id: str
    image: bytes  # original upload bytes; decoded on demand
    created_at: float
    state: WorkflowState = WorkflowState.CREATED
    failure_reason: str = ""
    artifacts: dict[str, Any] = field(default_factory=dict)
    audit: list[dict[str, str]] = field(default_factory=list)

    def transition(self, new_state: WorkflowState, note: str = "") -> None:
        if new_state is not WorkflowState.FAILED and new_state not in _LEGAL[self.state]:
            raise IllegalTransitionError(self.state, new_state)
        self.state = new_state
        self.audit.append({"state": new_state.value, "note": note})

    def fail(self, reason: str) -> None:
        self.failure_reason = reason
        self.transition(WorkflowState.FAILED, reason)

    def artifact_bundle(self) -> bytes:
        """Canonical byte serialization of everything the workflow produced."""
        doc = {
            "state": self.state.value,
            "failure_reason": self.failure_reason,
            "artifacts": self.artifacts,
            "audit": self.audit,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "created_at": self.created_at,
            "state": self.state.value,
            "failure_reason": self.failure_reason,
            "artifacts": self.artifacts,
            "audit": self.audit,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any], image: bytes) -> "Case":
        return cls(
            id=doc["id"],
            image=image,
            created_at=doc["created_at"],
            state=WorkflowState(doc["state"]),
            failure_reason=doc.get("failure_reason", ""),
            artifacts=doc.get("artifacts", {}),
            audit=doc.get("audit", []),
        )


def new_case(image: bytes, case_id: str | None = None, clock: Callable[[], float] = time.time) -> Case:
    decode_image(image)  # validate eagerly; raises ImageDecodeError
    return Case(id=case_id or uuid.uuid4().hex, image=image, created_at=clock())


def _assessment_dict(a: prompts.ParsedAssessment) -> dict[str, Any]:
    abcde: Any
    if a.abcde is prompts.NOT_APPLICABLE:
        abcde = "not_applicable"
    elif a.abcde is None:
        abcde = None
    else:
        abcde = dataclasses.asdict(a.abcde)
    return {
        "visual_description": a.visual_description,
        "feature_presence": a.feature_presence,
        "feature_localization": a.feature_localization,
        "abcde": abcde,
        "diagnoses": a.diagnoses,
        "final_diagnosis": a.final_diagnosis,
        "non_compliance": a.non_compliance,
    }


def run_initial_analysis(case: Case, providers: ProviderSet) -> tuple[prompts.ParsedAssessment, prompts.PathDecision]:
    if case.state is not WorkflowState.CREATED:
        raise IllegalTransitionError(case.state, WorkflowState.INITIAL_ANALYZED)
    try:
        response = providers.vision(case.image, prompts.build_lesion_prompt())
    except ProviderError as exc:
        case.fail(f"vision provider: {exc}")
        raise
    try:
        assessment = prompts.parse_assessment(response)
    except prompts.UnstructuredResponseError:
        case.fail("unstructured")
        raise
    decision = prompts.classify_path(assessment)
    case.artifacts["initial_response"] = response
    case.artifacts["initial_assessment"] = _assessment_dict(assessment)
    case.artifacts["path"] = decision.path
    case.artifacts["path_reason"] = decision.reason
    case.artifacts["retry_counts"] = dict(getattr(providers, "retry_counts", {}))
    case.transition(WorkflowState.INITIAL_ANALYZED, f"path={decision.path}")
    if decision.path == "end":
        case.transition(WorkflowState.ENDED, decision.reason)
    return assessment, decision


_LAB_LINE = re.compile(r"^\s*LAB_REFERRAL:\s*(?P<answer>yes|no)\s*[-–—]?\s*(?P<rationale>.*)$",
                       re.IGNORECASE | re.MULTILINE)
_LAB_CUES = re.compile(
    r"[^.]*\b(?:biopsy|laboratory|histolog\w+|histopatholog\w+)\b[^.]*\brequired\b[^.]*\.",
    re.IGNORECASE,
)


def parse_send2lab(xai_text: str) -> Send2LabDecision:
    """Read the machine-readable referral line; fall back to prose cues when the
    model ignored the contract."""
    m = _LAB_LINE.search(xai_text)
    if m:
        required = m.group("answer").lower() == "yes"
        rationale = m.group("rationale").strip()
        if required and not rationale:
            rationale = "referral requested without rationale"
        return Send2LabDecision(required=required, rationale=rationale)
    cue = _LAB_CUES.search(xai_text)
    if cue:
        return Send2LabDecision(required=True, rationale=cue.group(0).strip())
    return Send2LabDecision(required=False, rationale="")


def run_lesion_path(
    case: Case,
    providers: ProviderSet,
    params: GrabCutParams = GrabCutParams(),
    include_plots: bool = False,
) -> tuple[feat.TechnicalReport, str, Send2LabDecision]:
    if case.state is not WorkflowState.INITIAL_ANALYZED or case.artifacts.get("path") != "lesion":
        raise IllegalTransitionError(case.state, WorkflowState.LESION_MEASURED)
    image = decode_image(case.image)
    try:
        mask, contours = segmentation.segment_lesion(image, params)
        contour = segmentation.largest_contour(contours)
        lesion_features = feat.compute_features(image, mask, contour)
    except (NoLesionError, segmentation.DegenerateHistogramError, feat.DegenerateMaskError) as exc:
        case.fail(f"no lesion: {exc}")
        raise NoLesionError("no lesion found") from exc
    plots = feat.render_overlays(image, mask, contour) if include_plots else {}
    report = feat.build_technical_report(lesion_features, plots)
    case.artifacts["features"] = dataclasses.asdict(lesion_features)
    case.artifacts["technical_report"] = report.text
    case.artifacts["contour"] = contour.points.tolist()
    case.transition(WorkflowState.LESION_MEASURED, "features extracted")

    assessment = prompts.parse_assessment(case.artifacts["initial_response"])
    xai_prompt = prompts.build_xai_prompt(assessment, report)
    try:
        xai_text = providers.text(xai_prompt)
    except ProviderError as exc:
        case.fail(f"text provider: {exc}")
        raise
    decision = parse_send2lab(xai_text)
    case.artifacts["xai_report"] = xai_text
    case.artifacts["send2lab"] = {"required": decision.required, "rationale": decision.rationale}
    case.artifacts["retry_counts"] = dict(getattr(providers, "retry_counts", {}))
    case.transition(WorkflowState.XAI_COMPLETE, f"send2lab={decision.required}")
    return report, xai_text, decision


def run_condition_followup(case: Case, providers: ProviderSet) -> prompts.ParsedAssessment:
    if case.state is not WorkflowState.INITIAL_ANALYZED or case.artifacts.get("path") != "condition":
        raise IllegalTransitionError(case.state, WorkflowState.CONDITION_FOLLOWED_UP)
    try:
        response = providers.vision(case.image, prompts.build_condition_prompt())
    except ProviderError as exc:
        case.fail(f"vision provider: {exc}")
        raise
    try:
        assessment = prompts.parse_assessment(response)
    except prompts.UnstructuredResponseError:
        case.fail("unstructured")
        raise
    case.artifacts["followup_response"] = response
    case.artifacts["followup_assessment"] = _assessment_dict(assessment)
    case.artifacts["retry_counts"] = dict(getattr(providers, "retry_counts", {}))
    case.transition(WorkflowState.CONDITION_FOLLOWED_UP, f"final={assessment.final_diagnosis}")
    return assessment


def run_full(
    case: Case,
    providers: ProviderSet,
    params: GrabCutParams = GrabCutParams(),
    include_plots: bool = False,
) -> Case:
    """Drive the case to a terminal state, recording every artifact and transition."""
    _, decision = run_initial_analysis(case, providers)
    if decision.path == "lesion":
        run_lesion_path(case, providers, params, include_plots)
    elif decision.path == "condition":
        run_condition_followup(case, providers)
    return case
