"""Rules-of-conduct prompt templates, structured-response parsing, workflow path
classification, and diagnosis entity extraction."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

__all__ = [
    "LESION_DIAGNOSES",
    "NOT_APPLICABLE",
    "AbcdeApproximation",
    "ParsedAssessment",
    "PathDecision",
    "EntityList",
    "UnstructuredResponseError",
    "build_lesion_prompt",
    "build_condition_prompt",
    "build_xai_prompt",
    "parse_assessment",
    "classify_path",
    "extract_entities",
    "lesion_list_violations",
    "load_lexicon",
    "default_lexicon",
]

# Closed answer list for the lesion rules; order matters for prompt rendering.
LESION_DIAGNOSES = [
    "nevus",
    "melanoma",
    "basal cell carcinoma",
    "actinic keratosis",
    "benign keratosis",
    "dermatofibroma",
    "vascular lesion",
    "squamous cell carcinoma",
    "Lentigo Maligna",
    "Blue Nevus",
    "Sebaceous Hyperplasia",
    "Keratoacanthoma",
    "Atypical (Dysplastic) Nevus",
    "Solar Lentigo",
    "Pigmented Basal Cell Carcinoma",
    "Cutaneous Horn",
    "Molluscum Contagiosum",
    "Cyst",
    "Lichen Planus",
    "Psoriasis",
]


class UnstructuredResponseError(ValueError):
    """Response contains no recognizable section or diagnosis line."""


class _NotApplicable:
    def __repr__(self):
        return "NOT_APPLICABLE"


NOT_APPLICABLE = _NotApplicable()


@dataclass(frozen=True)
class AbcdeApproximation:
    asymmetry: str = ""
    border: str = ""
    color: str = ""
    diameter: str = ""
    evolution: str = ""


@dataclass(frozen=True)
class ParsedAssessment:
    visual_description: str = ""
    feature_presence: list[str] = field(default_factory=list)
    feature_localization: str = ""
    abcde: AbcdeApproximation | _NotApplicable | None = None
    diagnoses: list[str] = field(default_factory=list)
    final_diagnosis: str = ""
    non_compliance: list[str] = field(default_factory=list)
    raw: str = ""


@dataclass(frozen=True)
class PathDecision:
    path: str  # "lesion" | "condition" | "end"
    reason: str


@dataclass(frozen=True)
class EntityList:
    entities: list[str]


def _resource(name: str) -> str:
    return (resources.files("dermapipe") / "resources" / name).read_text(encoding="utf-8")


def build_lesion_prompt() -> str:
    return _resource("lesion_rules.txt")


def build_condition_prompt() -> str:
    return _resource("condition_rules.txt")


def build_xai_prompt(initial: ParsedAssessment, report) -> str:
    """Combine the initial assessment and the technical measurements into the
    cross-check prompt. ``report`` is a features.TechnicalReport."""
    if report is None or not getattr(report, "text", ""):
        raise ValueError("technical report is required")
    rules = _resource("xai_rules.txt")
    if initial.diagnoses:
        candidates = "Candidate diagnoses from the initial assessment: " + "; ".join(initial.diagnoses)
    else:
        candidates = (
            "The initial assessment named no candidate diagnoses; "
            "propose a de-novo differential from the findings below."
        )
    return "\n\n".join(
        [
            rules,
            "=== Initial assessment ===",
            initial.raw or initial.visual_description,
            candidates,
            "=== Technical measurements ===",
            report.text,
        ]
    )


_HEADING = re.compile(
    r"^\s*(?:\d+[.)]\s*)?[*_]*"
    r"(?P<name>visual description|feature presence|feature localiza?tion|feature localisation|"
    r"abcde approximation|diagnosis selection|answer selection|"
    r"clinical features supporting(?: the)? diagnosis)"
    r"[*_]*\s*:?\s*[*_]*\s*(?P<rest>.*)$",
    re.IGNORECASE,
)
_DIAGNOSIS_LINE = re.compile(r"^\s*(?<!final )diagnosis\s*[-–—:]\s*(?P<value>.+)$", re.IGNORECASE | re.MULTILINE)
_FINAL_DIAGNOSIS = re.compile(r"^\s*[*_]*final diagnosis[*_]*\s*[-–—:]\s*(?P<value>.+)$", re.IGNORECASE | re.MULTILINE)
_NUMBERED_ITEM = re.compile(r"^\s*\d+[.)]\s+(?P<value>.+)$", re.MULTILINE)
_BULLET_ITEM = re.compile(r"^\s*[-*•]\s+(?P<value>.+)$", re.MULTILINE)


def _split_sections(text: str) -> dict[str, str]:
    sections: dict[str, str] = {}
    current: str | None = None
    buf: list[str] = []
    for line in text.splitlines():
        m = _HEADING.match(line)
        if m:
            if current is not None:
                sections[current] = "\n".join(buf).strip()
            current = m.group("name").lower().replace("localisation", "localization")
            buf = [m.group("rest")] if m.group("rest") else []
        elif current is not None:
            buf.append(line)
    if current is not None:
        sections[current] = "\n".join(buf).strip()
    return sections


def _clean_diagnosis(item: str) -> str:
    # Strip trailing explanation after an em/en dash separator and end punctuation.
    item = re.split(r"\s+[-–—]\s+", item, maxsplit=1)[0]
    return item.strip().strip(".").strip()


def _parse_abcde(section: str) -> AbcdeApproximation | _NotApplicable:
    if re.match(r"^\s*n/?a\b", section, re.IGNORECASE):
        return NOT_APPLICABLE
    fields = {"asymmetry": "", "border": "", "color": "", "diameter": "", "evolution": ""}
    for m in _BULLET_ITEM.finditer(section):
        entry = m.group("value")
        kv = re.match(r"\s*(\w+)\s*:\s*(.*)$", entry)
        if kv and kv.group(1).lower() in fields:
            fields[kv.group(1).lower()] = kv.group(2).strip()
    return AbcdeApproximation(**fields)


def parse_assessment(response: str) -> ParsedAssessment:
    """Heading-based extraction of a model response; tolerant to numbering, case
    and bold markers. Unmatched sections are left empty; a response with no
    recognizable structure at all raises :class:`UnstructuredResponseError`."""
    if not response.strip():
        raise UnstructuredResponseError("empty response")
    sections = _split_sections(response)
    diag_line = _DIAGNOSIS_LINE.search(response)
    final = _FINAL_DIAGNOSIS.search(response)
    if not sections and not diag_line and not final:
        raise UnstructuredResponseError("unstructured response")

    non_compliance: list[str] = []
    diagnoses: list[str] = []
    diag_section = sections.get("diagnosis selection") or sections.get("answer selection")
    if diag_section:
        items = [_clean_diagnosis(m.group("value")) for m in _NUMBERED_ITEM.finditer(diag_section)]
        if not items:
            items = [_clean_diagnosis(m.group("value")) for m in _BULLET_ITEM.finditer(diag_section)]
        if not items:
            # Single unlisted value after the heading, minus any lead-in prose.
            tail = diag_section.splitlines()[-1].strip()
            if tail and not tail.endswith(":"):
                items = [_clean_diagnosis(tail)]
        diagnoses = [i for i in items if i]
    if not diagnoses and diag_line:
        diagnoses = [_clean_diagnosis(diag_line.group("value"))]
    if not diagnoses:
        # Free-text differential: the first numbered list outside any known section.
        body = response
        for content in sections.values():
            if content:
                body = body.replace(content, "")
        items = [_clean_diagnosis(m.group("value")) for m in _NUMBERED_ITEM.finditer(body)]
        diagnoses = [i for i in items if i and len(i) <= 80]
    if len(diagnoses) > 3:
        non_compliance.append(f"{len(diagnoses)} diagnoses returned; limit is 3")
        diagnoses = diagnoses[:3]

    final_diagnosis = _clean_diagnosis(final.group("value")) if final else ""

    abcde = None
    if "abcde approximation" in sections:
        abcde = _parse_abcde(sections["abcde approximation"])

    feature_presence = [
        m.group("value").strip()
        for m in list(_NUMBERED_ITEM.finditer(sections.get("feature presence", "")))
        + list(_BULLET_ITEM.finditer(sections.get("feature presence", "")))
    ]

    visual = sections.get("visual description", "")
    if not visual:
        # Free-text openers: everything before the first recognized heading.
        first = None
        for line in response.splitlines():
            if _HEADING.match(line):
                break
            first = (first + "\n" + line) if first else line
        if first and not _DIAGNOSIS_LINE.match(first.splitlines()[0]):
            visual = first.strip()

    return ParsedAssessment(
        visual_description=visual,
        feature_presence=feature_presence,
        feature_localization=sections.get("feature localization", ""),
        abcde=abcde,
        diagnoses=diagnoses,
        final_diagnosis=final_diagnosis,
        non_compliance=non_compliance,
        raw=response,
    )


_CONDITION_CUES = (
    "skin condition",
    "skin disorder",
    "skin infection",
    "dermatological condition",
    "rash",
)


def lesion_list_violations(assessment: ParsedAssessment) -> list[str]:
    """Diagnoses outside the closed lesion list (case-folded comparison)."""
    allowed = {d.casefold() for d in LESION_DIAGNOSES}
    return [d for d in assessment.diagnoses if d.casefold() not in allowed]


def classify_path(assessment: ParsedAssessment, lexicon: list[str] | None = None) -> PathDecision:
    """Lesion if the ABCDE record is populated and a diagnosis comes from the
    closed list; Condition if ABCDE is inapplicable but the text asserts a skin
    condition; End otherwise."""
    if isinstance(assessment.abcde, AbcdeApproximation):
        allowed = {d.casefold() for d in LESION_DIAGNOSES}
        hits = [d for d in assessment.diagnoses if d.casefold() in allowed]
        if hits:
            return PathDecision(path="lesion", reason=f"ABCDE populated; closed-list diagnosis: {hits[0]}")
    text = assessment.raw.casefold()
    cue = next((c for c in _CONDITION_CUES if c in text), None)
    if cue is None:
        for entity in lexicon or default_lexicon():
            if re.search(r"\b" + re.escape(entity.casefold()) + r"\b", text):
                cue = entity
                break
    if assessment.abcde in (NOT_APPLICABLE, None) and cue is not None:
        return PathDecision(path="condition", reason=f"no ABCDE record; condition asserted ({cue})")
    return PathDecision(path="end", reason="neither a lesion nor an asserted skin condition")


def load_lexicon(path: str | Path) -> list[str]:
    """Lexicon file: UTF-8, one entity per line, '#' comments."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.append(line)
    return entries


def default_lexicon() -> list[str]:
    return [
        line.split("#", 1)[0].strip()
        for line in _resource("condition_lexicon.txt").splitlines()
        if line.split("#", 1)[0].strip()
    ]


def _dedupe(entities: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for e in entities:
        e = e.strip()
        if e and e.casefold() not in seen:
            seen.add(e.casefold())
            out.append(e)
    return out


def extract_entities(text: str, premise_mode: bool = False, lexicon: list[str] | None = None) -> EntityList:
    """Diagnosis names from structured sections when present, else dictionary
    matches against the closed lesion list plus the condition lexicon.

    Dictionary matches are returned in canonical lexicon casing, ordered by first
    occurrence; parenthetical qualifiers in structured sections are preserved.
    In premise mode only the first match (the asserted diagnosis) is kept.
    """
    if not premise_mode:
        try:
            assessment = parse_assessment(text)
        except UnstructuredResponseError:
            assessment = None
        if assessment is not None:
            structured = list(assessment.diagnoses)
            if assessment.final_diagnosis:
                structured.append(assessment.final_diagnosis)
            structured = _dedupe(structured)
            if structured:
                return EntityList(entities=structured)

    vocabulary = LESION_DIAGNOSES + (lexicon if lexicon is not None else default_lexicon())
    hits: list[tuple[int, str]] = []
    folded = text.casefold()
    for term in vocabulary:
        m = re.search(r"\b" + re.escape(term.casefold()) + r"\b", folded)
        if m:
            hits.append((m.start(), term))
    hits.sort()
    entities = _dedupe([term for _, term in hits])
    if premise_mode and entities:
        entities = entities[:1]
    return EntityList(entities=entities)
