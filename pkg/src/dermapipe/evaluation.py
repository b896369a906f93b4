"""Response scoring: textual similarity, token-matching precision/recall, NLI,
expert Likert reviews, and the capability report aggregation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import prompts
from .providers import ProviderSet

__all__ = [
    "EvalCase",
    "ScoreRecord",
    "ExpertReview",
    "Weights",
    "CapabilityReport",
    "cosine_similarity",
    "textual_similarity",
    "bert_score",
    "nli_assess",
    "weighted_row",
    "score_case",
    "aggregate",
    "ingest_expert_reviews",
    "load_corpus",
    "render_capability_table",
]

NLI_LABELS = ("contradiction", "neutral", "entailment")


@dataclass(frozen=True)
class EvalCase:
    id: str
    question: str
    premise: str
    hypothesis: str
    premise_entity: str = ""
    hypothesis_entity: str = ""
    image: str | None = None
    extraction_failed: bool = False

    def __post_init__(self):
        if not self.premise.strip() or not self.hypothesis.strip():
            raise ValueError("premise and hypothesis must be non-empty")


@dataclass(frozen=True)
class ScoreRecord:
    case_id: str
    ts_context: float
    ts_entity: float
    bert: tuple[float, float, float]  # precision, recall, f1
    nli_context: tuple[str, float]  # label, probability
    nli_entity: tuple[str, float]


@dataclass(frozen=True)
class ExpertReview:
    case_id: str
    symptom_image_score: int
    diagnostic_reasoning_score: int
    reviewer: str

    def __post_init__(self):
        for score in (self.symptom_image_score, self.diagnostic_reasoning_score):
            if not isinstance(score, int) or not 1 <= score <= 5:
                raise ValueError(f"Likert score out of range: {score}")


@dataclass(frozen=True)
class Weights:
    context: float = 1.5
    entities: float = 1.0

    def __post_init__(self):
        if self.context <= 0 or self.entities <= 0:
            raise ValueError("weights must be positive")


@dataclass(frozen=True)
class CapabilityReport:
    case_count: int
    ts_context_mean: float
    ts_entity_mean: float
    ts_weighted: float
    ts_weighted_raw: float
    nli_fractions: dict[str, dict[str, float]]  # label -> {context, entities}
    nli_counts: dict[str, dict[str, int]]
    nli_weighted: dict[str, float]
    nli_weighted_raw: dict[str, float]
    bert_means: tuple[float, float, float]
    expert_context_norm: float
    expert_entity_norm: float
    expert_mean: float
    capability: float
    records: tuple[ScoreRecord, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_count": self.case_count,
            "textual_similarity": {
                "context": self.ts_context_mean,
                "entities": self.ts_entity_mean,
                "weighted": self.ts_weighted,
                "weighted_raw": self.ts_weighted_raw,
            },
            "nli": {
                label: {
                    "context_fraction": self.nli_fractions[label]["context"],
                    "entities_fraction": self.nli_fractions[label]["entities"],
                    "context_count": self.nli_counts[label]["context"],
                    "entities_count": self.nli_counts[label]["entities"],
                    "weighted": self.nli_weighted[label],
                    "weighted_raw": self.nli_weighted_raw[label],
                }
                for label in NLI_LABELS
            },
            "bert_score": {
                "precision": self.bert_means[0],
                "recall": self.bert_means[1],
                "f1": self.bert_means[2],
            },
            "expert_review": {
                "context": self.expert_context_norm,
                "entities": self.expert_entity_norm,
                "mean": self.expert_mean,
            },
            "capability": self.capability,
            "bert_per_case": {
                "precision": [r.bert[0] for r in self.records],
                "recall": [r.bert[1] for r in self.records],
                "f1": [r.bert[2] for r in self.records],
            },
        }


def cosine_similarity(a: Iterable[float], b: Iterable[float]) -> float:
    """A.B / (|A| |B|); zero vectors and dimension mismatches are errors."""
    va = np.asarray(list(a), dtype=np.float64)
    vb = np.asarray(list(b), dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError("vector dimensions differ")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero vector")
    return float(va @ vb) / (na * nb)


def textual_similarity(premise: str, hypothesis: str, providers: ProviderSet) -> float:
    """Cosine similarity of the sentence embeddings of the two texts."""
    if not premise.strip() or not hypothesis.strip():
        raise ValueError("premise and hypothesis must be non-empty")
    vectors = providers.embed([premise, hypothesis])
    return cosine_similarity(vectors[0], vectors[1])


def bert_score(
    premise_tokens: list[tuple[str, list[float]]],
    hypothesis_tokens: list[tuple[str, list[float]]],
) -> tuple[float, float, float]:
    """Greedy token matching: precision over hypothesis tokens, recall over
    premise tokens, F1 the harmonic mean. No IDF weighting, no rescaling."""
    if not premise_tokens or not hypothesis_tokens:
        raise ValueError("empty token list")
    pv = np.asarray([vec for _, vec in premise_tokens], dtype=np.float64)
    hv = np.asarray([vec for _, vec in hypothesis_tokens], dtype=np.float64)
    pn = np.linalg.norm(pv, axis=1, keepdims=True)
    hn = np.linalg.norm(hv, axis=1, keepdims=True)
    if (pn == 0).any() or (hn == 0).any():
        raise ValueError("zero token vector")
    sim = (hv / hn) @ (pv / pn).T  # hypothesis x premise
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def nli_assess(premise: str, hypothesis: str, providers: ProviderSet) -> tuple[str, float]:
    """Provider NLI probabilities reduced to (argmax label, its probability)."""
    if not premise.strip() or not hypothesis.strip():
        raise ValueError("premise and hypothesis must be non-empty")
    probs = providers.nli(premise, hypothesis)
    label = max(NLI_LABELS, key=lambda k: probs[k])
    return label, probs[label]


def weighted_row(context_value: float, entity_value: float, weights: Weights = Weights()) -> float:
    """(w1*context + w2*entities) / 2. The divisor is 2, not w1+w2, so values can
    exceed 1; aggregation clamps the reported figure and keeps the raw one."""
    return (weights.context * context_value + weights.entities * entity_value) / 2.0


def score_case(case: EvalCase, providers: ProviderSet, entity_template: str | None = None) -> ScoreRecord:
    """Full per-case scoring: similarity and NLI on both tracks plus token-level
    matching scores. Entity strings are compared bare unless a template like
    'The diagnosis is {entity}.' is supplied."""
    premise_entity = case.premise_entity or _first_entity(case.premise, premise_mode=True)
    hypothesis_entity = case.hypothesis_entity or _first_entity(case.hypothesis)
    if entity_template:
        premise_entity_text = entity_template.format(entity=premise_entity)
        hypothesis_entity_text = entity_template.format(entity=hypothesis_entity)
    else:
        premise_entity_text, hypothesis_entity_text = premise_entity, hypothesis_entity

    ts_context = textual_similarity(case.premise, case.hypothesis, providers)
    ts_entity = textual_similarity(premise_entity_text, hypothesis_entity_text, providers)
    token_docs = providers.embed_tokens([case.premise, case.hypothesis])
    bert = bert_score(token_docs[0], token_docs[1])
    nli_context = nli_assess(case.premise, case.hypothesis, providers)
    nli_entity = nli_assess(premise_entity_text, hypothesis_entity_text, providers)
    return ScoreRecord(
        case_id=case.id,
        ts_context=ts_context,
        ts_entity=ts_entity,
        bert=bert,
        nli_context=nli_context,
        nli_entity=nli_entity,
    )


def _first_entity(text: str, premise_mode: bool = False) -> str:
    entities = prompts.extract_entities(text, premise_mode=premise_mode).entities
    return entities[0] if entities else ""


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def aggregate(
    records: list[ScoreRecord],
    reviews: list[ExpertReview],
    weights: Weights = Weights(),
) -> CapabilityReport:
    """Fold per-case scores and expert reviews into the capability report.

    Capability is the mean of the clamped weighted textual-similarity row, the
    clamped weighted entailment row, and the expert mean; token-matching means
    are reported but excluded from capability.
    """
    if not records:
        raise ValueError("no score records")
    n = len(records)
    ts_context_mean = sum(r.ts_context for r in records) / n
    ts_entity_mean = sum(r.ts_entity for r in records) / n
    ts_raw = weighted_row(ts_context_mean, ts_entity_mean, weights)

    counts = {label: {"context": 0, "entities": 0} for label in NLI_LABELS}
    for r in records:
        counts[r.nli_context[0]]["context"] += 1
        counts[r.nli_entity[0]]["entities"] += 1
    fractions = {
        label: {
            "context": Fraction(counts[label]["context"], n),
            "entities": Fraction(counts[label]["entities"], n),
        }
        for label in NLI_LABELS
    }
    nli_raw = {
        label: weighted_row(float(fractions[label]["context"]), float(fractions[label]["entities"]), weights)
        for label in NLI_LABELS
    }

    bert_means = tuple(float(np.mean([r.bert[i] for r in records])) for i in range(3))

    if reviews:
        expert_context = sum(r.symptom_image_score for r in reviews) / len(reviews) / 5.0
        expert_entity = sum(r.diagnostic_reasoning_score for r in reviews) / len(reviews) / 5.0
    else:
        expert_context = expert_entity = 0.0
    expert_mean = (expert_context + expert_entity) / 2.0

    capability = (_clamp(ts_raw) + _clamp(nli_raw["entailment"]) + _clamp(expert_mean)) / 3.0

    return CapabilityReport(
        case_count=n,
        ts_context_mean=ts_context_mean,
        ts_entity_mean=ts_entity_mean,
        ts_weighted=_clamp(ts_raw),
        ts_weighted_raw=ts_raw,
        nli_fractions={
            label: {track: float(fractions[label][track]) for track in ("context", "entities")}
            for label in NLI_LABELS
        },
        nli_counts=counts,
        nli_weighted={label: _clamp(v) for label, v in nli_raw.items()},
        nli_weighted_raw=nli_raw,
        bert_means=bert_means,  # type: ignore[arg-type]
        expert_context_norm=expert_context,
        expert_entity_norm=expert_entity,
        expert_mean=_clamp(expert_mean),
        capability=capability,
        records=tuple(records),
    )


def ingest_expert_reviews(path: str | Path) -> tuple[list[ExpertReview], list[str]]:
    """Delimited review file: ``case_id, score1, score2, reviewer`` per line.

    Malformed rows are collected as diagnostics, not fatal.
    """
    reviews: list[ExpertReview] = []
    errors: list[str] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            errors.append(f"line {lineno}: expected 4 fields, got {len(parts)}")
            continue
        case_id, s1, s2, reviewer = parts
        try:
            reviews.append(ExpertReview(case_id, int(s1), int(s2), reviewer))
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")
    return reviews, errors


def load_corpus(directory: str | Path) -> list[EvalCase]:
    """One JSON document per case; files are read in sorted filename order."""
    cases = []
    for path in sorted(Path(directory).glob("*.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        cases.append(
            EvalCase(
                id=doc.get("id", path.stem),
                question=doc.get("question", ""),
                premise=doc["premise"],
                hypothesis=doc["hypothesis"],
                premise_entity=doc.get("premise_entity", ""),
                hypothesis_entity=doc.get("hypothesis_entity", ""),
                image=doc.get("image"),
                extraction_failed=doc.get("extraction_failed", False),
            )
        )
    if not cases:
        raise ValueError(f"no case documents in {directory}")
    return cases


def render_capability_table(report: CapabilityReport) -> str:
    """Human-readable table with one row per evaluation track."""
    f = report.nli_fractions
    c = report.nli_counts
    lines = [
        f"{'':22s}{'Context':>12s}{'Entities':>12s}{'Average':>10s}",
        "=" * 56,
        f"{'Textual Similarity':22s}{report.ts_context_mean:>12.2f}{report.ts_entity_mean:>12.2f}{report.ts_weighted:>10.2f}",
    ]
    for label, tag in (("neutral", "NLI_N"), ("contradiction", "NLI_C"), ("entailment", "NLI_E")):
        lines.append(
            f"{tag:22s}"
            f"{'(%d) %.3g' % (c[label]['context'], f[label]['context']):>12s}"
            f"{'(%d) %.3g' % (c[label]['entities'], f[label]['entities']):>12s}"
            f"{report.nli_weighted[label]:>10.2f}"
        )
    lines += [
        f"{'Expert Review':22s}{report.expert_context_norm:>12.3f}{report.expert_entity_norm:>12.3f}{report.expert_mean:>10.2f}",
        "=" * 56,
        f"{'Capability':22s}{report.capability:>34.2f}",
        "=" * 56,
        f"{'Bert Score':22s}{'Precision':>12s}{'Recall':>12s}{'F1':>10s}",
        f"{'':22s}{report.bert_means[0]:>12.2f}{report.bert_means[1]:>12.2f}{report.bert_means[2]:>10.2f}",
    ]
    return "\n".join(lines)
