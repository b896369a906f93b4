"""Regenerate the committed fixture set.

Outputs (under fixtures/):
  images/lesion.png, images/condition.png     synthetic inputs for the two demo cases
  providers/                                  digest-keyed canned provider responses
  eval_corpus/case_###.json                   73 premise/hypothesis documents
  expert_reviews.csv                          reviewer scores (means 4.38 / 4.31)
  service_config.yaml                         mock-mode service config

Run from the repository root: python3 scripts/build_fixtures.py
"""
from __future__ import annotations

import base64
import io
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from dermapipe import features as feat
from dermapipe import prompts, segmentation
from dermapipe.imaging import RasterImage, decode_image
from dermapipe.providers import write_fixture

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
PROVIDERS = FIXTURES / "providers"


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def build_images() -> tuple[bytes, bytes]:
    rng = np.random.default_rng(20240401)
    h = w = 512
    yy, xx = np.mgrid[0:h, 0:w]

    # Lesion: dark, slightly lopsided ellipse on light skin-toned background.
    ellipse = ((xx - 260) / 130.0) ** 2 + ((yy - 250) / 85.0) ** 2 <= 1.0
    notch = ((xx - 340) / 45.0) ** 2 + ((yy - 200) / 40.0) ** 2 <= 1.0
    lesion_mask = ellipse & ~notch
    img = np.empty((h, w, 3))
    img[~lesion_mask] = (200, 170, 160)
    img[lesion_mask] = (60, 40, 40)
    img += rng.normal(0, 8, img.shape)
    lesion_png = png_bytes(np.clip(np.round(img), 0, 255).astype(np.uint8))

    # Condition: diffuse reddish patch, no crisp lesion boundary.
    base = np.empty((h, w, 3))
    base[:] = (210, 160, 150)
    blotch = np.exp(-(((xx - 256) / 150.0) ** 2 + ((yy - 256) / 120.0) ** 2))
    base[..., 0] += 30 * blotch
    base[..., 1] -= 40 * blotch
    base[..., 2] -= 30 * blotch
    base += rng.normal(0, 6, base.shape)
    condition_png = png_bytes(np.clip(np.round(base), 0, 255).astype(np.uint8))

    (FIXTURES / "images").mkdir(parents=True, exist_ok=True)
    (FIXTURES / "images" / "lesion.png").write_bytes(lesion_png)
    (FIXTURES / "images" / "condition.png").write_bytes(condition_png)
    return lesion_png, condition_png


def build_workflow_fixtures(lesion_png: bytes, condition_png: bytes) -> None:
    responses = FIXTURES / "responses"
    lesion_initial = (responses / "lesion_case_initial.txt").read_text()
    lesion_xai = (responses / "lesion_case_xai.txt").read_text()
    condition_initial = (responses / "condition_case_initial.txt").read_text()
    condition_followup = (responses / "condition_case_followup.txt").read_text()

    def b64(data: bytes) -> str:
        return base64.b64encode(data).decode("ascii")

    lesion_prompt = prompts.build_lesion_prompt()
    condition_prompt = prompts.build_condition_prompt()
    write_fixture(PROVIDERS, "vision", {"image": b64(lesion_png), "prompt": lesion_prompt},
                  {"text": lesion_initial})
    write_fixture(PROVIDERS, "vision", {"image": b64(condition_png), "prompt": lesion_prompt},
                  {"text": condition_initial})
    write_fixture(PROVIDERS, "vision", {"image": b64(condition_png), "prompt": condition_prompt},
                  {"text": condition_followup})

    # The XAI prompt embeds the measured technical report, so run the actual
    # segmentation + feature extraction to key the canned response correctly.
    image = decode_image(lesion_png)
    mask, contours = segmentation.segment_lesion(image)
    contour = segmentation.largest_contour(contours)
    lesion_features = feat.compute_features(image, mask, contour)
    report = feat.build_technical_report(lesion_features)
    assessment = prompts.parse_assessment(lesion_initial)
    xai_prompt = prompts.build_xai_prompt(assessment, report)
    write_fixture(PROVIDERS, "text", {"prompt": xai_prompt}, {"text": lesion_xai})


# Track score design for the corpus: per-case cosine 0.70 (context) and 0.69
# (entities); token matching per case precision 0.63 / recall 0.67; NLI label
# counts context E/N/C = 63/7/3 and entities E/N/C = 30/22/21 over 73 cases.
N_CASES = 73
CONTEXT_LABELS = ["entailment"] * 63 + ["neutral"] * 7 + ["contradiction"] * 3
ENTITY_LABELS = ["entailment"] * 30 + ["neutral"] * 22 + ["contradiction"] * 21

NLI_DISTS = {
    "entailment": {"contradiction": 0.05, "neutral": 0.1, "entailment": 0.85},
    "neutral": {"contradiction": 0.15, "neutral": 0.7, "entailment": 0.15},
    "contradiction": {"contradiction": 0.8, "neutral": 0.12, "entailment": 0.08},
}

CONDITIONS = [
    "Cellulitis", "Erysipelas", "Candidiasis", "Aphthous stomatitis", "Psoriasis",
    "Eczema", "Impetigo", "Rosacea", "Vitiligo", "Urticaria",
]


def unit(cos: float, flip: bool = False) -> list[float]:
    s = math.sqrt(max(0.0, 1.0 - cos * cos))
    return [cos, -s if flip else s]


def build_eval_corpus() -> None:
    corpus = FIXTURES / "eval_corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    for old in corpus.glob("*.json"):
        old.unlink()

    for i in range(N_CASES):
        name = CONDITIONS[i % len(CONDITIONS)]
        # Entity-track outcome drives how close the generated diagnosis is:
        # entailment = same diagnosis, neutral = hedged, contradiction = wrong one.
        entity_label = ENTITY_LABELS[i]
        if entity_label == "entailment":
            hyp_name = name
        elif entity_label == "neutral":
            hyp_name = f"{name} (suspected)"
        else:
            hyp_name = CONDITIONS[(i + 3) % len(CONDITIONS)]
        case_id = f"case_{i:03d}"
        premise = (
            f"The diagnosis is {name}. The history and examination findings in "
            f"scenario {i} are classical for this condition, and the distribution "
            "of the rash together with the systemic signs supports it."
        )
        hypothesis = (
            f"Diagnosis - {hyp_name}\nClinical Features Supporting Diagnosis: the "
            f"presentation in scenario {i} is most consistent with {hyp_name}, given "
            "the morphology and distribution described."
        )
        doc = {
            "id": case_id,
            "question": f"Teaching scenario {i}: describe the most likely diagnosis.",
            "premise": premise,
            "hypothesis": hypothesis,
            "premise_entity": name,
            "hypothesis_entity": hyp_name,
        }
        (corpus / f"{case_id}.json").write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")

        # Sentence embeddings: context pair at cosine 0.70, entity pair at 0.69.
        write_fixture(PROVIDERS, "embedding",
                      {"texts": [premise, hypothesis], "granularity": "sentence"},
                      {"vectors": [[1.0, 0.0], unit(0.70)]})
        write_fixture(PROVIDERS, "embedding",
                      {"texts": [name, hyp_name], "granularity": "sentence"},
                      {"vectors": [[1.0, 0.0], unit(0.69)]})
        # Token embeddings: one reference token, two generated tokens at cosines
        # 0.67 and 0.59 -> precision 0.63, recall 0.67 per case.
        write_fixture(PROVIDERS, "embedding",
                      {"texts": [premise, hypothesis], "granularity": "token"},
                      {"token_vectors": [
                          [["ref", [1.0, 0.0]]],
                          [["gen_a", unit(0.67)], ["gen_b", unit(0.59, flip=True)]],
                      ]})
        write_fixture(PROVIDERS, "nli", {"premise": premise, "hypothesis": hypothesis},
                      NLI_DISTS[CONTEXT_LABELS[i]])
        write_fixture(PROVIDERS, "nli", {"premise": name, "hypothesis": hyp_name},
                      NLI_DISTS[entity_label])


def build_reviews() -> None:
    # 100 reviews; column means exactly 4.38 and 4.31.
    lines = ["# case_id, symptom_image_score, diagnostic_reasoning_score, reviewer"]
    for i in range(100):
        s1 = 5 if i < 38 else 4
        s2 = 5 if i < 31 else 4
        lines.append(f"case_{i % N_CASES:03d}, {s1}, {s2}, reviewer-{i % 4}")
    (FIXTURES / "expert_reviews.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_config() -> None:
    (FIXTURES / "service_config.yaml").write_text(
        "listen_host: 127.0.0.1\n"
        "listen_port: 8080\n"
        "store_root: ./case-store\n"
        "mock_fixtures: fixtures/providers\n",
        encoding="utf-8",
    )


def main() -> None:
    PROVIDERS.mkdir(parents=True, exist_ok=True)
    for old in PROVIDERS.glob("*.json"):
        old.unlink()
    lesion_png, condition_png = build_images()
    build_workflow_fixtures(lesion_png, condition_png)
    build_eval_corpus()
    build_reviews()
    build_config()
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
