"""Run the full case workflow offline against the committed provider fixtures:
the lesion image routes through measurement + explanation, the condition image
through the follow-up questionnaire.

Run:  python3 demos/03_workflow.py
"""
import json
from pathlib import Path

from dermapipe.orchestrator import new_case, run_full
from dermapipe.providers import MockProviderSet

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def show(name: str, image_path: Path):
    providers = MockProviderSet(fixtures_dir=FIXTURES / "providers")
    case = new_case(image_path.read_bytes(), case_id=name, clock=lambda: 0.0)
    run_full(case, providers)
    print(f"=== {name}: terminal state {case.state.value} ===")
    artifacts = dict(case.artifacts)
    artifacts.pop("contour", None)
    for key in ("path", "initial_assessment", "send2lab", "followup_assessment"):
        if key in artifacts:
            print(f"{key}: {json.dumps(artifacts[key], indent=2)}")
    print()


def main():
    show("lesion", FIXTURES / "images" / "lesion.png")
    show("condition", FIXTURES / "images" / "condition.png")


if __name__ == "__main__":
    main()
