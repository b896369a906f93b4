"""Score the bundled 73-pair evaluation corpus offline and print the
capability table.

Run:  python3 demos/04_evaluation.py
"""
from pathlib import Path

from dermapipe import evaluation
from dermapipe.providers import MockProviderSet

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    providers = MockProviderSet(fixtures_dir=FIXTURES / "providers")
    cases = evaluation.load_corpus(FIXTURES / "eval_corpus")
    records = [evaluation.score_case(case, providers) for case in cases]
    reviews, errors = evaluation.ingest_expert_reviews(FIXTURES / "expert_reviews.csv")
    assert not errors, errors
    report = evaluation.aggregate(records, reviews)
    print(f"scored {len(records)} question/answer pairs, "
          f"{len(reviews)} expert reviews")
    print()
    print(evaluation.render_capability_table(report))


if __name__ == "__main__":
    main()
