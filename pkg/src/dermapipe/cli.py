"""Command-line entry points: serve the HTTP engine, run a batch evaluation,
or print the measurements for a single image."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import evaluation
from .config import ServiceConfig
from .features import build_technical_report, compute_features
from .imaging import decode_image
from .segmentation import largest_contour, segment_lesion
from .service import build_providers, create_app


@click.group()
def main():
    """Dermatology analysis engine."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=False,
              help="YAML config; every key can be overridden by ENGINE_<KEY> env vars.")
def serve(config_path):
    """Run the HTTP service."""
    import uvicorn

    config = ServiceConfig.load(config_path)
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)


@main.command("eval")
@click.option("--corpus", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--reviews", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--out", type=click.Path(), required=False)
@click.option("--fixtures", type=click.Path(exists=True, file_okay=False), required=False,
              help="Mock provider fixtures directory (offline scoring).")
@click.option("--config", "config_path", type=click.Path(exists=True), required=False)
def eval_cmd(corpus, reviews, out, fixtures, config_path):
    """Score a corpus and print the capability report."""
    if config_path:
        config = ServiceConfig.load(config_path)
    else:
        config = ServiceConfig(mock_fixtures=fixtures or ".")
    if fixtures:
        config = config.model_copy(update={"mock_fixtures": fixtures})
    providers = build_providers(config)
    weights = config.weights.to_weights()

    cases = evaluation.load_corpus(corpus)
    records = []
    for case in cases:
        records.append(evaluation.score_case(case, providers))
        click.echo(f"scored {case.id} ({len(records)}/{len(cases)})", err=True)
    review_list: list[evaluation.ExpertReview] = []
    if reviews:
        review_list, errors = evaluation.ingest_expert_reviews(reviews)
        for err in errors:
            click.echo(f"review error: {err}", err=True)
    report = evaluation.aggregate(records, review_list, weights)
    click.echo(evaluation.render_capability_table(report))
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        click.echo(f"report written to {out}", err=True)


@main.command()
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False), required=True)
def features(image_path):
    """Segment one image and print its measurements and technical report."""
    image = decode_image(Path(image_path).read_bytes())
    mask, contours = segment_lesion(image)
    contour = largest_contour(contours)
    lesion = compute_features(image, mask, contour)
    click.echo(json.dumps({
        "area": lesion.area,
        "perimeter": lesion.perimeter,
        "circularity": lesion.circularity,
        "asymmetry_major": lesion.asymmetry_major,
        "asymmetry_minor": lesion.asymmetry_minor,
        "asymmetry_avg": lesion.asymmetry_avg,
        "color_std": list(lesion.color_std),
    }, indent=2))
    click.echo()
    click.echo(build_technical_report(lesion).text)


if __name__ == "__main__":
    sys.exit(main())
