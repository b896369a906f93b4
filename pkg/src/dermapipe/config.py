"""Service configuration with YAML file loading and 1:1 environment overrides."""
from __future__ import annotations

import os
from pathlib import Path

import yaml
from pydantic import BaseModel, Field, model_validator

from .evaluation import Weights
from .segmentation import GrabCutParams

__all__ = ["ServiceConfig", "ENV_PREFIX"]

ENV_PREFIX = "ENGINE_"


class GrabCutConfig(BaseModel):
    gmm_components: int = 5
    iterations: int = 5
    gamma: float = 50.0
    connectivity: int = 8

    def to_params(self) -> GrabCutParams:
        return GrabCutParams(
            gmm_components=self.gmm_components,
            iterations=self.iterations,
            gamma=self.gamma,
            connectivity=self.connectivity,
        )


class WeightsConfig(BaseModel):
    context: float = 1.5
    entities: float = 1.0

    def to_weights(self) -> Weights:
        return Weights(context=self.context, entities=self.entities)


class ServiceConfig(BaseModel):
    """Every scalar key can be overridden by ``ENGINE_<UPPERCASE_KEY>``; nested
    keys use ``ENGINE_GRABCUT_<KEY>`` / ``ENGINE_WEIGHTS_<KEY>``."""

    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    store_root: str = "./case-store"
    mock_fixtures: str | None = None  # mock mode when set
    vision_url: str | None = None
    text_url: str | None = None
    embedding_url: str | None = None
    nli_url: str | None = None
    bearer_token: str = ""
    lexicon_path: str | None = None
    max_upload_bytes: int = 8 * 1024 * 1024
    eval_workers: int = 4
    grabcut: GrabCutConfig = Field(default_factory=GrabCutConfig)
    weights: WeightsConfig = Field(default_factory=WeightsConfig)

    @model_validator(mode="after")
    def _check_mode(self):
        live_urls = [self.vision_url, self.text_url, self.embedding_url, self.nli_url]
        if self.mock_fixtures is None and not all(live_urls):
            raise ValueError("live mode requires all provider endpoints; or set mock_fixtures")
        return self

    @classmethod
    def load(cls, path: str | Path | None = None, env: dict[str, str] | None = None) -> "ServiceConfig":
        doc: dict = {}
        if path is not None:
            doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        env = dict(os.environ if env is None else env)
        for field in cls.model_fields:
            if field in ("grabcut", "weights"):
                sub = doc.setdefault(field, {})
                model = GrabCutConfig if field == "grabcut" else WeightsConfig
                for key in model.model_fields:
                    value = env.get(f"{ENV_PREFIX}{field.upper()}_{key.upper()}")
                    if value is not None:
                        sub[key] = value
                continue
            value = env.get(f"{ENV_PREFIX}{field.upper()}")
            if value is not None:
                doc[field] = value
        return cls.model_validate(doc)
