"""Dermatology analysis pipeline: segmentation, lesion measurement, model-workflow
orchestration and response evaluation."""

__version__ = "0.1.0"
