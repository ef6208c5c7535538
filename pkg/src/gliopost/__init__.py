"""Adaptive, training-free post-processing for multi-label 3D tumor
segmentations: radiomic case clustering, per-cluster removal of small
components, per-cluster ratio-based label redefinition, and the
lesion-wise Dice/NSD metrics and rank score used to fit it all."""

__version__ = "0.1.0"

from .volume import CaseBundle, LabelMap, ScalarVolume, Spacing  # noqa: F401
