"""Region covariance vehicle classification (C++ core)."""

from ._core import (
    VehcovError,
    angle_from_baseline,
    build_ontology,
    evaluate,
    generalized_eigenvalues,
    load_frames,
    median_filter,
    region_covariance,
    run_pipeline,
    scene_presets,
    sensitivity,
    specificity,
    spd_distance,
    synthesize,
)

__all__ = [
    "VehcovError",
    "angle_from_baseline",
    "build_ontology",
    "evaluate",
    "generalized_eigenvalues",
    "load_frames",
    "median_filter",
    "region_covariance",
    "run_pipeline",
    "scene_presets",
    "sensitivity",
    "specificity",
    "spd_distance",
    "synthesize",
]
