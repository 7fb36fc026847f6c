"""Activation-rate profiling and low-rate neuron ablation for convolutional generators."""

from ._neuroprobe import (
    Generator,
    RateTable,
    artifact_score,
    cli,
    estimate_rates,
    fid,
    heatmap,
    hr_set,
    lr_set,
    precision_recall,
    random_ablate,
    realism,
    sample_latents,
    sequential_ablate,
    single_ablate,
)

__all__ = [
    "Generator",
    "RateTable",
    "artifact_score",
    "cli",
    "estimate_rates",
    "fid",
    "heatmap",
    "hr_set",
    "lr_set",
    "precision_recall",
    "random_ablate",
    "realism",
    "sample_latents",
    "sequential_ablate",
    "single_ablate",
]
