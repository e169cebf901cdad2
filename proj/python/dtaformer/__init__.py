from ._dtaformer import (
    aggregate,
    f1_from_pr,
    fps,
    grid_subsample,
    interpolate,
    metrics,
    normalize,
    reconstruct,
    softmax,
    synth,
    vca_map,
    wca_map,
)

__all__ = [
    "aggregate",
    "f1_from_pr",
    "fps",
    "grid_subsample",
    "interpolate",
    "metrics",
    "normalize",
    "reconstruct",
    "softmax",
    "synth",
    "vca_map",
    "wca_map",
]
