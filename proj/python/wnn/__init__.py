"""Windowed nearest neighbour classifier."""

from ._wnn import (
    Error,
    augment,
    binarize,
    classify,
    classify_dwnn,
    classify_nn,
    evaluate,
    extend,
    global_distance,
    load_idx,
    local_distance,
    op_count,
    prune,
    rescale,
    rotate,
    shift,
)

__all__ = [
    "Error",
    "augment",
    "binarize",
    "classify",
    "classify_dwnn",
    "classify_nn",
    "evaluate",
    "extend",
    "global_distance",
    "load_idx",
    "local_distance",
    "op_count",
    "prune",
    "rescale",
    "rotate",
    "shift",
]
