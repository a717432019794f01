"""Sketched bilinear forms: sketches, complexity measures, chaos deviations and applications."""
from .errors import ConfigError, InvalidArgumentError, NumericFailureError, SketchlabError
from .sketch import (
    DistributionKind,
    RandomSource,
    SketchMatrix,
    bilinear,
    derive_stream,
    desk,
    make_sketch,
    sample_subgaussian,
    sk,
)

__version__ = "0.1.0"
