"""Fine-grained radio map estimation from ultra-sparse RSS samples.

The package implements a three-stage generative estimation pipeline
(rough-map boost, conditional diffusion candidate generation, physics-guided
election), classical interpolation baselines behind the same estimator
interface, a synthetic propagation simulator for desk-scale datasets, and
an experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .grids import (  # noqa: F401
    BuildingLayout,
    Condition,
    EnrichedSampleSet,
    RadioMap,
    SampleSet,
    denormalize_rss,
    masked_overwrite,
    normalize_rss,
)
from .metrics import MetricReport, metric_report, mse  # noqa: F401
