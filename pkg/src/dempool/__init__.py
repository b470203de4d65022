"""Second-order gamma-democratic aggregation, matrix power normalization and
Tensor Sketch encodings of local feature sets."""

from .aggregate import (
    Descriptor,
    aggregate_first_order,
    aggregate_second_order,
    contribution,
    contributions,
    postprocess,
)
from .analysis import contributions_vs_power, spectrum_report, verify_bounds
from .features import FeatureSet, SyntheticSpec, generate_synthetic, load_features, save_features
from .kernel import KernelMatrix, clamp_negatives, raw_kernel, second_order_kernel
from .sinkhorn import DemocraticWeights, SinkhornConfig, solve_democratic, solve_gamma_democratic
from .sketch import SketchConfig, aggregate_second_order_sketched, sketch_feature
from .spectral import eig_sym, in_span_of_outer_products, matrix_power, newton_schulz_sqrt

__version__ = "0.1.0"
