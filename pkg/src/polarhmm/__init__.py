"""Lossless polar-transform compression for hidden Markov sources over F_q."""

from .codec import (AuxInfo, CompressedStream, baseline_decompress, compress,
                    fast_decompress, flatten, preprocess, reshape)
from .decoder import PartialVector, sc_decode, sc_scan
from .errors import PolarHMMError
from .field import KernelMatrix, PrimeField, default_kernel
from .hmm import (MarkovSource, belief_update, entropy_rate_estimate,
                  forward_infer, load_source, predictive, sample, save_source)
from .transform import TransformPlan, polar_inverse, polar_transform

__all__ = [
    "AuxInfo", "CompressedStream", "KernelMatrix", "MarkovSource",
    "PartialVector", "PolarHMMError", "PrimeField", "TransformPlan",
    "default_kernel", "baseline_decompress", "belief_update", "compress",
    "entropy_rate_estimate", "fast_decompress", "flatten", "forward_infer",
    "load_source", "polar_inverse", "polar_transform", "predictive",
    "preprocess", "reshape", "sample", "save_source", "sc_decode", "sc_scan",
]
