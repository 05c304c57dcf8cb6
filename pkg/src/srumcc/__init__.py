"""Semi-random unit-memory convolutional codes: encoding, list decoding and bounds."""

__version__ = "0.1.0"

from .trellis import CodeSpec, GeneratorPolynomials, Trellis, build_trellis, conv_encode
from .codec import RandomTransform, encode_frame, sample_transform
from .channel import ChannelParams, mutual_information
from .decoder import DecodeConfig, SCDecoder, decode_frame
from .edf import ThresholdTable, edf, m2_metric
from .bounds import bound_curve, ensemble_wef, wef

__all__ = [
    "CodeSpec", "GeneratorPolynomials", "Trellis", "build_trellis", "conv_encode",
    "RandomTransform", "encode_frame", "sample_transform", "ChannelParams",
    "mutual_information", "DecodeConfig", "SCDecoder", "decode_frame", "ThresholdTable",
    "edf", "m2_metric", "bound_curve", "ensemble_wef", "wef",
]
