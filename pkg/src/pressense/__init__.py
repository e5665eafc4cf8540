"""Fingertip pressure toolkit: binned representation, weak-label training,
touch events, and a streaming demo service."""

__version__ = "0.1.0"

from .contact import FINGER_NAMES, ContactLabel
from .pressure import (BinIndexImage, BinSpec, ContactImage, PressureImage,
                       bin_representatives, contact_image, decode_argmax,
                       decode_expected, make_bin_spec, quantize)

__all__ = [
    "__version__",
    "FINGER_NAMES", "ContactLabel",
    "BinIndexImage", "BinSpec", "ContactImage", "PressureImage",
    "bin_representatives", "contact_image", "decode_argmax",
    "decode_expected", "make_bin_spec", "quantize",
]
