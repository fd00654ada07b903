"""JSON-friendly encoding of complex arrays as nested [re, im] pairs."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def to_pairs(array) -> list:
    """Encode a complex ndarray as nested lists with [re, im] innermost pairs."""
    a = np.asarray(array, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def from_pairs(data) -> np.ndarray:
    """Decode nested [re, im] pairs back into a complex ndarray."""
    a = np.asarray(data, dtype=float)
    if a.ndim < 1 or a.shape[-1] != 2:
        raise ValidationError("complex data must use [re, im] pairs on the last axis")
    return a[..., 0] + 1j * a[..., 1]
