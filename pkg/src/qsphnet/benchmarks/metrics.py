"""Relative error norms between predicted and reference fields."""

from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError, UndefinedLossError


def error_metrics(pred, ref, mask=None) -> dict:
    """Relative L2 and Linf errors plus the pointwise error map.

    The pointwise map always covers the full input shape (masked-out points
    hold the raw difference); the norms run over the masked points only.
    """
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise ShapeError(f"shape mismatch {pred.shape} vs {ref.shape}")
    pointwise = pred - ref
    if mask is None:
        p, r, d = pred.ravel(), ref.ravel(), pointwise.ravel()
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != ref.shape:
            raise ShapeError("mask shape must match the fields")
        p, r, d = pred[mask], ref[mask], pointwise[mask]
    ref_l2 = float(np.sqrt(np.sum(r * r)))
    ref_linf = float(np.max(np.abs(r))) if r.size else 0.0
    if ref_l2 == 0.0 or ref_linf == 0.0:
        raise UndefinedLossError("relative error is undefined for a zero reference field")
    return {
        "l2_rel": float(np.sqrt(np.sum(d * d))) / ref_l2,
        "linf_rel": float(np.max(np.abs(d))) / ref_linf,
        "pointwise": pointwise,
    }
