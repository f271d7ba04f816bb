"""Pure numeric kernels shared by the prediction and analysis layers.

Everything in this module is a deterministic function of its inputs,
computes in float64, and never mutates its arguments.  Embedding matrices
are dense row-major arrays with unit-norm rows; probability vectors are
nonnegative and sum to one.
"""

from __future__ import annotations

import numpy as np

# Unit-norm tolerance for in-memory embeddings.  File payloads are float32
# and are checked against a looser 1e-3 by the loader.
UNIT_NORM_ATOL = 1e-4

PROB_SUM_ATOL = 1e-6


def as_float64(values, name: str = "array") -> np.ndarray:
    """Convert to a float64 array, rejecting NaN/inf."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def validate_unit_rows(mat: np.ndarray, name: str = "embeddings",
                       atol: float = UNIT_NORM_ATOL) -> np.ndarray:
    """Validate that every row of a 2-D embedding matrix has L2 norm 1."""
    arr = as_float64(mat, name)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    bad = np.abs(norms - 1.0) > atol
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise ValueError(
            f"{name} row {idx} has L2 norm {norms[idx]:.6g}, expected 1 within {atol:g}"
        )
    return arr


def validate_probability_rows(probs: np.ndarray, name: str = "probabilities") -> np.ndarray:
    """Validate rows (or a single vector) as probability distributions."""
    arr = as_float64(probs, name)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} has entries outside [0, 1]")
    sums = arr.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROB_SUM_ATOL):
        raise ValueError(f"{name} rows must sum to 1 within {PROB_SUM_ATOL:g}")
    return arr


def cosine_logits(image_embs: np.ndarray, text_embs: np.ndarray) -> np.ndarray:
    """Unscaled cosine similarities between view and class embeddings.

    Args:
        image_embs: (N, D) unit-norm view embeddings.
        text_embs: (C, D) unit-norm class embeddings.

    Returns:
        (N, C) matrix whose (i, c) entry is the dot product of view i and
        class c.  Values lie in [-1, 1] up to rounding.
    """
    img = validate_unit_rows(image_embs, "image_embs")
    txt = validate_unit_rows(text_embs, "text_embs")
    if img.shape[1] != txt.shape[1]:
        raise ValueError(
            f"embedding dimension mismatch: image D={img.shape[1]}, text D={txt.shape[1]}"
        )
    return img @ txt.T


def softmax_temperature(logits: np.ndarray, tau: float, axis: int = -1) -> np.ndarray:
    """Temperature softmax, stabilized by max subtraction.

    ``tau`` must be strictly positive; the analytic tau -> 0+ limit lives in
    :func:`zero_temperature_limit`.
    """
    if not tau > 0.0:
        raise ValueError(f"temperature must be positive, got {tau}")
    arr = as_float64(logits, "logits")
    scaled = arr / tau
    scaled = scaled - scaled.max(axis=axis, keepdims=True)
    exp = np.exp(scaled)
    return exp / exp.sum(axis=axis, keepdims=True)


def zero_temperature_limit(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Exact pointwise limit of the temperature softmax as tau -> 0+.

    Mass 1 on the unique row maximum; when m entries tie for the maximum
    (exact bitwise equality) each receives 1/m.  Any tolerance here would
    make vote counts platform-dependent, so only exact ties share mass.
    """
    arr = as_float64(logits, "logits")
    top = arr.max(axis=axis, keepdims=True)
    hits = (arr == top).astype(np.float64)
    return hits / hits.sum(axis=axis, keepdims=True)


def zero_temperature_eps(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Reference zero-temperature path: softmax at machine-epsilon temperature.

    Divides by the smallest representable float64 step instead of taking the
    analytic limit; kept for bit-parity checks against the limit form.
    """
    return softmax_temperature(logits, float(np.finfo(np.float64).eps), axis=axis)


def entropy(probs: np.ndarray, axis: int = -1) -> np.ndarray | float:
    """Shannon entropy in nats, with the 0*log(0) = 0 convention."""
    arr = validate_probability_rows(probs, "probs")
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(arr > 0.0, arr * np.log(arr), 0.0)
    result = -plogp.sum(axis=axis)
    return float(result) if np.isscalar(result) or result.ndim == 0 else result


def marginal_distribution(probs: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Arithmetic mean of the masked probability rows.

    Args:
        probs: (N, C) probability rows.
        mask: boolean vector of length N; ``None`` keeps every row.
    """
    arr = validate_probability_rows(probs, "probs")
    if arr.ndim != 2:
        raise ValueError(f"probs must be 2-D, got shape {arr.shape}")
    if mask is None:
        kept = arr
    else:
        sel = np.asarray(mask, dtype=bool)
        if sel.shape != (arr.shape[0],):
            raise ValueError(f"mask shape {sel.shape} does not match {arr.shape[0]} rows")
        if not sel.any():
            raise ValueError("mask keeps no rows")
        kept = arr[sel]
    return kept.mean(axis=0)


def ensemble_text_embeddings(per_template: list[np.ndarray]) -> np.ndarray:
    """Average class embeddings across templates and re-normalize per class.

    Args:
        per_template: list of (C, D) unit-norm matrices, one per template.

    Returns:
        (C, D) matrix whose row c is the renormalized mean of row c across
        templates.
    """
    if not per_template:
        raise ValueError("per_template is empty")
    mats = [validate_unit_rows(m, f"per_template[{i}]") for i, m in enumerate(per_template)]
    shape = mats[0].shape
    for i, m in enumerate(mats[1:], start=1):
        if m.shape != shape:
            raise ValueError(f"per_template[{i}] shape {m.shape} != {shape}")
    mean = np.mean(mats, axis=0)
    norms = np.linalg.norm(mean, axis=1)
    if np.any(norms < 1e-9):
        idx = int(np.argmax(norms < 1e-9))
        raise ValueError(f"class {idx} template mean has near-zero norm; cannot renormalize")
    return mean / norms[:, None]
