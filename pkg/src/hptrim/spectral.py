"""SVD-based spectral shrinkage of the design: the trim transform.

The map replaces each singular value d_k of X by min(tau, d_k), acting as
U diag(d_tilde/d) U^T on anything living in the row space of U. With tau
at the median singular value this attenuates directions a dense
confounder tends to align with, while never amplifying anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SpectralTransform", "compute_svd", "trim_transform", "apply_transform", "spectrum_to_csv"]


@dataclass
class SpectralTransform:
    """SVD factors of a design plus replacement singular values.

    Invariants: d descending and nonnegative; 0 <= d_tilde <= d elementwise
    (shrinkage only); with the trim rule d_tilde = min(tau_trim, d).
    """

    u: np.ndarray
    d: np.ndarray
    d_tilde: np.ndarray
    tau_trim: float
    v: np.ndarray

    def ratios(self) -> np.ndarray:
        """Spectral multipliers d_tilde/d, zero on null directions."""
        out = np.zeros_like(self.d)
        np.divide(self.d_tilde, self.d, out=out, where=self.d > 0)
        return out

    def f_norm(self) -> float:
        """Largest eigenvalue of the transform (at most 1 by construction)."""
        r = self.ratios()
        return float(r.max()) if r.size else 0.0


def compute_svd(x_mat: np.ndarray):
    """Thin SVD ``X = u @ diag(d) @ v.T`` with d descending."""
    x_mat = np.asarray(x_mat, dtype=float)
    if not np.all(np.isfinite(x_mat)):
        raise ValueError("design contains non-finite entries")
    u, d, vt = np.linalg.svd(x_mat, full_matrices=False)
    return u, d, vt.T


def trim_transform(x_mat: np.ndarray, tau: float | None = None) -> SpectralTransform:
    """Build the trim transform of a design.

    ``tau`` defaults to the median of the min(T, p) singular values (mean
    of the two central order statistics when their count is even).
    """
    u, d, v = compute_svd(x_mat)
    if tau is None:
        tau = float(np.median(d))
    if tau <= 0:
        raise ValueError("trim threshold must be positive")
    return SpectralTransform(u=u, d=d, d_tilde=np.minimum(d, tau), tau_trim=float(tau), v=v)


def apply_transform(tf: SpectralTransform, x_mat: np.ndarray, y: np.ndarray):
    """Apply the spectral map to the design and outcomes.

    ``x_mat`` must be the matrix the transform was computed from (shapes
    are checked; contents are trusted). ``y`` may be a vector or a T x m
    matrix; components orthogonal to the design's column space are
    annihilated, which is immaterial for regression on the transformed
    design.
    """
    x_mat = np.asarray(x_mat, dtype=float)
    if x_mat.shape != (tf.u.shape[0], tf.v.shape[0]):
        raise ValueError(f"design shape {x_mat.shape} does not match transform")
    y = np.asarray(y, dtype=float)
    if y.shape[0] != tf.u.shape[0]:
        raise ValueError("outcome length does not match transform")
    r = tf.ratios()
    y2 = y if y.ndim == 2 else y[:, None]
    x_tilde = tf.u @ (r[:, None] * (tf.u.T @ x_mat))
    y_tilde = tf.u @ (r[:, None] * (tf.u.T @ y2))
    return x_tilde, y_tilde.reshape(y.shape)


def spectrum_to_csv(tf: SpectralTransform, path) -> None:
    """Dump the spectrum for diagnostics plots: index, d, d_tilde."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,d,d_tilde\n")
        for k in range(len(tf.d)):
            fh.write(f"{k},{tf.d[k]!r},{tf.d_tilde[k]!r}\n")
