# Minimal complex linear algebra for the receiver: thin QR with a real
# positive diagonal and the matched receive-vector rotation.
import numpy as np

__all__ = ["DecompositionError", "qr_decompose", "rotate_received"]

RANK_TOL = 1e-12


class DecompositionError(ValueError):
    """Raised when the channel matrix is (numerically) rank deficient."""


def qr_decompose(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization h = q @ r with diag(r) real and positive.

    h must be (m_r, m_t) with m_r >= m_t and full column rank.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] < h.shape[1]:
        raise ValueError(f"need a tall (m_r >= m_t) matrix, got shape {h.shape}")
    q, r = np.linalg.qr(h, mode="reduced")
    d = np.diagonal(r)
    h_norm = np.linalg.norm(h)
    if np.min(np.abs(d)) < RANK_TOL * h_norm:
        raise DecompositionError("rank-deficient channel matrix")
    # Rotate column phases so the diagonal of r becomes real positive.
    phase = d / np.abs(d)
    q = q * phase[np.newaxis, :]
    r = r * np.conj(phase)[:, np.newaxis]
    r[np.diag_indices(r.shape[0])] = np.abs(d)
    return q, r


def rotate_received(q: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return q^H @ y (the rotated receive vector, length m_t)."""
    q = np.asarray(q, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (q.shape[0],):
        raise ValueError(f"dimension mismatch: q is {q.shape}, y is {y.shape}")
    return q.conj().T @ y
