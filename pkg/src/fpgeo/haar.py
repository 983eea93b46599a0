"""Haar-distributed rotations and subspaces."""
import numpy as np

from .shapes import Rotation


def sample_rotations(d, n, rng):
    """``n`` Haar rotations in SO(d) as an (n, d, d) array.

    QR of a Gaussian matrix, columns sign-fixed so the triangular factor
    has a positive diagonal; a determinant of -1 is repaired by negating
    the last column.
    """
    g = rng.standard_normal((n, d, d))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, -1] *= -1
    return q


def sample_rotation(d, rng):
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    return Rotation(sample_rotations(d, 1, rng)[0])


def uniform_directions(d, n, rng):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
