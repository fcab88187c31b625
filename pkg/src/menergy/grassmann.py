"""Linear-algebraic kernel for m-dimensional subspaces of R^n.

A subspace is stored as an orthonormal frame (rows are basis vectors).
All angle computations go through singular value decompositions of small
dense matrices; singular values are clamped to [0, 1] before arccos so
that roundoff never leaks outside the legal angle range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]

_ORTHO_TOL = 1e-6  # max Gram defect accepted by the strict constructor


class DimensionMismatchError(ValueError):
    """Operands live in different ambient spaces or have different rank."""


def _modified_gram_schmidt(vectors: Array) -> Array:
    """Orthonormalize rows with modified Gram-Schmidt.

    Raises ValueError when the rows are numerically dependent.
    """
    q = np.array(vectors, dtype=float, copy=True)
    m = q.shape[0]
    for i in range(m):
        for j in range(i):
            q[i] -= np.dot(q[j], q[i]) * q[j]
        norm = np.linalg.norm(q[i])
        if norm < 1e-12:
            raise ValueError("frame vectors are numerically dependent")
        q[i] /= norm
    return q


@dataclass(frozen=True)
class Subspace:
    """An m-dimensional linear subspace of R^n, kept as an orthonormal frame.

    The input frame must already be orthonormal up to a Gram defect of
    1e-6; it is re-orthonormalized on construction to absorb roundoff.
    Use :meth:`from_spanning` for arbitrary independent spanning sets.
    """

    frame: Array
    ambient_dim: int = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        frame = np.atleast_2d(np.asarray(self.frame, dtype=float))
        m, n = frame.shape
        if not 1 <= m <= n:
            raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
        gram = frame @ frame.T
        defect = float(np.max(np.abs(gram - np.eye(m))))
        if defect > _ORTHO_TOL:
            raise ValueError(
                f"frame is not orthonormal (Gram defect {defect:.3e} > {_ORTHO_TOL})"
            )
        frame = _modified_gram_schmidt(frame)
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "dim", m)

    @classmethod
    def from_spanning(cls, vectors) -> "Subspace":
        """Build the subspace spanned by arbitrary independent vectors."""
        return cls(_modified_gram_schmidt(np.atleast_2d(np.asarray(vectors, float))))

    @classmethod
    def span(cls, *vectors) -> "Subspace":
        return cls.from_spanning(np.array(vectors, dtype=float))

    def project(self, v: Array) -> Array:
        """Orthogonal projection of a vector onto the subspace."""
        return self.frame.T @ (self.frame @ np.asarray(v, float))

    def project_complement(self, v: Array) -> Array:
        v = np.asarray(v, float)
        return v - self.project(v)

    def coords(self, v: Array) -> Array:
        """Coefficients of the projection of v in the frame basis."""
        return self.frame @ np.asarray(v, float)

    def complement_frame(self) -> Array:
        """Orthonormal frame of the orthogonal complement, rows are vectors."""
        m, n = self.frame.shape
        if m == n:
            return np.zeros((0, n))
        _, _, vt = np.linalg.svd(self.frame, full_matrices=True)
        comp = vt[m:]
        # deterministic sign: first nonzero entry of each row positive
        for row in comp:
            nz = np.nonzero(np.abs(row) > 1e-12)[0]
            if nz.size and row[nz[0]] < 0:
                row *= -1.0
        return comp


@dataclass(frozen=True)
class PrincipalDecomposition:
    """Principal angles and vectors of a pair of m-planes."""

    angles: Array          # nondecreasing, in [0, pi/2]
    left_vectors: Array    # rows: orthonormal vectors in F
    right_vectors: Array   # rows: orthonormal vectors in G

    @property
    def cosines(self) -> Array:
        return np.cos(self.angles)


def _check_pair(f: Subspace, g: Subspace) -> None:
    if f.ambient_dim != g.ambient_dim or f.dim != g.dim:
        raise DimensionMismatchError(
            f"incompatible subspaces: ({f.dim},{f.ambient_dim}) vs "
            f"({g.dim},{g.ambient_dim})"
        )


def projector(s: Subspace) -> Array:
    """The n-by-n orthogonal projection matrix onto the subspace."""
    return s.frame.T @ s.frame


def affine_project(x: Array, s: Subspace, z: Array) -> Array:
    """Project z onto the affine plane x + S."""
    x = np.asarray(x, float)
    return x + s.project(np.asarray(z, float) - x)


def angle_metric(f: Subspace, g: Subspace) -> float:
    """Operator-norm distance between the projectors of two m-planes.

    Equals the sine of the largest principal angle; lies in [0, 1].
    """
    _check_pair(f, g)
    diff = projector(f) - projector(g)
    top = float(np.linalg.svd(diff, compute_uv=False)[0])
    return min(max(top, 0.0), 1.0)


def principal_angles(f: Subspace, g: Subspace) -> PrincipalDecomposition:
    """Principal angles/vectors from the SVD of the frame Gram matrix."""
    _check_pair(f, g)
    gram = f.frame @ g.frame.T
    u, s, vt = np.linalg.svd(gram)
    s = np.clip(s, 0.0, 1.0)
    angles = np.arccos(s)  # s descending => angles nondecreasing
    # arccos near 1 loses half the digits; recover small angles from the
    # complement sines (at most min(m, n-m) principal angles are nonzero)
    m = f.dim
    comp = g.complement_frame()
    if comp.shape[0]:
        small = np.sort(
            np.clip(np.linalg.svd(f.frame @ comp.T, compute_uv=False), 0.0, 1.0)
        )
    else:
        small = np.zeros(0)
    sines = np.concatenate([np.zeros(m - len(small)), small])
    angles = np.where(s > 0.99, np.arcsin(sines), angles)
    left = u.T @ f.frame
    right = vt @ g.frame
    # canonical signs: first significant entry of each left vector positive;
    # flipping a (left, right) pair preserves <x_i, y_i> = cos(theta_i) >= 0
    for i in range(left.shape[0]):
        nz = np.nonzero(np.abs(left[i]) > 1e-12)[0]
        if nz.size and left[i, nz[0]] < 0:
            left[i] *= -1.0
            right[i] *= -1.0
    return PrincipalDecomposition(angles=angles, left_vectors=left, right_vectors=right)


def combined_angle(f: Subspace, g: Subspace) -> float:
    """arccos of the product of principal-angle cosines, in [0, pi/2]."""
    cosines = principal_angles(f, g).cosines
    return float(math.acos(min(max(float(np.prod(cosines)), 0.0), 1.0)))


def cone_contains(p: Array, beta: float, f: Subspace, z: Array) -> bool:
    """Membership in the cone around p + F with opening parameter beta."""
    if beta < 0:
        raise ValueError("cone parameter must be nonnegative")
    d = np.asarray(z, float) - np.asarray(p, float)
    tangential = f.project(d)
    normal = d - tangential
    return bool(np.linalg.norm(normal) <= beta * np.linalg.norm(tangential))


def cone_lemma_bound(chi: float, sigma: float) -> float:
    """Smallest kappa such that C_p(sigma, F) fits inside C_p(kappa, G)
    whenever the planes F, G are at angle at most chi.
    """
    if chi < 0 or sigma < 0:
        raise ValueError("chi and sigma must be nonnegative")
    if (1.0 + sigma) * chi >= 1.0:
        raise ValueError("threshold undefined: (1 + sigma) * chi >= 1")
    return (sigma + (1.0 + sigma) * chi) / (1.0 - (1.0 + sigma) * chi)


DEFAULT_CTILDE = math.sqrt(2.0) * 1.01  # not from the source material; see README


def two_plane_angle_bound(
    d1: float, d2: float, r1: float, r2: float, ctilde: float = DEFAULT_CTILDE
) -> float:
    """Angle bound between two planes approximating the same set at two scales."""
    if not 0 < r1 <= r2:
        raise ValueError("need 0 < r1 <= r2")
    if not (0 < d1 < 0.5 and 0 < d2 < 0.5):
        raise ValueError("need d1, d2 in (0, 1/2)")
    if ctilde <= math.sqrt(2.0):
        raise ValueError("ctilde must exceed sqrt(2)")
    return 2.0 * ctilde * (d1 + 2.0 * d2 * r2 / r1) / (1.0 - 2.0 * d1)


def random_subspace(rng: np.random.Generator, n: int, m: int) -> Subspace:
    """Uniformly distributed m-plane in R^n (QR of a Gaussian matrix)."""
    a = rng.standard_normal((m, n))
    return Subspace.from_spanning(a)
