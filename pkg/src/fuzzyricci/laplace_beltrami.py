"""Curved Laplacian for a metric c and its spectral decomposition.

For a positive-definite metric ``c`` the natural operator is
``a -> (La) c^{-1}``, self-adjoint and positive in the weighted inner
product ``<a,b>_c = tr(c a* b)`` but not in the plain Hilbert-Schmidt one.
Right multiplication by ``c^{1/2}`` is a unitary from the weighted space
onto the Hilbert-Schmidt space, and conjugating through it gives the
computationally convenient form

    a_flat -> (L(a_flat c^{-1/2})) c^{-1/2},

an ordinary Hermitian positive-semidefinite superoperator whose spectrum
equals that of the weighted operator. All spectral computations happen on
this conjugated form; eigenvectors are mapped back by right multiplication
with ``c^{-1/2}`` and renormalized in the weighted inner product.

The tempting alternative ``a -> c^{-1}(La)`` (left instead of right
multiplication by the inverse metric) is *not* self-adjoint in the weighted
inner product; ``rejected_operator_superop`` assembles it in the same
conjugated frame so the defect is measurable, and ``COUNTEREXAMPLE_SEED``
records a random metric exhibiting it at n = 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInput, MetricDegenerate
from .linalg import (
    Superoperator,
    as_square_matrix,
    hermitian_eig,
    hs_inner,
    matrix_to_json,
    superop_from_map,
)
from .torus import FuzzyTorus

# Relative spectral-gap threshold below which eigenvalues are grouped as
# degenerate, and below which an eigenvalue counts as kernel.
GAP_TOL_REL = 1e-8

# Seed for random_metric(2, seed) producing a metric for which the rejected
# operator's Hermiticity defect is macroscopic (order 1, vs the 1e-6 bar).
COUNTEREXAMPLE_SEED = 3


@dataclass(frozen=True)
class WeightedSpace:
    """Metric ``c`` with cached inverse/square-root powers.

    Provides the weighted inner product ``<a,b>_c = tr(c a* b)``, the state
    ``phi(a) = tr(c a)``, and the unitary (and its inverse) between the
    weighted space and the plain Hilbert-Schmidt space.
    """

    c: np.ndarray
    c_sqrt: np.ndarray = field(repr=False)
    c_invsqrt: np.ndarray = field(repr=False)
    c_inv: np.ndarray = field(repr=False)

    @classmethod
    def from_metric(cls, c, floor: float = 1e-12) -> "WeightedSpace":
        """Validate ``c`` and precompute its functional-calculus powers."""
        c = as_square_matrix(c, "metric")
        w, v = hermitian_eig(c)
        if float(w[0]) <= floor:
            raise MetricDegenerate(
                f"metric is not positive definite: min eigenvalue {float(w[0]):.6e}"
            )
        c = (c + c.conj().T) / 2

        def power(p: float) -> np.ndarray:
            m = (v * w**p) @ v.conj().T
            return (m + m.conj().T) / 2

        return cls(c=c, c_sqrt=power(0.5), c_invsqrt=power(-0.5), c_inv=power(-1.0))

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @cached_property
    def trace(self) -> float:
        return float(np.trace(self.c).real)

    def inner(self, a, b) -> complex:
        """Weighted inner product tr(c a* b)."""
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        if a.shape != b.shape or a.shape != self.c.shape:
            raise InvalidInput(f"shape mismatch: {a.shape} vs {b.shape}")
        return complex(np.trace(self.c @ a.conj().T @ b))

    def norm(self, a) -> float:
        return float(np.sqrt(self.inner(a, a).real))

    def state(self, a) -> complex:
        """The positive linear functional phi(a) = tr(c a)."""
        return complex(np.trace(self.c @ np.asarray(a, dtype=complex)))

    def to_flat(self, a) -> np.ndarray:
        """Unitary into the plain Hilbert-Schmidt space: a -> a c^{1/2}."""
        return np.asarray(a, dtype=complex) @ self.c_sqrt

    def from_flat(self, a_flat) -> np.ndarray:
        """Inverse unitary: a_flat -> a_flat c^{-1/2}."""
        return np.asarray(a_flat, dtype=complex) @ self.c_invsqrt


def inner_product_c(c, a, b) -> complex:
    """Weighted inner product tr(c a* b) for a one-off metric."""
    return WeightedSpace.from_metric(c).inner(a, b)


def lb_apply(torus: FuzzyTorus, c, a) -> np.ndarray:
    """Curved Laplacian (La) c^{-1}, the operator the weighted space carries."""
    space = c if isinstance(c, WeightedSpace) else WeightedSpace.from_metric(c)
    a = as_square_matrix(a)
    if a.shape[0] != torus.n:
        raise InvalidInput(f"expected {torus.n}x{torus.n} input, got {a.shape}")
    return torus.laplacian_apply(a) @ space.c_inv


def lb_conjugated_apply(torus: FuzzyTorus, space: WeightedSpace, a_flat) -> np.ndarray:
    """Conjugated curved Laplacian (L(a c^{-1/2})) c^{-1/2} on flat vectors."""
    return torus.laplacian_apply(np.asarray(a_flat, dtype=complex) @ space.c_invsqrt) @ space.c_invsqrt


def lb_conjugated_superop(torus: FuzzyTorus, c) -> Superoperator:
    """Dense matrix of the conjugated curved Laplacian.

    Hermitian positive semidefinite under the flattening convention; its
    spectrum equals that of the weighted-space operator.
    """
    space = c if isinstance(c, WeightedSpace) else WeightedSpace.from_metric(c)
    return superop_from_map(torus.n, lambda a: lb_conjugated_apply(torus, space, a))


def rejected_operator_superop(torus: FuzzyTorus, c) -> Superoperator:
    """The discarded alternative a -> c^{-1}(La), in the conjugated frame.

    Assembled as ``a_flat -> c^{-1} (L(a_flat c^{-1/2})) c^{1/2}`` so that
    Hermiticity of the returned matrix is equivalent to self-adjointness of
    the alternative in the weighted inner product. Generic metrics break it;
    see ``COUNTEREXAMPLE_SEED``.
    """
    space = c if isinstance(c, WeightedSpace) else WeightedSpace.from_metric(c)

    def alt(a_flat: np.ndarray) -> np.ndarray:
        return space.c_inv @ torus.laplacian_apply(a_flat @ space.c_invsqrt) @ space.c_sqrt

    return superop_from_map(torus.n, alt)


@dataclass(frozen=True)
class SpectralData:
    """Full eigendecomposition of the curved Laplacian at one metric.

    ``vectors_flat[i]`` are orthonormal in the plain Hilbert-Schmidt inner
    product (eigenvectors of the conjugated operator); ``vectors_weighted[i]``
    are the same eigenvectors mapped back by ``c^{-1/2}`` and normalized in
    the weighted inner product. Global phases are left free; the tracking
    layer owns the phase convention. ``degeneracy_groups`` lists index runs
    whose consecutive gaps fall below ``GAP_TOL_REL`` times the operator
    norm; ``kernel_index`` locates the single zero mode.
    """

    space: WeightedSpace
    eigenvalues: np.ndarray
    vectors_flat: list[np.ndarray]
    vectors_weighted: list[np.ndarray]
    degeneracy_groups: list[list[int]]
    kernel_index: int

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def operator_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def min_gap(self, i: int) -> float:
        """Distance from eigenvalue ``i`` to its nearest spectral neighbor."""
        w = self.eigenvalues
        gaps = []
        if i > 0:
            gaps.append(abs(w[i] - w[i - 1]))
        if i < len(w) - 1:
            gaps.append(abs(w[i + 1] - w[i]))
        return float(min(gaps))


def _group_degenerate(eigenvalues: np.ndarray, threshold: float) -> list[list[int]]:
    groups: list[list[int]] = [[0]]
    for i in range(1, len(eigenvalues)):
        if eigenvalues[i] - eigenvalues[i - 1] < threshold:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def lb_spectrum(torus: FuzzyTorus, c, gap_tol_rel: float = GAP_TOL_REL) -> SpectralData:
    """Eigenvalues and eigenvectors of the curved Laplacian for metric ``c``.

    Diagonalizes the conjugated (Hermitian) form, so the eigenvalues are real
    and returned ascending with Hilbert-Schmidt-orthonormal flat
    eigenvectors. Exactly one eigenvalue sits below the kernel threshold;
    its weighted eigenvector is proportional to the identity.
    """
    space = c if isinstance(c, WeightedSpace) else WeightedSpace.from_metric(c)
    op = lb_conjugated_superop(torus, space)
    eig = hermitian_eig(op.matrix)
    n = torus.n
    w = eig.eigenvalues
    op_norm = float(np.max(np.abs(w))) if len(w) else 0.0
    threshold = gap_tol_rel * max(op_norm, 1.0)

    vectors_flat: list[np.ndarray] = []
    vectors_weighted: list[np.ndarray] = []
    for i in range(n * n):
        a_flat = eig.eigenvectors[:, i].reshape(n, n)
        a = space.from_flat(a_flat)
        a = a / space.norm(a)
        vectors_flat.append(a_flat)
        vectors_weighted.append(a)

    kernel = np.flatnonzero(np.abs(w) < threshold)
    if len(kernel) != 1:
        raise MetricDegenerate(
            f"expected exactly one zero mode, found {len(kernel)} "
            f"eigenvalues below {threshold:.3e}"
        )
    return SpectralData(
        space=space,
        eigenvalues=w,
        vectors_flat=vectors_flat,
        vectors_weighted=vectors_weighted,
        degeneracy_groups=_group_degenerate(w, threshold),
        kernel_index=int(kernel[0]),
    )


def spectrum_to_json(data: SpectralData, t: float | None = None) -> dict:
    """Spectrum as JSON: eigenvalues plus weighted-normalized eigenvectors."""
    doc: dict = {
        "eigenvalues": [float(w) for w in data.eigenvalues],
        "eigenvectors_Hc": [matrix_to_json(a) for a in data.vectors_weighted],
        "kernel_index": data.kernel_index,
        "degeneracy_groups": data.degeneracy_groups,
    }
    if t is not None:
        doc["t"] = float(t)
    return doc


def rayleigh_quotient(torus: FuzzyTorus, space: WeightedSpace, a) -> float:
    """Eigenvalue via tr(a* La) / tr(c a* a), valid for any nonzero ``a``."""
    a = as_square_matrix(a)
    num = hs_inner(a, torus.laplacian_apply(a)).real
    den = space.inner(a, a).real
    if den <= 0:
        raise InvalidInput("Rayleigh quotient of a null vector")
    return float(num / den)
