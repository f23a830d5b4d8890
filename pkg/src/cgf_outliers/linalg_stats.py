"""Observation matrices, descriptive statistics, and covariance/PCA helpers.

Conventions used throughout the package:

* data matrices are T x n, rows are observations, columns are variables;
* the sample covariance uses divisor T - 1;
* the median of an even-length vector is the mean of the two central order
  statistics;
* the MAD is the raw median absolute deviation (no normal-consistency factor);
* kurtosis is the population (biased, non-excess) estimator m4 / m2**2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataMatrix",
    "CovarianceSummary",
    "DegenerateInputError",
    "center",
    "covariance_pca",
    "median_and_mad",
    "kurtosis",
    "first_four_cumulants",
]


class DegenerateInputError(ValueError):
    """Raised when a statistic is undefined on the given input (e.g. zero variance)."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """A T x n matrix of observations with optional per-row labels.

    Attributes
    ----------
    values : ndarray, shape (T, n)
        Finite float entries; stored read-only.
    row_labels : tuple of str, optional
        One identifier per row (dates for return series, indices otherwise).
    mean_removed : ndarray, shape (n,), optional
        Column means subtracted by :func:`center`, retained so the original
        data can be reconstructed. ``None`` for raw matrices.
    """

    values: np.ndarray
    row_labels: tuple[str, ...] | None = None
    mean_removed: np.ndarray | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"values must be at least 1 x 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", _readonly(arr))
        if self.row_labels is not None:
            labels = tuple(str(lab) for lab in self.row_labels)
            if len(labels) != arr.shape[0]:
                raise ValueError(
                    f"row_labels has {len(labels)} entries for {arr.shape[0]} rows"
                )
            object.__setattr__(self, "row_labels", labels)
        if self.mean_removed is not None:
            mean = np.asarray(self.mean_removed, dtype=float)
            if mean.shape != (arr.shape[1],):
                raise ValueError("mean_removed must have one entry per column")
            object.__setattr__(self, "mean_removed", _readonly(mean))

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_var(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class CovarianceSummary:
    """Sample covariance matrix with its full symmetric eigendecomposition.

    ``eigenvalues`` are nonincreasing and ``eigenvectors[:, k]`` is the unit
    eigenvector for ``eigenvalues[k]``; column 0 is PC1.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _readonly(self.eigenvectors))

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def pc1(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def center(data: DataMatrix) -> DataMatrix:
    """Subtract each column's sample mean; the mean vector rides along on the result."""
    mean = data.values.mean(axis=0)
    return DataMatrix(data.values - mean, row_labels=data.row_labels, mean_removed=mean)


def covariance_pca(data: DataMatrix) -> CovarianceSummary:
    """Sample covariance (divisor T - 1) and its eigendecomposition.

    Degenerate inputs (constant columns, singular covariance) are allowed;
    eigenvalues may then touch zero up to round-off.
    """
    if data.n_obs < 2:
        raise ValueError("covariance needs at least 2 observations")
    cov = np.cov(data.values, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    cov = 0.5 * (cov + cov.T)  # enforce exact symmetry before eigh
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1]
    return CovarianceSummary(cov, eigvals[order], eigvecs[:, order])


def _as_vector(z) -> np.ndarray:
    arr = np.asarray(z, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    return arr


def median_and_mad(z) -> tuple[float, float]:
    """Median and raw median absolute deviation of a vector.

    No consistency factor is applied to the MAD; a constant vector yields
    mad = 0 and the caller must handle that case.
    """
    arr = _as_vector(z)
    med = float(np.median(arr))
    mad = float(np.median(np.abs(arr - med)))
    return med, mad


def kurtosis(z) -> float:
    """Population non-excess kurtosis m4 / m2**2 (about 3 for a normal sample)."""
    arr = _as_vector(z)
    if arr.size < 2:
        raise ValueError("kurtosis needs at least 2 observations")
    dev = arr - arr.mean()
    m2 = float(np.mean(dev**2))
    if m2 == 0.0:
        raise DegenerateInputError("kurtosis undefined for zero-variance input")
    m4 = float(np.mean(dev**4))
    return m4 / (m2 * m2)


def first_four_cumulants(z) -> tuple[float, float, float, float]:
    """(k1, k2, k3, k4) from population central moments: k4 = m4 - 3*m2**2."""
    arr = _as_vector(z)
    k1 = float(arr.mean())
    dev = arr - k1
    m2 = float(np.mean(dev**2))
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    return k1, m2, m3, m4 - 3.0 * m2 * m2
