import numpy as np
from scipy.spatial import cKDTree
from scipy import stats as sp_stats
from loguru import logger
from typing import Optional, Tuple

from models.spectrum_models import RatioStats, UnfoldedSpectrum, SpacingHistogram
from utils.error_handler import DegenerateSpectrumError, ParameterError

# Points closer than this fraction of the spectrum's extent count as duplicates
DUPLICATE_TOLERANCE = 1e-13


def goe_surmise(s):
    """Wigner surmise for the GOE, P(s) = (pi s / 2) exp(-pi s^2 / 4)"""
    s = np.asarray(s, dtype=np.float64)
    return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s ** 2)


def goe_surmise_cdf(s):
    s = np.asarray(s, dtype=np.float64)
    return 1.0 - np.exp(-0.25 * np.pi * np.clip(s, 0.0, None) ** 2)


def poisson_spacing(s):
    s = np.asarray(s, dtype=np.float64)
    return np.exp(-s)


def _as_points(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128).ravel()
    return np.column_stack([z.real, z.imag])


def _order_neighbors(distances: np.ndarray, indices: np.ndarray, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sort each row by (distance, index) so equidistant neighbours resolve to the smaller index"""
    by_index = np.argsort(indices, axis=1, kind="stable")
    distances = np.take_along_axis(distances, by_index, axis=1)
    indices = np.take_along_axis(indices, by_index, axis=1)
    by_distance = np.argsort(distances, axis=1, kind="stable")
    distances = np.take_along_axis(distances, by_distance, axis=1)
    indices = np.take_along_axis(indices, by_distance, axis=1)
    return distances[:, :count], indices[:, :count]


def brute_force_neighbors(z: np.ndarray, count: int = 2) -> Tuple[np.ndarray, np.ndarray]:
    """O(n^2) nearest-neighbour search in the complex plane, ties to the smaller index"""
    z = np.asarray(z, dtype=np.complex128).ravel()
    distances = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(distances, np.inf)
    indices = np.broadcast_to(np.arange(z.size), distances.shape).copy()
    return _order_neighbors(distances, indices, count)


class StatsService:
    """Level spacing ratios (complex and real), unfolding and spacing distributions"""

    def __init__(self, unfold_neighbors: int = 10):
        self.unfold_neighbors = unfold_neighbors

    def neighbors(self, z: np.ndarray, count: int = 2) -> Tuple[np.ndarray, np.ndarray]:
        """Distances and indices of the `count` closest other points, via a k-d tree"""
        z = np.asarray(z, dtype=np.complex128).ravel()
        if z.size <= count:
            raise ParameterError(f"need more than {count} points, got {z.size}", points=int(z.size))
        tree = cKDTree(_as_points(z))
        # one spare candidate beyond the self match to resolve ties deterministically
        k = min(z.size, count + 2)
        distances, indices = tree.query(_as_points(z), k=k)
        own = indices == np.arange(z.size)[:, None]
        distances = np.where(own, np.inf, distances)
        return _order_neighbors(distances, indices, count)

    def _check_duplicates(self, z: np.ndarray, nn_distance: np.ndarray) -> None:
        scale = float(np.max(np.abs(z - z.mean()))) if z.size else 0.0
        limit = DUPLICATE_TOLERANCE * scale
        duplicates = np.flatnonzero(nn_distance <= limit)
        if scale == 0.0 or duplicates.size:
            first = int(duplicates[0]) if duplicates.size else 0
            raise DegenerateSpectrumError(
                f"degenerate spectrum: {max(duplicates.size, 1)} levels coincide (first at index {first}); "
                "enable the mass jitter to lift degeneracies",
                index=first
            )

    def clsr(self, z: np.ndarray) -> RatioStats:
        """xi_g = (z_NN - z_g) / (z_NNN - z_g); <r> = mean |xi|, -<cos theta> = -mean Re(xi)/|xi|"""
        z = np.asarray(z, dtype=np.complex128).ravel()
        if z.size < 3:
            raise ParameterError(f"complex spacing ratio needs at least 3 levels, got {z.size}", points=int(z.size))
        distances, indices = self.neighbors(z, count=2)
        self._check_duplicates(z, distances[:, 0])

        xis = (z[indices[:, 0]] - z) / (z[indices[:, 1]] - z)
        r = np.abs(xis)
        cos_theta = xis.real / r
        mean_r = float(np.clip(np.mean(r), 0.0, 1.0))
        mean_neg_cos = float(np.clip(-np.mean(cos_theta), -1.0, 1.0))
        logger.debug(f"CLSR over {z.size} levels: <r> = {mean_r:.5f}, -<cos> = {mean_neg_cos:.5f}")
        return RatioStats(xis=xis, mean_r=mean_r, mean_neg_cos=mean_neg_cos, count=int(z.size))

    def rlsr(self, e: np.ndarray) -> float:
        """Mean of min/max of adjacent gaps of the sorted real spectrum"""
        e = np.sort(np.asarray(e, dtype=np.float64).ravel())
        if e.size < 3:
            raise ParameterError(f"real spacing ratio needs at least 3 levels, got {e.size}", points=int(e.size))
        gaps = np.diff(e)
        zero = np.flatnonzero(gaps == 0)
        if zero.size:
            raise DegenerateSpectrumError(
                f"degenerate spectrum: zero gap at sorted index {int(zero[0])}; enable the mass jitter to lift degeneracies",
                index=int(zero[0])
            )
        ratios = np.minimum(gaps[:-1], gaps[1:]) / np.maximum(gaps[:-1], gaps[1:])
        return float(np.mean(ratios))

    def unfold_real(self, e: np.ndarray, window: int) -> UnfoldedSpectrum:
        """Spacing s_i = e_{i+1} - e_i divided by the mean spacing between levels i - window and i + window"""
        if window < 1:
            raise ParameterError(f"unfolding window must be >= 1, got {window}", window=window)
        e = np.sort(np.asarray(e, dtype=np.float64).ravel())
        if e.size < 2:
            raise ParameterError("unfolding needs at least 2 levels", points=int(e.size))
        spacings = np.diff(e)
        i = np.arange(spacings.size)
        lo = np.maximum(0, i - window)
        hi = np.minimum(e.size - 1, i + window)
        local_mean = (e[hi] - e[lo]) / (hi - lo)
        unfolded = np.divide(spacings, local_mean, out=np.zeros_like(spacings), where=local_mean > 0)
        return UnfoldedSpectrum(spacings=unfolded)

    def unfold_complex(self, z: np.ndarray, n: Optional[int] = None) -> UnfoldedSpectrum:
        """rho_k = 3n / (pi (r_{k,n-1}^2 + r_{k,n}^2 + r_{k,n+1}^2)); spacing r_{k,1} sqrt(rho_k)"""
        n = n or self.unfold_neighbors
        z = np.asarray(z, dtype=np.complex128).ravel()
        if n < 2:
            raise ParameterError(f"unfolding neighbourhood n must be >= 2, got {n}", n=n)
        if z.size < n + 2:
            raise ParameterError(f"complex unfolding with n={n} needs at least {n + 2} points, got {z.size}", points=int(z.size))
        if z.size < 10 * (n + 2):
            logger.warning(f"Only {z.size} points for complex unfolding with n={n}; local densities will be noisy")

        distances, _ = self.neighbors(z, count=n + 1)
        self._check_duplicates(z, distances[:, 0])
        shells = distances[:, n - 2:n + 1] ** 2
        densities = 3.0 * n / (np.pi * np.sum(shells, axis=1))
        spacings = distances[:, 0] * np.sqrt(densities)
        return UnfoldedSpectrum(spacings=spacings, densities=densities)

    def spacing_histogram(self, spacings: np.ndarray, bins=50) -> SpacingHistogram:
        spacings = np.asarray(spacings, dtype=np.float64).ravel()
        if spacings.size == 0:
            raise ParameterError("cannot histogram an empty set of spacings")
        density, edges = np.histogram(spacings, bins=bins, density=True)
        return SpacingHistogram(edges=edges, density=density, count=int(spacings.size))

    def goe_surmise(self, s):
        return goe_surmise(s)

    def ks_distance(self, spacings: np.ndarray, cdf=goe_surmise_cdf) -> float:
        """Kolmogorov-Smirnov distance between the empirical spacing CDF and the surmise CDF"""
        spacings = np.asarray(spacings, dtype=np.float64).ravel()
        if spacings.size == 0:
            raise ParameterError("cannot compare an empty set of spacings")
        return float(sp_stats.kstest(spacings, cdf).statistic)
