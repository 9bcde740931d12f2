import numpy as np
from loguru import logger
from typing import Optional, Tuple

from models.rotor_models import RotorParams, WavepacketSpec, StateVector, SplitStepApplicator, frozen_array
from models.otoc_models import OtocSeries, AlphaFit, LyapunovFit
from services.rotor_service import RotorService
from services.floquet_service import FloquetService, EDGE_OCCUPATION_LIMIT
from utils.error_handler import NormOverflowError, FitError, ParameterError

AMPLITUDE_LIMIT = 1e300
MIN_ALPHA_POINTS = 4
MIN_LYAPUNOV_POINTS = 3
# |d ln N / dt| below this counts as norm-preserving
NORM_FLAT_TOLERANCE = 1e-9


def _inner(a: np.ndarray, b: np.ndarray) -> complex:
    # np.sum reduces pairwise in a fixed order, unlike BLAS dot products
    return complex(np.sum(np.conj(a) * b))


def _late_slope(times: np.ndarray, values: np.ndarray, minimum: int = MIN_ALPHA_POINTS) -> Tuple[float, Tuple[int, int]]:
    """Least-squares slope of ln(values) over the last quartile of the finite, positive samples"""
    usable = (times >= 1) & np.isfinite(values) & (values > 0)
    t = times[usable]
    y = np.log(values[usable])
    count = max(minimum, int(np.ceil(t.size / 4)))
    if t.size < minimum:
        raise FitError(f"only {t.size} finite points available, need at least {minimum}", points=int(t.size))
    t, y = t[-count:], y[-count:]
    slope, _ = np.polyfit(t.astype(np.float64), y, 1)
    return float(slope), (int(t[0]), int(t[-1]))


class OtocService:
    """Out-of-time-order correlator C(t) = -<[p(t), p]^2> for the non-unitary kicked rotor.

    Heisenberg operators use the adjoint, p(t) = F^dagger^t p F^t, so each of the
    four propagators in the squared commutator grows like e^{alpha t}.
    """

    def __init__(self, floquet_service: Optional[FloquetService] = None, rotor_service: Optional[RotorService] = None):
        self.floquet_service = floquet_service or FloquetService()
        self.rotor_service = rotor_service or self.floquet_service.rotor_service

    def evolve_array(self, applicator: SplitStepApplicator, amplitudes: np.ndarray, steps: int, adjoint: bool = False) -> np.ndarray:
        if steps < 0:
            raise ParameterError(f"steps must be >= 0, got {steps}", steps=steps)
        psi = np.array(amplitudes, dtype=np.complex128, copy=True)
        for step in range(1, steps + 1):
            psi = self.floquet_service.apply_array(applicator, psi, adjoint)
            peak = np.max(np.abs(psi))
            if not np.isfinite(peak) or peak > AMPLITUDE_LIMIT:
                raise NormOverflowError(
                    f"norm overflow at step {step}: amplitudes exceed {AMPLITUDE_LIMIT:.0e}; use the normalized OTOC or fewer steps",
                    step=step
                )
        return psi

    def evolve(self, applicator: SplitStepApplicator, state: StateVector, steps: int, adjoint: bool = False) -> StateVector:
        """F^steps |psi> (or F^dagger^steps); the norm is left to grow or decay"""
        return StateVector(amplitudes=self.evolve_array(applicator, state.amplitudes, steps, adjoint))

    def _heisenberg_p(self, applicator: SplitStepApplicator, p: np.ndarray, psi: np.ndarray, t: int) -> np.ndarray:
        """p(t) psi = F^dagger^t p F^t psi"""
        forward = self.evolve_array(applicator, psi, t)
        return self.evolve_array(applicator, p * forward, t, adjoint=True)

    def _commutator(self, applicator: SplitStepApplicator, p: np.ndarray, psi: np.ndarray, t: int) -> np.ndarray:
        """[p(t), p] psi"""
        return self._heisenberg_p(applicator, p, p * psi, t) - p * self._heisenberg_p(applicator, p, psi, t)

    def otoc_series(self, params: RotorParams, wavepacket: WavepacketSpec, steps: int,
                    jitter: Optional[np.ndarray] = None) -> OtocSeries:
        if steps < 1:
            raise ParameterError(f"OTOC needs at least one step, got {steps}", steps=steps)
        jitter = self.rotor_service.zero_jitter(params) if jitter is None else jitter
        applicator = self.floquet_service.build_applicator(params, jitter)
        psi = self.rotor_service.gaussian_state(wavepacket, params).amplitudes
        p = params.momenta().astype(np.float64)

        logger.info(f"OTOC run: K={params.K}, lambda={params.lam}, hbar={params.hbar_eff}, dim={params.dimension}, T={steps}")

        c_values = np.zeros(steps + 1)
        norms = np.zeros(steps + 1)
        norms[0] = float(np.real(_inner(psi, psi)))
        max_imag_ratio = 0.0
        edge_warned = False
        current = psi.copy()

        for t in range(1, steps + 1):
            try:
                current = self.evolve_array(applicator, current, 1)
            except NormOverflowError:
                raise NormOverflowError(f"norm overflow at step {t} of the state evolution", step=t)
            norms[t] = float(np.real(_inner(current, current)))

            if not edge_warned:
                occupation = self.floquet_service.edge_occupation(current)
                if occupation > EDGE_OCCUPATION_LIMIT:
                    logger.warning(f"Edge occupation {occupation:.2e} at t={t} exceeds {EDGE_OCCUPATION_LIMIT:.0e}; increase N")
                    edge_warned = True

            u = self._commutator(applicator, p, psi, t)
            value = -_inner(psi, self._commutator(applicator, p, u, t))
            c_values[t] = value.real
            if value.real != 0:
                max_imag_ratio = max(max_imag_ratio, abs(value.imag) / abs(value.real))

        if max_imag_ratio > 1e-8:
            logger.warning(f"OTOC carries an imaginary part up to {max_imag_ratio:.2e} of its real part; reporting Re C(t)")
        else:
            logger.debug(f"Max |Im C| / |Re C| = {max_imag_ratio:.2e}")

        return OtocSeries(
            times=np.arange(steps + 1),
            c_raw=c_values,
            norm=norms,
            max_imag_ratio=max_imag_ratio,
        )

    def fit_alpha(self, series: OtocSeries) -> AlphaFit:
        """alpha from the late-time law C(t) ~ e^{4 alpha t}, clamped at zero.

        alpha is pinned to 0 whenever ln N(t) is flat.
        """
        slope, window = _late_slope(series.times, series.c_raw)
        alpha = slope / 4.0
        if alpha < 0:
            logger.warning(f"Late-time slope of ln C(t) is negative ({slope:.3e}); alpha clamped to 0")
            return AlphaFit(alpha=0.0, slope=slope, window=window, clamped=True)
        if self._norm_is_flat(series):
            logger.info(f"ln N(t) is flat; late-time slope {slope:.3e} of ln C(t) is not gain, alpha clamped to 0")
            return AlphaFit(alpha=0.0, slope=slope, window=window, clamped=True)
        return AlphaFit(alpha=alpha, slope=slope, window=window, clamped=False)

    def _norm_is_flat(self, series: OtocSeries) -> bool:
        try:
            return abs(self.norm_slope(series)) < NORM_FLAT_TOLERANCE
        except FitError:
            return False

    def norm_slope(self, series: OtocSeries) -> float:
        """Late-time slope of ln N(t); equals 2 alpha in the broken phase"""
        slope, _ = _late_slope(series.times, series.norm)
        return slope

    def normalize(self, series: OtocSeries, alpha: Optional[float] = None) -> OtocSeries:
        """C~(t) = e^{-4 alpha t} C(t); alpha defaults to the late-time fit"""
        clamped = False
        if alpha is None:
            fit = self.fit_alpha(series)
            alpha, clamped = fit.alpha, fit.clamped
        if not np.isfinite(alpha):
            raise ParameterError(f"alpha must be finite, got {alpha}")
        c_norm = np.exp(-4.0 * alpha * series.times) * series.c_raw
        return series.model_copy(update={
            "c_norm": frozen_array(c_norm),
            "alpha_fit": float(alpha),
            "alpha_clamped": clamped,
        })

    def lyapunov_fit(self, series: OtocSeries) -> LyapunovFit:
        """Fit ln C~(t) = ln a + 2 Lambda (t - 1) from t = 1 until the growth slows down.

        The window ends at the first t >= 2 whose log-increment
        ln C~(t+1) - ln C~(t) drops below half of the increment at t = 1.
        """
        if series.c_norm is None:
            raise FitError("normalize the series before fitting the Lyapunov exponent")
        times = series.times
        values = series.c_norm
        positive = (times >= 1) & np.isfinite(values) & (values > 0)
        start = np.flatnonzero(positive)
        if start.size < MIN_LYAPUNOV_POINTS:
            raise FitError("no exponential regime: fewer than 3 positive points after t = 0")

        # contiguous positive run starting at t = 1
        first = int(start[0])
        last = first
        while last + 1 < times.size and positive[last + 1]:
            last += 1
        t = times[first:last + 1]
        logs = np.log(values[first:last + 1])
        increments = np.diff(logs)
        if increments.size == 0 or increments[0] <= 0:
            raise FitError("no exponential regime: C~(t) does not grow after t = 1")

        end = t.size - 1
        for index in range(1, increments.size):
            if increments[index] < 0.5 * increments[0]:
                end = index
                break
        if end + 1 < MIN_LYAPUNOV_POINTS:
            raise FitError(f"no exponential regime: window t={int(t[0])}..{int(t[end])} is shorter than 3 points")

        window_t = t[:end + 1].astype(np.float64)
        slope, intercept = np.polyfit(window_t - 1.0, logs[:end + 1], 1)
        return LyapunovFit(lyapunov=float(slope / 2.0), amplitude=float(np.exp(intercept)), window=(int(t[0]), int(t[end])))

    def lyapunov(self, series: OtocSeries) -> float:
        return self.lyapunov_fit(series).lyapunov

    def analyze(self, series: OtocSeries, alpha: Optional[float] = None, require_lyapunov: bool = False) -> OtocSeries:
        """Normalize and attach the Lyapunov fit; a missing exponential regime is logged unless required"""
        series = self.normalize(series, alpha)
        try:
            fit = self.lyapunov_fit(series)
        except FitError as e:
            if require_lyapunov:
                raise
            logger.info(f"Lyapunov fit skipped: {e.message}")
            return series
        logger.info(f"Lyapunov exponent {fit.lyapunov:.4f} over t = {fit.window[0]}..{fit.window[1]}")
        return series.model_copy(update={"lambda_fit": fit.lyapunov, "fit_window": fit.window})
