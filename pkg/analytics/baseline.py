"""
Smooth reference decay for a rank-citation curve.

The default model is a power law c(r) = C * r**-beta fitted by least squares
in log-log space. Ranks around the h-paper are left out of the fit so a bulge
there cannot pull the baseline towards itself; by default the fit also stops
at the top of that window and is extrapolated downwards. When the log-log fit
explains too little variance, or is degenerate, a convex non-increasing
regression over every rank outside the window is used instead.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import nnls
from scipy.stats import linregress, median_abs_deviation

from .config import AuditConfig
from .exceptions import DegenerateFit, TooFewPoints
from .metrics import RankCitationCurve, h_index

logger = logging.getLogger(__name__)

MAX_KNOTS = 150
MIN_HEAD_POINTS = 5


class BaselineModel(str, Enum):
    POWER_LAW = 'power_law'
    ISOTONIC_CONVEX = 'isotonic_convex'


@dataclass(frozen=True)
class BaselineFit:
    model: BaselineModel
    params: dict
    fitted: tuple
    residual_sigma: float
    excluded_window: tuple
    r_squared: float = None
    notes: tuple = field(default_factory=tuple)

    @property
    def fitted_array(self) -> np.ndarray:
        return np.asarray(self.fitted, dtype=float)

    def as_dict(self):
        return {
            'model': self.model.value,
            'params': dict(sorted(self.params.items())),
            'fitted': list(self.fitted),
            'residual_sigma': self.residual_sigma,
            'excluded_window': list(self.excluded_window),
            'r_squared': self.r_squared,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            model=BaselineModel(data['model']),
            params=dict(data['params']),
            fitted=tuple(float(v) for v in data['fitted']),
            residual_sigma=float(data['residual_sigma']),
            excluded_window=tuple(data['excluded_window']),
            r_squared=data.get('r_squared'),
        )


def exclusion_mask(n, h, window):
    ranks = np.arange(1, n + 1)
    lo, hi = max(1, h - window), min(n, h + window)
    if h <= 0 or lo > hi:
        return np.zeros(n, dtype=bool), (0, 0)
    return (ranks >= lo) & (ranks <= hi), (lo, hi)


def log_residuals(counts, fitted):
    return np.log1p(counts) - np.log1p(fitted)


def _robust_sigma(residuals, floor):
    if residuals.size == 0:
        return floor
    return max(float(median_abs_deviation(residuals, scale='normal')), floor)


def fit_power_law(ranks, counts):
    """Least-squares line through (log r, log c); returns (C, beta, r_squared)"""
    x = np.log(ranks.astype(float))
    y = np.log(counts.astype(float))
    if np.ptp(y) == 0:
        raise DegenerateFit('All fitted counts are equal')
    result = linregress(x, y)
    beta = -result.slope
    if not np.isfinite(beta) or beta <= 0:
        raise DegenerateFit(f'Log-log slope {result.slope:.4f} is not a decay')
    return float(np.exp(result.intercept)), float(beta), float(result.rvalue ** 2)


def fit_convex_decreasing(ranks, counts, n):
    """Non-negative combination of hinges (t - r)+ plus a constant: convex and non-increasing"""
    knots = np.unique(np.round(np.geomspace(2, n + 1, num=min(MAX_KNOTS, n)))).astype(float)
    all_ranks = np.arange(1, n + 1, dtype=float)

    def design(r):
        return np.column_stack([np.ones_like(r)] + [np.clip(t - r, 0, None) for t in knots])

    coef, _ = nnls(design(ranks.astype(float)), counts.astype(float))
    return design(all_ranks) @ coef, knots, coef


def fit_mask(ranks, positive, excluded, window, config, notes):
    """Ranks the power law is fitted on.

    With `fit_span = head` only the cited ranks above the exclusion window take
    part, so bulges anywhere below the h-paper cannot tilt the fit. Too short a
    head falls back to every cited rank outside the window.
    """
    outside = positive & ~excluded
    if config.fit_span == 'outside_window':
        return outside
    head = outside & (ranks < window[0])
    if head.sum() >= MIN_HEAD_POINTS:
        return head
    notes.append(f'only {int(head.sum())} cited ranks above the exclusion window, fitting all ranks outside it')
    return outside


def fit_baseline(curve: RankCitationCurve, config: AuditConfig = None, h=None) -> BaselineFit:
    config = config or AuditConfig()
    counts = curve.citations
    n = len(counts)
    ranks = np.arange(1, n + 1)
    positive = counts >= 1
    if positive.sum() < config.min_points:
        raise TooFewPoints(
            f'{int(positive.sum())} cited publications, need at least {config.min_points}',
            points=int(positive.sum()),
        )

    if h is None:
        h = h_index(curve)
    excluded, window = exclusion_mask(n, h, config.exclude_window)
    notes = []
    mask = fit_mask(ranks, positive, excluded, window, config, notes)
    if mask.sum() < 3:
        raise TooFewPoints('Too few cited publications outside the exclusion window')

    try:
        coefficient, beta, r_squared = fit_power_law(ranks[mask], counts[mask])
        if r_squared >= config.r2_threshold:
            fitted = coefficient * ranks.astype(float) ** -beta
            sigma = _robust_sigma(log_residuals(counts[mask], fitted[mask]), config.sigma_floor)
            logger.debug(f"Power-law baseline C={coefficient:.3f} beta={beta:.4f} R2={r_squared:.3f} sigma={sigma:.4f}")
            return BaselineFit(
                model=BaselineModel.POWER_LAW,
                params={'coefficient': coefficient, 'exponent': beta},
                fitted=tuple(float(v) for v in fitted),
                residual_sigma=sigma,
                excluded_window=window,
                r_squared=r_squared,
                notes=tuple(notes),
            )
        notes.append(f'power-law R2 {r_squared:.3f} below {config.r2_threshold}')
    except DegenerateFit as e:
        notes.append(f'power-law fit degenerate: {e}')
        r_squared = None

    logger.info(f"Falling back to convex regression ({notes[-1]})")
    included = ~excluded
    fitted, knots, coef = fit_convex_decreasing(ranks[included], counts[included], n)
    sigma = _robust_sigma(log_residuals(counts[included], fitted[included]), config.sigma_floor)
    return BaselineFit(
        model=BaselineModel.ISOTONIC_CONVEX,
        params={'intercept': float(coef[0]), 'knots': int(len(knots)), 'active_knots': int(np.count_nonzero(coef[1:]))},
        fitted=tuple(float(v) for v in fitted),
        residual_sigma=sigma,
        excluded_window=window,
        r_squared=r_squared,
        notes=tuple(notes),
    )
