"""
Humpback detection around the h-paper.

Residuals against the baseline are scored on log(1 + c) in robust sigma units.
A hump is the longest contiguous run of ranks scoring at least `z_on` that
reaches into the h-neighbourhood; it may extend below the h-paper.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .baseline import BaselineFit, log_residuals
from .config import AuditConfig
from .exceptions import RankMismatch
from .metrics import RankCitationCurve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HumpRegion:
    rank_interval: tuple
    citation_band: tuple
    member_ids: frozenset
    excess_mass: float
    peak_z: float
    contains_h: bool

    @property
    def size(self):
        return self.rank_interval[1] - self.rank_interval[0] + 1

    def as_dict(self):
        return {
            'rank_interval': list(self.rank_interval),
            'citation_band': list(self.citation_band),
            'member_ids': sorted(self.member_ids),
            'members': self.size,
            'excess_mass': self.excess_mass,
            'peak_z': self.peak_z,
            'contains_h': self.contains_h,
        }


@dataclass(frozen=True)
class Run:
    start: int
    end: int
    mass: float
    peak: float

    @property
    def length(self):
        return self.end - self.start + 1


def zscores(curve: RankCitationCurve, fit: BaselineFit) -> np.ndarray:
    return log_residuals(curve.citations, fit.fitted_array) / fit.residual_sigma


def find_runs(z, threshold):
    """Maximal runs (1-based inclusive ranks) where z >= threshold"""
    runs = []
    start = None
    for index, value in enumerate(np.append(z, -np.inf)):
        if value >= threshold and start is None:
            start = index
        elif value < threshold and start is not None:
            segment = z[start:index]
            runs.append(Run(start + 1, index, float(segment.sum()), float(segment.max())))
            start = None
    return runs


def _region(curve, run, h):
    entries = curve.entries[run.start - 1:run.end]
    return HumpRegion(
        rank_interval=(run.start, run.end),
        citation_band=(entries[-1].citations, entries[0].citations),
        member_ids=frozenset(e.pub_id for e in entries),
        excess_mass=run.mass,
        peak_z=run.peak,
        contains_h=run.start <= h <= run.end,
    )


def detect_hump(curve: RankCitationCurve, fit: BaselineFit, h: int, config: AuditConfig = None, notes=None):
    """Return the HumpRegion around the h-paper, or None.

    Qualifying runs away from the h-neighbourhood are appended to `notes`.
    """
    config = config or AuditConfig()
    z = zscores(curve, fit)
    near_lo, near_hi = h - config.near_h, h + config.near_h

    candidates = []
    for run in find_runs(z, config.z_on):
        if run.end >= near_lo and run.start <= near_hi:
            candidates.append(run)
        elif notes is not None and run.length >= config.min_run:
            notes.append(
                f'residual run at ranks {run.start}-{run.end} ({run.length} ranks, mass {run.mass:.1f}) '
                f'is away from the h-paper and is not a humpback'
            )

    if not candidates:
        return None
    best = max(candidates, key=lambda r: (r.length, r.mass, -r.start))
    if best.length < config.min_run or best.mass < config.min_mass:
        logger.debug(f"Near-h run {best.start}-{best.end} too small (length {best.length}, mass {best.mass:.2f})")
        return None
    logger.info(f"Humpback at ranks {best.start}-{best.end}, peak z {best.peak:.2f}, mass {best.mass:.1f}")
    return _region(curve, best, h)


def hump_members(corpus, curve: RankCitationCurve, hump: HumpRegion) -> frozenset:
    lo, hi = hump.rank_interval
    if lo < 1 or hi > len(curve) or lo > hi:
        raise RankMismatch(f'Hump interval [{lo}, {hi}] does not fit a curve of {len(curve)} ranks')
    members = frozenset(e.pub_id for e in curve.entries[lo - 1:hi])
    if corpus is not None:
        for pub_id in members:
            corpus.get(pub_id)
    return members


def band_members(curve: RankCitationCurve, hump: HumpRegion) -> frozenset:
    """Publications whose citation count lies in the hump's citation band"""
    low, high = hump.citation_band
    return frozenset(e.pub_id for e in curve.entries if low <= e.citations <= high)
