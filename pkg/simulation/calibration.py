"""
Fit simulator parameters to a (papers, citations, h) institution profile.

Fair counts pin the h-index to `target_h`, so the search only has to land the
total: for every exponent on the grid, bisection on the number of cited papers
finds the total closest to the target. Among the exponents that land within
tolerance, the one closest to the requested `base_exponent` wins.
"""

import logging
from dataclasses import replace

import numpy as np

from analytics.metrics import h_index

from .exceptions import InfeasibleTarget
from .generator import SimParams, Strategy, ranked_citation_counts

logger = logging.getLogger(__name__)

EXPONENT_GRID = tuple(np.round(np.arange(0.3, 2.0001, 0.05), 2))
CITATION_TOLERANCE = 0.02
H_TOLERANCE = 1


def parse_profile(text):
    """'939,6205,40' -> (939, 6205, 40)"""
    try:
        papers, citations, h = (int(part) for part in text.split(','))
    except ValueError:
        raise InfeasibleTarget(f'Profile must be PAPERS,CITATIONS,H, got {text!r}') from None
    return papers, citations, h


def _cited_for_total(full, citations, h):
    """Number of cited papers (>= h) whose ranked total is closest to `citations`"""
    totals = np.cumsum(full)
    lo, hi = max(h, 1), len(full)
    if totals[lo - 1] >= citations:
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if totals[mid - 1] >= citations:
            hi = mid
        else:
            lo = mid
    return lo if citations - totals[lo - 1] <= totals[hi - 1] - citations else hi


def _fit_exponent(base, exponent, citations, h):
    """(params, total, h) for this exponent, or None if the total misses the tolerance"""
    candidate = replace(base, base_exponent=float(exponent), cited_share=1.0)
    full = ranked_citation_counts(candidate)
    cited = _cited_for_total(full, citations, h)
    candidate = replace(candidate, cited_share=cited / base.n_papers)
    counts = ranked_citation_counts(candidate)
    total, achieved_h = int(counts.sum()), h_index(counts.tolist())
    if abs(total - citations) > CITATION_TOLERANCE * citations or abs(achieved_h - h) > H_TOLERANCE:
        return None
    return candidate, total, achieved_h


def calibrate(profile, seed=0, **overrides) -> SimParams:
    """Return fair SimParams reproducing `profile` for this seed.

    Papers match exactly, total citations within 2 % and h within 1.
    """
    papers, citations, h = profile
    if papers < 1 or h < 0 or citations < 0 or h > papers or h * h > citations:
        raise InfeasibleTarget(f'Inconsistent profile {profile}')

    base = SimParams(
        n_papers=papers,
        target_total_citations=citations,
        target_h=h,
        seed=seed,
        **{'strategy': Strategy.FAIR, **overrides},
    )
    if citations == 0:
        return replace(base, cited_share=0.0)

    preferred = base.base_exponent
    for exponent in sorted(EXPONENT_GRID, key=lambda e: (abs(e - preferred), e)):
        point = _fit_exponent(base, exponent, citations, h)
        if point is None:
            continue
        params, total, achieved_h = point
        logger.info(
            f"Calibrated {profile}: exponent={params.base_exponent} "
            f"cited_share={params.cited_share:.4f} -> {total} citations, h={achieved_h}"
        )
        return params

    raise InfeasibleTarget(f'Cannot reproduce profile {profile} within tolerance on any exponent')
