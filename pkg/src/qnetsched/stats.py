"""Probability helpers: packet success via scan statistics, allocation sizing.

A packet of ``pairs`` pairs inside a window of ``window`` seconds is
produced by a run of Bernoulli attempts.  The chance that *some* run of
``window`` attempts inside ``trials`` attempts holds at least ``pairs``
successes is a discrete scan statistic; we use Naus' product-type
approximation ``1 - Q2 * (Q3 / Q2) ** (trials / window - 2)`` where
``Q2``/``Q3`` are the no-cluster probabilities over two and three windows.
"""

from __future__ import annotations

import math
from functools import lru_cache

from scipy.stats import binom

LOG_TINY = -745.0  # exp() underflows below this


class InvalidWindow(ValueError):
    pass


class Unsatisfiable(ValueError):
    pass


def _binom_pmf(successes: int, size: int, prob: float) -> float:
    if successes < 0 or successes > size or size < 0:
        return 0.0
    return float(binom.pmf(successes, size, prob))


def _binom_cdf(level: int, size: int, prob: float) -> float:
    if level < 0 or size < 0:
        return 0.0
    if level >= size:
        return 1.0
    return float(binom.cdf(level, size, prob))


@lru_cache(maxsize=65536)
def naus_q2_q3(need: int, window: int, prob: float) -> tuple[float, float]:
    """Probabilities of no ``need``-cluster in two and three windows of Bernoulli trials."""
    bk = _binom_pmf(need, window, prob)
    cdf_window = lambda level: _binom_cdf(level, window, prob)  # noqa: E731
    cdf_less = lambda level, shift: _binom_cdf(level, window - shift, prob)  # noqa: E731
    wp = window * prob
    q2 = cdf_window(need - 1) ** 2 - (need - 1) * bk * cdf_window(need - 2) + wp * bk * cdf_less(need - 3, 1)
    a1 = 2 * bk * cdf_window(need - 1) * ((need - 1) * cdf_window(need - 2) - wp * cdf_less(need - 3, 1))
    a2 = 0.5 * bk**2 * (
        (need - 1) * (need - 2) * cdf_window(need - 3)
        - 2 * (need - 2) * wp * cdf_less(need - 4, 1)
        + window * (window - 1) * prob * prob * cdf_less(need - 5, 2)
    )
    a3 = sum(_binom_pmf(2 * need - r, window, prob) * cdf_window(r - 1) ** 2 for r in range(1, need))
    a4 = sum(
        _binom_pmf(2 * need - r, window, prob)
        * _binom_pmf(r, window, prob)
        * ((r - 1) * cdf_window(r - 2) - wp * cdf_less(r - 3, 1))
        for r in range(2, need)
    )
    q3 = cdf_window(need - 1) ** 3 - a1 + a2 + a3 - a4
    q2 = min(1.0, max(q2, 0.0))
    q3 = min(q2, max(q3, 0.0))
    return q2, q3


def scan_probability(threshold: int, window: int, trials: int, prob: float) -> float:
    """P(some run of ``window`` consecutive trials out of ``trials`` has >= ``threshold`` successes)."""
    if threshold <= 0:
        return 1.0
    if trials < threshold or prob <= 0.0:
        return 0.0
    if prob >= 1.0:
        return 1.0
    window = min(window, trials)
    if threshold == 1:
        return 1.0 - (1.0 - prob) ** trials
    q1 = _binom_cdf(threshold - 1, window, prob)
    if trials == window:
        return 1.0 - q1
    q2, q3 = naus_q2_q3(threshold, window, prob)
    ratio = trials / window
    if ratio < 2.0:
        # between one and two windows: interpolate the no-cluster probability
        no_cluster = q1 + (ratio - 1.0) * (q2 - q1)
    elif q2 <= 0.0:
        no_cluster = 0.0
    elif q3 <= 0.0:
        no_cluster = 0.0 if ratio > 2.0 else q2
    else:
        no_cluster = q2 * (q3 / q2) ** (ratio - 2.0)
    return min(1.0, max(0.0, 1.0 - no_cluster))


def attempts(duration: float, attempt_period: float) -> int:
    return int(math.floor(duration / attempt_period + 1e-9))


def packet_success_probability(
    rate: float, window: float, pairs: int, duration: float, attempt_period: float
) -> float:
    """Chance that a PGA of length ``duration`` yields ``pairs`` pairs inside one ``window``."""
    if window <= 0 or attempt_period <= 0:
        raise InvalidWindow("window and attempt period must be positive")
    if window > duration:
        raise InvalidWindow(f"window {window} longer than attempt duration {duration}")
    p_succ = rate * attempt_period
    if not 0 < p_succ <= 1:
        raise ValueError(f"per-attempt success {p_succ} outside (0, 1]")
    trials = attempts(duration, attempt_period)
    w_att = max(1, attempts(window, attempt_period))
    return scan_probability(int(pairs), w_att, trials, p_succ)


@lru_cache(maxsize=65536)
def _no_cluster_one_window(threshold: int, window: int, prob: float) -> float:
    return _binom_cdf(threshold - 1, window, prob)


def _scan_fast(threshold: int, window: int, trials: int, prob: float) -> float:
    """``scan_probability`` with the single-window term cached."""
    if threshold <= 0:
        return 1.0
    if trials < threshold:
        return 0.0
    if threshold == 1 or window >= trials:
        return scan_probability(threshold, window, trials, prob)
    q1 = _no_cluster_one_window(threshold, window, prob)
    q2, q3 = naus_q2_q3(threshold, window, prob)
    ratio = trials / window
    if ratio < 2.0:
        no_cluster = q1 + (ratio - 1.0) * (q2 - q1)
    elif q2 <= 0.0:
        no_cluster = 0.0
    elif q3 <= 0.0:
        no_cluster = 0.0 if ratio > 2.0 else q2
    else:
        no_cluster = q2 * (q3 / q2) ** (ratio - 2.0)
    return min(1.0, max(0.0, 1.0 - no_cluster))


def _attempt_guess(target: float, threshold: int, window: int, prob: float) -> int:
    """Closed-form attempt count from inverting the approximation."""
    miss = 1.0 - target
    if threshold == 1:
        return max(1, math.ceil(math.log(miss) / math.log1p(-prob)))
    q1 = _no_cluster_one_window(threshold, window, prob)
    if q1 <= miss:
        return window
    q2, q3 = naus_q2_q3(threshold, window, prob)
    if q2 <= miss:
        ratio = 1.0 + (q1 - miss) / (q1 - q2) if q1 > q2 else 2.0
    elif 0.0 < q3 < q2:
        ratio = 2.0 + math.log(miss / q2) / math.log(q3 / q2)
    else:
        ratio = 3.0
    return max(window, math.ceil(ratio * window))


def attempts_for_probability(target: float, threshold: int, window: int, prob: float, limit: int) -> int | None:
    """Fewest attempts ``count >= max(window, threshold)`` reaching ``target``; None if above ``limit``.

    Starts from the closed-form inverse and walks to the exact boundary;
    falls back to bracketing plus bisection (the probability is monotone in the count).
    """
    floor = max(window, threshold)

    def ok(count: int) -> bool:
        return _scan_fast(threshold, window, count, prob) >= target

    guess = max(floor, _attempt_guess(target, threshold, window, prob))
    count = min(guess, limit + 1)
    for _ in range(64):
        if count > limit:
            if ok(limit):
                count = limit
                continue
            return None
        if ok(count):
            if count == floor or not ok(count - 1):
                return count
            count -= 1
        else:
            count += 1
    lo, hi = floor - 1, floor
    while not ok(hi):
        lo, hi = hi, hi * 2
        if lo > limit:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi if hi <= limit else None


def duration_for_probability(
    target: float,
    rate: float,
    window: float,
    pairs: int,
    attempt_period: float,
    max_duration: float = math.inf,
) -> float | None:
    """Shortest attempt-aligned duration reaching ``target``; None if above ``max_duration``."""
    if not 0 < target < 1:
        raise ValueError("target probability must lie in (0, 1)")
    p_succ = rate * attempt_period
    if not 0 < p_succ <= 1:
        raise ValueError(f"per-attempt success {p_succ} outside (0, 1]")
    w_att = max(1, attempts(window, attempt_period))
    limit = attempts(max_duration, attempt_period) if math.isfinite(max_duration) else 1 << 40
    count = attempts_for_probability(target, int(pairs), w_att, p_succ, limit)
    return None if count is None else count * attempt_period


# ---------------------------------------------------------------------------
# minimal allocation
# ---------------------------------------------------------------------------

ELL_CEILING = 10**6


def hoeffding_bound(trials: int, prob: float, n_inst: int) -> float:
    """Hoeffding upper bound on P[Binomial(trials, prob) < n_inst]."""
    gap = trials * prob - n_inst
    if gap < 0:
        return 1.0
    return math.exp(max(LOG_TINY, -2.0 * gap * gap / trials))


def _certified(ell: int, prob: float, n_inst: int, n_si: int, epsilon: float) -> bool:
    trials = ell * n_si
    if trials * prob < n_inst:
        return False
    return hoeffding_bound(trials, prob, n_inst) < epsilon


def minimal_allocation(
    p_packet: float, n_inst: int, n_si: int, epsilon: float, ceiling: int = ELL_CEILING
) -> int:
    """Smallest per-interval PGA count whose Hoeffding bound on failure is below epsilon.

    With ``p_packet == 1`` every attempt succeeds, so exactly enough attempts
    to reach ``n_inst`` suffice and the bound is not consulted.
    """
    if not 0 < p_packet <= 1:
        raise ValueError("p_packet must lie in (0, 1]")
    if n_si < 1:
        raise ValueError("need at least one scheduling interval")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if n_inst <= 0:
        return 1
    if p_packet >= 1.0:
        return max(1, math.ceil(n_inst / n_si))
    # closed-form start: (Np - n)^2 > (N/2) ln(1/eps) with Np >= n
    log_term = 0.5 * math.log(1.0 / epsilon)
    lead = p_packet * p_packet
    linear = -(2 * p_packet * n_inst + log_term)
    disc = linear * linear - 4 * lead * n_inst * n_inst
    n_trials = (-linear + math.sqrt(max(disc, 0.0))) / (2 * lead)
    ell = max(1, math.floor(n_trials / n_si))
    while ell > 1 and _certified(ell - 1, p_packet, n_inst, n_si, epsilon):
        ell -= 1
    while not _certified(ell, p_packet, n_inst, n_si, epsilon):
        ell += 1
        if ell > ceiling:
            raise Unsatisfiable(
                f"no allocation up to {ceiling} certifies p={p_packet}, n_inst={n_inst}, "
                f"n_SI={n_si}, eps={epsilon}"
            )
    if ell > ceiling:
        raise Unsatisfiable(f"allocation {ell} exceeds ceiling {ceiling}")
    return ell


def binomial_shortfall(trials: int, prob: float, n_inst: int) -> float:
    """Exact P[Binomial(trials, prob) < n_inst]."""
    if n_inst <= 0:
        return 0.0
    return float(binom.cdf(n_inst - 1, trials, prob))
