"""Monte Carlo verification reports.

A report compares an empirical event frequency against a stated
probability bound.  The verdict is PASS when the frequency does not
exceed the bound by more than three binomial standard errors; Wilson
95% interval endpoints are carried along for context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["McReport", "wilson_interval"]

#: Two-sided 95% normal quantile used by the Wilson interval.
_Z95 = 1.959963984540054

#: PASS margin in binomial standard errors, used project-wide.
SIGMA_MARGIN = 3.0


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Returns
    -------
    (low, high) : tuple of float
        95% confidence limits by default.  ``(0, 1)`` when ``trials == 0``.
    """
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class McReport:
    """Outcome of one Monte Carlo check of a probability bound.

    Attributes
    ----------
    name : str
        Identifier of the checked bound (and generator, where relevant).
    event_freq : float
        Empirical frequency of the tail event.
    stderr : float
        Binomial standard error ``sqrt(p (1-p) / trials)``.
    stated_bound : float
        The probability bound being verified.
    trials : int
        Number of Monte Carlo trials.
    verdict : bool
        PASS iff ``event_freq - 3 * stderr <= stated_bound``.
    vacuous : bool
        True when the stated bound exceeds one; reported verbatim, never
        clipped.
    wilson_low, wilson_high : float
        Wilson 95% interval for the event probability.
    meta : dict
        Free-form run details (seed, dimension, parameters).
    """

    name: str
    event_freq: float
    stderr: float
    stated_bound: float
    trials: int
    verdict: bool
    vacuous: bool
    wilson_low: float
    wilson_high: float
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_counts(
        cls,
        name: str,
        events: int,
        trials: int,
        stated_bound: float,
        meta: dict | None = None,
    ) -> "McReport":
        if trials <= 0:
            raise ValueError("trials must be positive")
        if events < 0 or events > trials:
            raise ValueError(f"event count {events} outside [0, {trials}]")
        p = events / trials
        stderr = math.sqrt(p * (1.0 - p) / trials)
        low, high = wilson_interval(events, trials)
        return cls(
            name=name,
            event_freq=p,
            stderr=stderr,
            stated_bound=float(stated_bound),
            trials=trials,
            verdict=(p - SIGMA_MARGIN * stderr) <= stated_bound,
            vacuous=stated_bound > 1.0,
            wilson_low=low,
            wilson_high=high,
            meta=dict(meta or {}),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "event_freq": self.event_freq,
            "stderr": self.stderr,
            "stated_bound": self.stated_bound,
            "trials": self.trials,
            "verdict": "PASS" if self.verdict else "FAIL",
            "vacuous": self.vacuous,
            "wilson_low": self.wilson_low,
            "wilson_high": self.wilson_high,
            "meta": self.meta,
        }
