"""
Decay-exponent algebra and power-law fitting.

Exponents returned by the ``exponent_*`` functions are decay exponents
``sigma`` in ``||u(t)||^2 <= C (1 + t)^(-sigma)``, so they are positive.
Fitted exponents in :class:`DecayFit` are slopes of ``log value`` against
``log(1 + t)`` and are therefore negative for decaying data; compare a fit
with ``-sigma``.

The arithmetic is written generically, so passing :class:`fractions.Fraction`
arguments gives exact rational results.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

Number = float | Fraction


def exponent_thm_nse(beta: Number) -> Number:
    """``min{3/2, (3 beta - 2)/2}`` for the damped Navier-Stokes system (alpha = 1)."""
    if beta < 1:
        raise ValueError(f"requires beta >= 1, got {beta!r}")
    return min(Fraction(3, 2) if isinstance(beta, Fraction) else 1.5, (3 * beta - 2) / 2)


def _cap(alpha: Number) -> Number:
    return 3 / (2 * alpha)


def _damping_branch(alpha: Number, beta: Number) -> Number:
    return (3 * beta - 2 * alpha) / (2 * alpha)


def exponent_thm_gnse(alpha: Number, beta: Number) -> Number:
    """``min{3/(2 alpha), (3 beta - 2 alpha)/(2 alpha)}`` for the fractional damped system."""
    if not 0 < alpha < Fraction(5, 4):
        raise ValueError(f"the decay theorem assumes 0 < alpha < 5/4, got alpha={alpha!r}")
    if beta < 1:
        raise ValueError(f"the decay theorem assumes beta >= 1, got beta={beta!r}")
    return min(_cap(alpha), _damping_branch(alpha, beta))


# Earlier results on the same systems, as (hypothesis check, message, formula).
def _cai_lei(beta):
    if not beta > Fraction(7, 3):
        raise ValueError(f"Cai-Lei rate needs beta > 7/3, got beta={beta!r}")
    half = Fraction(1, 2) if isinstance(beta, Fraction) else 0.5
    return min(half, (3 * beta - 7) / (2 * (beta + 1)))


def _jia_zhang_dong(beta, mu):
    if not beta >= Fraction(10, 3):
        raise ValueError(f"Jia-Zhang-Dong rate needs beta >= 10/3, got beta={beta!r}")
    if not mu > 0:
        raise ValueError(f"Jia-Zhang-Dong rate needs a heat-flow rate mu > 0, got mu={mu!r}")
    return min(mu, Fraction(3, 2) if isinstance(mu, Fraction) else 1.5)


def _jiang(beta):
    if not beta >= 3:
        raise ValueError(f"Jiang rate needs beta >= 3, got beta={beta!r}")
    return Fraction(3, 2) if isinstance(beta, Fraction) else 1.5


def _jiu_yu(alpha, p):
    if not 0 < alpha < Fraction(5, 4):
        raise ValueError(f"Jiu-Yu rate needs 0 < alpha < 5/4, got alpha={alpha!r}")
    if not max(1, 1 / (3 - 2 * alpha)) <= p < 2:
        raise ValueError(f"Jiu-Yu rate needs max(1, 1/(3 - 2 alpha)) <= p < 2, got p={p!r}")
    return 3 / (2 * alpha) * (2 / p - 1)


def _duan(alpha):
    if not 0 < alpha < 2:
        raise ValueError(f"Duan rate needs 0 < alpha < 2, got alpha={alpha!r}")
    return 3 / (2 * alpha)


CATALOG = {
    "cai_lei": _cai_lei,
    "jia_zhang_dong": _jia_zhang_dong,
    "jiang": _jiang,
    "jiu_yu": _jiu_yu,
    "duan": _duan,
}


def exponent_catalog(entry: str, **params) -> Number:
    """Decay exponent of a previously published estimate.

    Parameters per entry: ``cai_lei(beta)``, ``jia_zhang_dong(beta, mu)``,
    ``jiang(beta)``, ``jiu_yu(alpha, p)``, ``duan(alpha)``.
    """
    try:
        fn = CATALOG[entry]
    except KeyError:
        raise ValueError(f"unknown catalog entry {entry!r}; choose from {sorted(CATALOG)}") from None
    return fn(**params)


@dataclass(frozen=True)
class BootstrapStep:
    iteration: int
    w_exponent: Number
    u_exponent: Number


class BootstrapDidNotConverge(RuntimeError):
    pass


def bootstrap_exponents(alpha: Number, beta: Number, max_iter: int = 10) -> list[BootstrapStep]:
    """Iterate the energy-inequality bootstrap on decay exponents until it is stationary.

    Starting from the bare bound ``||u||^2 <= C`` (exponent 0), each pass gives

        e(w) = min{3/(2a), (2 - a)/a + e(u), (3b - 2a)/(2a)}
        e(u) = min{3/(2a), e(w)}

    The ``(2 - a)/a`` gain comes from integrating the ``(1 + t)^(-2/a)``
    coefficient with Fourier splitting; ``3/(2a)`` is the heat-flow rate.
    Returns every pass up to and including the first one that repeats its
    predecessor.
    """
    if not 0 < alpha < Fraction(5, 4) or beta < 1:
        raise ValueError(f"bootstrap needs 0 < alpha < 5/4 and beta >= 1, got ({alpha!r}, {beta!r})")
    cap = _cap(alpha)
    gain = (2 - alpha) / alpha
    damping = _damping_branch(alpha, beta)

    steps: list[BootstrapStep] = []
    e_u = 0 * alpha
    for it in range(1, max_iter + 1):
        e_w = min(cap, gain + e_u, damping)
        new_u = min(cap, e_w)
        steps.append(BootstrapStep(it, e_w, new_u))
        if it > 1 and new_u == e_u:
            return steps
        e_u = new_u
    raise BootstrapDidNotConverge(f"no fixed point within {max_iter} passes for alpha={alpha}, beta={beta}")


def loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line ``y = slope x + intercept``; returns ``(slope, intercept, rms residual)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    window: tuple[float, float]
    residual: float
    n_samples: int
    theory_exponent: Optional[float] = None
    verdict: Optional[str] = None


def fit_power_law(
    times: Sequence[float],
    values: Sequence[float],
    window: tuple[float, float],
    theory_exponent: Optional[float] = None,
    tolerance: Optional[float] = None,
    residual_threshold: float = 0.05,
    min_samples: int = 10,
) -> DecayFit:
    """Fit ``log value = exponent * log(1 + t) + c`` over samples with ``t`` in ``window``.

    ``theory_exponent`` is a slope (negative for decay).  The verdict is
    ``unreliable`` when the residual exceeds ``residual_threshold`` or the
    window spans less than a decade; otherwise ``consistent`` within
    ``tolerance`` (default 10% of ``|theory_exponent|``), else ``faster`` or
    ``slower``.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    t_lo, t_hi = window
    sel = (t >= t_lo) & (t <= t_hi)
    if sel.sum() < min_samples:
        raise ValueError(f"need at least {min_samples} samples in [{t_lo}, {t_hi}], got {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise ValueError("power-law fit needs strictly positive values")
    slope, intercept, residual = loglog_fit(np.log1p(t[sel]), np.log(v[sel]))

    verdict = None
    if theory_exponent is not None:
        tol = 0.1 * abs(theory_exponent) if tolerance is None else tolerance
        if residual > residual_threshold or t_hi / t_lo < 10:
            verdict = "unreliable"
        elif abs(slope - theory_exponent) <= tol:
            verdict = "consistent"
        elif slope < theory_exponent:
            verdict = "faster"
        else:
            verdict = "slower"
    return DecayFit(
        exponent=slope,
        intercept=intercept,
        window=(float(t_lo), float(t_hi)),
        residual=residual,
        n_samples=int(sel.sum()),
        theory_exponent=None if theory_exponent is None else float(theory_exponent),
        verdict=verdict,
    )
