"""
A-posteriori energy bookkeeping along simulated trajectories.

Two checks are provided.  The energy identity for ``u`` itself,

    d/dt ||u||^2 + 2 ||Lambda^alpha u||^2 + 2 nu ||u||_{beta+1}^{beta+1} = 0,

holds exactly for the semi-discrete system (advection and pressure do no
work), so its sampled residual measures time-discretisation error only.
The second check evaluates the differential inequality for the
difference ``w = u - v`` against the heat flow ``v`` of the same data,

    d/dt ||w||^2 + 2 ||Lambda^alpha w||^2 + nu ||u||^{beta+1}
        <= ||grad v||_inf ||u||^2 + C nu ||v||^{beta+1},

with the constant ``C`` supplied by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .heat import evolve_box
from .solver import TrajectoryRecord, nonlinear_rhs
from .spectral import PhysicalParams, SpectralVectorField, lp_pow


def difference_field(
    u: SpectralVectorField, u0: SpectralVectorField, alpha: float, t: float
) -> SpectralVectorField:
    """``w = u - v`` with ``v`` the fractional heat flow of ``u0`` at time ``t``."""
    if u.grid != u0.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {u0.grid}")
    return u - evolve_box(u0, alpha, t)


def u_energy_residual(record: TrajectoryRecord, params: PhysicalParams) -> np.ndarray:
    """Per-interval residual of the energy identity for ``u``.

    ``(E[i+1] - E[i]) / dt_i`` plus the dissipation rates averaged over the
    two interval endpoints; second order in the sample spacing.
    """
    s = record.norm_series.as_arrays()
    t, energy = s["times"], s["l2_sq"]
    rate = 2 * s["h_alpha_sq"] + 2 * params.nu * s["l_beta_plus_1_pow"]
    return np.diff(energy) / np.diff(t) + 0.5 * (rate[1:] + rate[:-1])


def grad_linf(field: SpectralVectorField) -> float:
    """Max over grid points of the Frobenius norm of the velocity gradient."""
    g = field.gradient()
    return float(np.sqrt(np.max(np.sum(g**2, axis=(0, 1)))))


@dataclass
class LedgerReport:
    times: np.ndarray
    u_balance_residual: np.ndarray
    w_inequality_margin: np.ndarray
    prefactor: float
    min_prefactor: float
    tolerance: float
    violations: list[tuple[float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def w_inequality_check(
    record: TrajectoryRecord,
    u0: SpectralVectorField,
    params: PhysicalParams,
    prefactor: float = 4.0,
    tolerance: float = 1e-10,
) -> LedgerReport:
    """Evaluate ``RHS - LHS`` of the ``w`` inequality on every sampling interval.

    The time derivative is a centred difference at the interval midpoint and
    all other terms are endpoint averages.  ``min_prefactor`` is the smallest
    constant for which no interval would fail.  Negative margins beyond
    ``tolerance`` (relative to the size of the terms involved) are reported
    as violations.
    """
    if not prefactor > 0:
        raise ValueError(f"prefactor must be positive, got {prefactor!r}")
    s = record.norm_series.as_arrays()
    if "w_l2_sq" not in s:
        raise ValueError("record carries no difference-field norms; simulate with track_difference=True")
    t = s["times"]
    p = params.beta + 1.0

    grad_v = np.empty_like(t)
    v_pow = np.empty_like(t)
    for i, ti in enumerate(t):
        v = evolve_box(u0, params.alpha, ti)
        grad_v[i] = grad_linf(v)
        v_pow[i] = lp_pow(v, p)

    def mid(a):
        return 0.5 * (a[1:] + a[:-1])

    lhs = np.diff(s["w_l2_sq"]) / np.diff(t) + mid(2 * s["w_h_alpha_sq"] + params.nu * s["l_beta_plus_1_pow"])
    advective = mid(grad_v * s["l2_sq"])
    damping = mid(params.nu * v_pow)
    margin = advective + prefactor * damping - lhs

    needed = lhs - advective
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(damping > 0, needed / damping, np.where(needed > 0, np.inf, 0.0))
    min_prefactor = float(max(0.0, np.max(ratio))) if ratio.size else 0.0

    scale = np.abs(lhs) + np.abs(advective) + prefactor * np.abs(damping)
    bad = margin < -tolerance * np.maximum(scale, 1.0)
    mids = mid(t)
    return LedgerReport(
        times=mids,
        u_balance_residual=u_energy_residual(record, params),
        w_inequality_margin=margin,
        prefactor=prefactor,
        min_prefactor=min_prefactor,
        tolerance=tolerance,
        violations=[(float(mids[i]), float(margin[i])) for i in np.flatnonzero(bad)],
    )


def trilinear_term(u: SpectralVectorField) -> float:
    """``<(u.grad) u, u>`` with the dealiased product used by the solver."""
    adv = nonlinear_rhs(u, PhysicalParams(nu=0.0), advection=True, damping=False)
    return float(-u.grid.volume * np.real(np.sum(adv.coeffs * np.conj(u.coeffs))))
