"""
Pseudo-spectral integration of the damped, fractionally dissipated
incompressible Navier-Stokes equations on a periodic box,

    u_t + P[(u.grad) u] + (-Delta)^alpha u + nu P[|u|^(beta-1) u] = 0.

The pressure never appears: the whole nonlinear right-hand side is Leray
projected.  The dissipation is integrated exactly with exponential time
differencing (ETDRK2, Cox & Matthews 2002).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from .heat import evolve_box
from .spectral import (
    GridSpec,
    PhysicalParams,
    SpectralVectorField,
    dealias,
    forward,
    h_alpha_sq,
    l2_sq,
    leray_project,
    lp_pow,
)

log = logging.getLogger(__name__)


class BlowUpError(RuntimeError):
    """Non-finite values appeared in the solution.

    ``time`` is the simulation time at which they were detected and
    ``record`` (when raised from :func:`simulate`) holds every sample taken
    before that point.
    """

    def __init__(self, message: str, time: float, record: Optional[TrajectoryRecord] = None):
        super().__init__(message)
        self.time = time
        self.record = record


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping configuration.

    ``advection`` and ``damping`` switch the two nonlinear terms off for
    verification runs.  ``linear_damping`` (only valid for ``beta == 1``)
    moves ``nu u`` into the exact linear propagator instead of the
    nonlinear stage.  With ``adaptive=True`` the step is shrunk each step to
    ``cfl_safety * dx / max|u|``; otherwise ``dt`` is fixed and checked
    against that bound at every recorded sample.
    """

    grid: GridSpec
    params: PhysicalParams
    dt: float
    t_end: float
    record_every: Optional[float] = None
    cfl_safety: float = 0.5
    integrator: Literal["etdrk2", "imex_euler"] = "etdrk2"
    adaptive: bool = False
    advection: bool = True
    damping: bool = True
    linear_damping: bool = False
    convection_form: Literal["convective", "skew"] = "convective"
    track_difference: bool = True
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety!r}")
        if self.record_every is not None and self.record_every < self.dt * (1 - 1e-12):
            raise ValueError(f"record_every ({self.record_every}) must be >= dt ({self.dt})")
        if self.integrator not in ("etdrk2", "imex_euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.convection_form not in ("convective", "skew"):
            raise ValueError(f"unknown convection form {self.convection_form!r}")
        if self.linear_damping and self.params.beta != 1:
            raise ValueError("linear_damping is only meaningful for beta == 1")

    @property
    def sample_interval(self) -> float:
        return self.dt if self.record_every is None else self.record_every


@dataclass
class NormSeries:
    """Sampled norms along a trajectory.

    ``w_*`` entries refer to the difference ``w = u - v`` between the
    solution and the heat flow of the same initial data.
    """

    times: list[float] = field(default_factory=list)
    l2_sq: list[float] = field(default_factory=list)
    h_alpha_sq: list[float] = field(default_factory=list)
    l_beta_plus_1_pow: list[float] = field(default_factory=list)
    w_l2_sq: Optional[list[float]] = None
    w_h_alpha_sq: Optional[list[float]] = None

    def __len__(self):
        return len(self.times)

    def append(self, t, l2, h, lb, w_l2=None, w_h=None):
        if self.times and not t > self.times[-1]:
            raise ValueError(f"sample times must increase strictly ({t} after {self.times[-1]})")
        self.times.append(t)
        self.l2_sq.append(l2)
        self.h_alpha_sq.append(h)
        self.l_beta_plus_1_pow.append(lb)
        if w_l2 is not None:
            if self.w_l2_sq is None:
                self.w_l2_sq, self.w_h_alpha_sq = [], []
            self.w_l2_sq.append(w_l2)
            self.w_h_alpha_sq.append(w_h)

    def as_arrays(self) -> dict[str, np.ndarray]:
        out = {
            "times": np.asarray(self.times),
            "l2_sq": np.asarray(self.l2_sq),
            "h_alpha_sq": np.asarray(self.h_alpha_sq),
            "l_beta_plus_1_pow": np.asarray(self.l_beta_plus_1_pow),
        }
        if self.w_l2_sq is not None:
            out["w_l2_sq"] = np.asarray(self.w_l2_sq)
            out["w_h_alpha_sq"] = np.asarray(self.w_h_alpha_sq)
        return out


@dataclass
class TrajectoryRecord:
    config: SolverConfig
    u0: SpectralVectorField
    norm_series: NormSeries
    snapshots: list[tuple[float, SpectralVectorField]] = field(default_factory=list)
    max_divergence: float = 0.0
    final: Optional[SpectralVectorField] = None

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.norm_series.times)


def _damping_force(u_phys: np.ndarray, beta: float) -> np.ndarray:
    if beta == 1:
        return u_phys
    mag = np.sqrt(np.sum(u_phys**2, axis=0))
    # |u|^(beta-1) u extends continuously by 0 at u = 0 for beta > 1.
    return mag ** (beta - 1) * u_phys


def nonlinear_rhs(
    u: SpectralVectorField,
    params: PhysicalParams,
    advection: bool = True,
    damping: bool = True,
    convection_form: str = "convective",
) -> SpectralVectorField:
    """``-P[dealias((u.grad) u)] - nu P[|u|^(beta-1) u]`` as a spectral field."""
    grid = u.grid
    total = np.zeros_like(u.coeffs)

    if advection:
        ud = dealias(u)
        u_phys = ud.to_physical()
        grad = ud.gradient()  # grad[j, i] = d_j u_i
        conv = np.einsum("j...,ji...->i...", u_phys, grad)
        conv_hat = forward(grid, conv)
        if convection_form == "skew":
            # 0.5 [(u.grad)u + div(u u)]
            uu = u_phys[:, None] * u_phys[None, :]
            uu_hat = forward(grid, uu)
            div_hat = np.sum(1j * grid.kvec[:, None] * uu_hat, axis=0)
            conv_hat = 0.5 * (conv_hat + div_hat)
        total -= conv_hat * grid.dealias_mask

    if damping and params.nu != 0:
        force = _damping_force(u.to_physical(), params.beta)
        total -= params.nu * forward(grid, force)

    if not np.all(np.isfinite(total)):
        raise BlowUpError("non-finite nonlinear term", time=math.nan)
    return leray_project(u.with_coeffs(total))


def _phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``phi1(z) = (e^z - 1)/z`` and ``phi2(z) = (e^z - 1 - z)/z^2`` without cancellation."""
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    small = np.abs(z) < 0.1
    zs = z[small]
    # Taylor series, 12 terms: truncation error below 1e-17 for |z| < 0.1.
    p1 = np.zeros_like(zs)
    p2 = np.zeros_like(zs)
    term = np.ones_like(zs)
    for m in range(12):
        p1 += term / math.factorial(m + 1)
        p2 += term / math.factorial(m + 2)
        term = term * zs
    phi1[small], phi2[small] = p1, p2
    zl = z[~small]
    em1 = np.expm1(zl)
    phi1[~small] = em1 / zl
    phi2[~small] = (em1 - zl) / zl**2
    return phi1, phi2


class _Stepper:
    """Caches the exponential factors for one step size."""

    def __init__(self, config: SolverConfig):
        self.config = config
        params = config.params
        symbol = config.grid.symbol(params.alpha)
        if config.linear_damping:
            symbol = symbol + params.nu
        self.symbol = symbol
        self._h = None

    def _prepare(self, h: float):
        if h == self._h:
            return
        z = -self.symbol * h
        self.expz = np.exp(z)
        self.phi1, self.phi2 = _phi_functions(z)
        self.imex = 1.0 / (1.0 + self.symbol * h)
        self._h = h

    def rhs(self, u: SpectralVectorField) -> SpectralVectorField:
        c = self.config
        return nonlinear_rhs(
            u,
            c.params,
            advection=c.advection,
            damping=c.damping and not c.linear_damping,
            convection_form=c.convection_form,
        )

    def step(self, u: SpectralVectorField, h: float) -> SpectralVectorField:
        self._prepare(h)
        c = self.config
        nonlinear = c.advection or (c.damping and not c.linear_damping and c.params.nu != 0)
        if not nonlinear:
            return u.with_coeffs(u.coeffs * self.expz)
        n0 = self.rhs(u).coeffs
        if c.integrator == "imex_euler":
            return leray_project(u.with_coeffs((u.coeffs + h * n0) * self.imex))
        a = u.with_coeffs(self.expz * u.coeffs + h * self.phi1 * n0)
        n1 = self.rhs(a).coeffs
        return leray_project(a.with_coeffs(a.coeffs + h * self.phi2 * (n1 - n0)))


def step(u: SpectralVectorField, config: SolverConfig, dt: Optional[float] = None) -> SpectralVectorField:
    """Advance ``u`` by one step of size ``dt`` (default ``config.dt``)."""
    return _Stepper(config).step(u, config.dt if dt is None else dt)


def cfl_limit(u: SpectralVectorField, cfl_safety: float) -> float:
    """Largest advective step ``cfl_safety * dx / max|u|`` (inf for the zero field)."""
    phys = u.to_physical()
    umax = float(np.max(np.sqrt(np.sum(phys**2, axis=0))))
    return math.inf if umax == 0 else cfl_safety * u.grid.dx / umax


def _sample(record: TrajectoryRecord, u: SpectralVectorField, t: float):
    c = record.config
    params = c.params
    u_phys = u.to_physical()
    w_l2 = w_h = None
    if c.track_difference:
        w = u - evolve_box(record.u0, params.alpha, t)
        w_l2, w_h = l2_sq(w), h_alpha_sq(w, params.alpha)
    record.norm_series.append(
        t,
        l2_sq(u),
        h_alpha_sq(u, params.alpha),
        lp_pow(u, params.beta + 1.0, physical=u_phys),
        w_l2,
        w_h,
    )
    record.max_divergence = max(record.max_divergence, u.max_divergence_ratio())
    if not all(np.isfinite(v[-1]) for v in (record.norm_series.l2_sq, record.norm_series.l_beta_plus_1_pow)):
        raise BlowUpError(f"non-finite norms at t={t}", time=t, record=record)


def simulate(u0: SpectralVectorField, config: SolverConfig) -> TrajectoryRecord:
    """Integrate from ``u0`` (Leray projected first) to ``config.t_end``.

    Norms are sampled at ``t = 0`` and every ``record_every``.  On blow-up
    a :class:`BlowUpError` is raised whose ``record`` holds the partial
    trajectory.
    """
    if u0.grid != config.grid:
        raise ValueError(f"initial data lives on {u0.grid}, config expects {config.grid}")
    if not np.all(np.isfinite(u0.coeffs)):
        raise ValueError("initial data must be finite")
    u0 = leray_project(u0)
    record = TrajectoryRecord(config=config, u0=u0, norm_series=NormSeries())
    stepper = _Stepper(config)

    interval = config.sample_interval
    n_samples = int(round(config.t_end / interval))
    if abs(n_samples * interval - config.t_end) > 1e-9 * max(1.0, config.t_end):
        raise ValueError(f"t_end ({config.t_end}) must be a multiple of the sample interval ({interval})")
    steps_per_sample = int(round(interval / config.dt))
    fixed = abs(steps_per_sample * config.dt - interval) <= 1e-9 * interval

    u = u0
    _sample(record, u, 0.0)
    if config.snapshot_every:
        record.snapshots.append((0.0, u))
    for s in range(1, n_samples + 1):
        t_prev, t_next = (s - 1) * interval, s * interval
        try:
            if fixed and not config.adaptive:
                if config.advection and cfl_limit(u, config.cfl_safety) < config.dt:
                    log.warning("dt=%g exceeds the advective CFL bound at t=%g", config.dt, t_prev)
                for _ in range(steps_per_sample):
                    u = stepper.step(u, config.dt)
            else:
                t = t_prev
                while t_next - t > 1e-12 * interval:
                    h = min(config.dt, t_next - t)
                    if config.adaptive and config.advection:
                        h = min(h, cfl_limit(u, config.cfl_safety))
                    u = stepper.step(u, h)
                    t += h
        except BlowUpError as err:
            raise BlowUpError(str(err), time=t_prev, record=record) from err
        if not np.all(np.isfinite(u.coeffs)):
            raise BlowUpError(f"non-finite state between t={t_prev} and t={t_next}", time=t_next, record=record)
        _sample(record, u, t_next)
        if config.snapshot_every and s % config.snapshot_every == 0:
            record.snapshots.append((t_next, u))
    record.final = u
    return record


def make_initial_data(
    kind: str,
    grid: GridSpec,
    seed: int = 0,
    amplitude: float = 1.0,
) -> SpectralVectorField:
    """Divergence-free, real initial data.

    ``taylor_green`` is the classical vortex ``amplitude * (sin x cos y cos z,
    -cos x sin y cos z, 0)`` in box-scaled coordinates.  ``low_freq_random``
    fills modes with integer index norm ``0 < |j| <= 3`` with seeded
    Gaussian coefficients; ``gaussian_modulated`` is the curl of a Gaussian
    vector potential centred in the box with a seeded direction.  Both are
    scaled so that ``max |u(x)| = amplitude``.
    """
    if not amplitude > 0:
        raise ValueError(f"amplitude must be positive, got {amplitude!r}")
    x = grid.coordinates() * (2 * np.pi / grid.box_length)

    if kind == "taylor_green":
        if grid.dim == 3:
            values = np.stack([
                np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
                -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
                np.zeros(grid.shape),
            ])
        else:
            values = np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
        return leray_project(SpectralVectorField.from_physical(grid, amplitude * values))

    rng = np.random.default_rng(seed)
    if kind == "low_freq_random":
        j = np.stack(np.meshgrid(*([grid.indices] * grid.dim), indexing="ij"))
        jnorm2 = np.sum(j**2, axis=0)
        support = (jnorm2 > 0) & (jnorm2 <= 9)
        shape = (grid.dim,) + grid.shape
        coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * support
        values = SpectralVectorField(grid, coeffs).to_physical()
        field = leray_project(SpectralVectorField.from_physical(grid, values))
    elif kind == "gaussian_modulated":
        centre = grid.box_length / 2
        width = grid.box_length / 8
        r2 = np.sum((grid.coordinates() - centre) ** 2, axis=0)
        envelope = np.exp(-r2 / (2 * width**2))
        if grid.dim == 3:
            direction = rng.standard_normal(3)
            direction /= np.linalg.norm(direction)
            potential = SpectralVectorField.from_physical(grid, direction[:, None, None, None] * envelope)
            a_hat = potential.coeffs
            k = grid.kvec
            curl = 1j * np.stack([
                k[1] * a_hat[2] - k[2] * a_hat[1],
                k[2] * a_hat[0] - k[0] * a_hat[2],
                k[0] * a_hat[1] - k[1] * a_hat[0],
            ])
        else:
            sign = 1.0 if rng.random() < 0.5 else -1.0
            psi = forward(grid, sign * envelope)
            k = grid.kvec
            curl = 1j * np.stack([k[1] * psi, -k[0] * psi])
        field = leray_project(SpectralVectorField(grid, curl))
    else:
        raise ValueError(f"unknown initial data kind {kind!r}")

    umax = np.max(np.sqrt(np.sum(field.to_physical() ** 2, axis=0)))
    return field * (amplitude / umax)
