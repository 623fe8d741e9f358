"""Euler-Maruyama simulation of the self-attracting diffusion.

The drift at time t is the gradient of the potential convolved with the
normalized occupation measure of the path so far.  For polynomial
interactions that convolution is an exact function of the running power
sums of the path, which is the identity the whole simulator rests on:
the running-moment drift and the brute-force full-history drift agree to
rounding on the same noise path.

Also here: the frozen-measure coupling used for one-step error analysis,
the Ornstein-Uhlenbeck domination coupling, the contraction bootstrap for
starting at time zero, and the non-symmetric counterexample pair whose
center drifts like log t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidInputError, NumericFailureError, UnsupportedInputError
from .gibbs import gibbs_map
from .measures import ParticleMeasure
from .potentials import PotentialSpec

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    t_start: float = 1.0
    seed: int = 0
    noise_scale: float = _SQRT2
    history_mode: str = "running-moments"
    reservoir_size: int = 1024
    center_every: int = 10
    record_moments_every: int | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidInputError("dt must be positive")
        if self.t_end <= self.t_start or self.t_start < 0:
            raise InvalidInputError("need t_end > t_start >= 0")
        if self.history_mode not in ("running-moments", "full-history", "reservoir"):
            raise InvalidInputError(f"unknown history mode {self.history_mode!r}")
        if self.noise_scale < 0:
            raise InvalidInputError("noise scale must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))


def _check_dt(w: PotentialSpec, cfg: SimConfig):
    cap = 0.01 * min(1.0, 1.0 / w.convexity_constant) if w.convexity_constant > 0 else 0.01
    if cfg.dt > cap + 1e-15:
        raise InvalidInputError(f"dt={cfg.dt} exceeds the stability cap {cap}")


@dataclass
class TrajectoryRecord:
    """One path with its occupation bookkeeping.

    ``weights[i]`` is the occupation weight of the atom at ``times[i]``: the
    pre-history block t_start for the first atom, dt for the rest (zero when
    the run starts at t = 0, where there is no pre-history).
    """

    potential: PotentialSpec
    external: PotentialSpec | None
    config: SimConfig
    replica: int
    times: np.ndarray
    positions: np.ndarray
    weights: np.ndarray
    center_track: np.ndarray
    moment_times: np.ndarray
    moment_track: np.ndarray
    initial_occupation: ParticleMeasure | None = None
    coupling_track: dict | None = None

    def index_at(self, t: float) -> int:
        """Largest step index with times[index] <= t (+ tolerance)."""
        return int(np.searchsorted(self.times, t + 1e-12, side="right") - 1)

    def occupation(self, upto: float | None = None) -> ParticleMeasure:
        """Normalized occupation measure of the path up to time ``upto``.

        The pre-history block is the warm-start occupation when one was
        supplied, otherwise an atom of mass t_start at the starting point.
        """
        i = self.times.size - 1 if upto is None else self.index_at(upto)
        pos = self.positions[1:i + 1]
        w = self.weights[1:i + 1]
        if self.initial_occupation is not None:
            pre = self.initial_occupation
            scale = self.weights[0] / pre.total_mass
            pos = np.concatenate((pre.positions, pos))
            w = np.concatenate((pre.weights * scale, w))
        elif self.weights[0] > 0:
            pos = np.concatenate((self.positions[:1], pos))
            w = np.concatenate((self.weights[:1], w))
        return ParticleMeasure(pos, w / w.sum())

    def window_occupation(self, t0: float, t1: float) -> ParticleMeasure:
        """Normalized occupation measure over (t0, t1]."""
        i0 = self.index_at(t0)
        i1 = self.index_at(t1)
        if i1 <= i0:
            raise InvalidInputError("window contains no steps")
        pos = self.positions[i0 + 1:i1 + 1]
        return ParticleMeasure(pos, np.full(pos.shape[0], 1.0 / pos.shape[0]))

    def center_at(self, t: float) -> float:
        return float(self.center_track[self.index_at(t)])

    def l_value(self, t_center: float, t_max: float) -> float:
        """max over the whole past [start, t_max] of |X_t - c(t_center)|."""
        c = self.center_at(t_center)
        i1 = self.index_at(t_max)
        return float(np.abs(self.positions[:i1 + 1] - c).max())

    def l_values(self, schedule) -> np.ndarray:
        """One excursion bound per schedule window n: the past-path maximum
        of |X_t - c(T_n)| up to T_{n+1}."""
        return np.array([self.l_value(schedule.time(n), schedule.time(n + 1))
                         for n in schedule.indices()])


# ---------------------------------------------------------------------------
# drift machinery for 1-d polynomial potentials


class _PolyDrift:
    """Drift coefficients from running power sums.

    grad(W * mu)(x) = sum_i b_i x^i with
    b_i = sum_{m >= i} g_m C(m, i) (-1)^(m-i) S_(m-i) / S_0,
    where g is the gradient polynomial of W and S_j the running weighted
    power sums of the path.
    """

    def __init__(self, w: PotentialSpec, v: PotentialSpec | None):
        g = np.polynomial.polynomial.polyder(w.poly1d_coefficients())
        self.g = np.asarray(g, dtype=float)
        self.n_moments = self.g.size            # S_0 .. S_(L-1) needed
        self.table = [
            [self.g[m] * math.comb(m, i) * ((-1.0) ** (m - i)) for i in range(m + 1)]
            for m in range(self.g.size)
        ]
        if v is not None:
            vg = np.polynomial.polynomial.polyder(v.poly1d_coefficients())
            self.v_grad = np.asarray(vg, dtype=float)
        else:
            self.v_grad = None
        self.is_linear = self.g.size <= 2

    def coefficients(self, S) -> np.ndarray:
        """b_i from power sums S (array-like of length n_moments, S[0] = mass)."""
        L = self.n_moments
        b = np.zeros(L) if np.ndim(S[0]) == 0 else np.zeros((L,) + np.shape(S[0]))
        for m in range(L):
            row = self.table[m]
            for i in range(m + 1):
                if row[i] != 0.0:
                    b[i] = b[i] + row[i] * S[m - i]
        return b / S[0]

    def value(self, x, S):
        """Interaction drift grad(W*mu)(x) from power sums."""
        b = self.coefficients(S)
        out = b[-1]
        for i in range(len(b) - 2, -1, -1):
            out = out * x + b[i]
        return out

    def external_value(self, x):
        if self.v_grad is None:
            return 0.0
        out = self.v_grad[-1]
        for i in range(len(self.v_grad) - 2, -1, -1):
            out = out * x + self.v_grad[i]
        return out

    def center_from_sums(self, S, start, tol=1e-12, max_iter=60):
        """Root of the drift polynomial (Newton); works on scalars or arrays."""
        b = np.asarray(self.coefficients(S))
        c = np.asarray(start, dtype=float)
        if b.shape[0] < 2 or np.all(b[1:] == 0.0):
            return c if c.ndim else float(c)
        db = _polyder_cols(b.reshape(b.shape[0], -1)).reshape((b.shape[0] - 1,) + b.shape[1:])
        flat = b.reshape(b.shape[0], -1)
        dflat = db.reshape(db.shape[0], -1)
        cc = np.atleast_1d(c).astype(float)
        for _ in range(max_iter):
            g = _polyval_cols(flat, cc)
            if np.max(np.abs(g)) <= tol:
                return float(cc[0]) if c.ndim == 0 else cc.reshape(c.shape)
            h = _polyval_cols(dflat, cc)
            cc = cc - g / h
        raise NumericFailureError("center Newton on running moments did not converge")


def _polyval_cols(b: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = b[-1]
    for i in range(b.shape[0] - 2, -1, -1):
        out = out * x + b[i]
    return out


def _polyder_cols(b: np.ndarray) -> np.ndarray:
    return b[1:] * np.arange(1, b.shape[0])[:, None]


def _initial_sums(drift: _PolyDrift, x0: float, t_start: float,
                  initial_occupation: ParticleMeasure | None) -> list[float]:
    L = drift.n_moments
    if initial_occupation is None:
        return [t_start * x0 ** j for j in range(L)]
    pos = initial_occupation.positions
    wts = initial_occupation.weights * (t_start / initial_occupation.total_mass)
    return [float(wts @ pos ** j) for j in range(L)]


def simulate(w: PotentialSpec, x0: float, cfg: SimConfig,
             v: PotentialSpec | None = None, replica: int = 0,
             initial_occupation: ParticleMeasure | None = None) -> TrajectoryRecord:
    """One path of the self-attracting diffusion.

    The occupation measure starts as a pre-history block of mass t_start
    (an atom at x0, or ``initial_occupation`` rescaled to that mass); runs
    started at t = 0 first build a short segment with the contraction
    bootstrap and then switch to stepping.
    """
    _check_dt(w, cfg)
    drift = _PolyDrift(w, v)

    if cfg.t_start == 0.0:
        return _simulate_from_zero(w, x0, cfg, drift, replica)

    n = cfg.n_steps
    increments = (cfg.noise_scale * math.sqrt(cfg.dt)
                  * rng.normal_increments(cfg.seed, n, replica))
    times = cfg.t_start + cfg.dt * np.arange(n + 1)

    if cfg.history_mode == "running-moments":
        positions, centers = _run_moment_loop(drift, x0, cfg, increments,
                                              initial_occupation)
    elif cfg.history_mode == "full-history":
        positions, centers = _run_full_history_loop(drift, x0, cfg, increments,
                                                    initial_occupation)
    else:
        positions, centers = _run_reservoir_loop(drift, x0, cfg, increments, replica)
    if not np.all(np.isfinite(positions)):
        raise NumericFailureError("path lost finiteness (explosion); "
                                  "check the step size against the potential")

    weights = np.full(n + 1, cfg.dt)
    weights[0] = cfg.t_start
    thin = cfg.record_moments_every or max(1, n // 2000)
    idx = np.arange(0, n + 1, thin)
    init_sums = (_initial_sums(drift, x0, cfg.t_start, initial_occupation)
                 if initial_occupation is not None else None)
    mom = _moment_track(drift, positions, weights, idx, init_sums)
    return TrajectoryRecord(w, v, cfg, replica, times, positions, weights,
                            centers, times[idx], mom,
                            initial_occupation=initial_occupation)


def _moment_track(drift: _PolyDrift, positions, weights, idx,
                  init_sums=None) -> np.ndarray:
    L = max(2, drift.n_moments)
    track = np.empty((idx.size, L - 1))
    csum = [np.cumsum(weights * positions ** j) for j in range(L)]
    if init_sums is not None:
        # replace the placeholder first atom by the true warm-start sums
        for j in range(min(L, len(init_sums))):
            csum[j] = csum[j] + (init_sums[j] - weights[0] * positions[0] ** j)
    mass = np.where(csum[0][idx] > 0, csum[0][idx], np.nan)
    for col in range(1, L):
        track[:, col - 1] = csum[col][idx] / mass
    return track


def _run_moment_loop(drift, x0, cfg, increments, initial_occupation):
    n = cfg.n_steps
    dt = cfg.dt
    positions = np.empty(n + 1)
    positions[0] = x0
    centers = np.empty(n + 1)
    S = _initial_sums(drift, x0, cfg.t_start, initial_occupation)
    L = len(S)
    noise = increments.tolist()
    x = float(x0)
    if drift.is_linear:
        # quadratic families: drift = b0 + b1 x with b from two sums
        g0 = drift.table[0][0] if L > 0 else 0.0
        g1 = drift.table[1][1] if L > 1 else 0.0
        g10 = drift.table[1][0] if L > 1 else 0.0
        ext = drift.v_grad
        S0, S1 = S[0], (S[1] if L > 1 else 0.0)
        pos = positions
        cen = centers
        cen[0] = drift.center_from_sums([S0, S1] if L > 1 else [S0], x)
        for i in range(n):
            d = (g0 * S0 + g10 * S1) / S0 + g1 * x
            if ext is not None:
                e = ext[-1]
                for j in range(len(ext) - 2, -1, -1):
                    e = e * x + ext[j]
                d += e
            x += -d * dt + noise[i]
            S0 += dt
            S1 += dt * x
            pos[i + 1] = x
            # linear drift: the center is the root of b0 + b1 x, exact
            cen[i + 1] = -((g0 * S0 + g10 * S1) / S0) / g1 if g1 != 0.0 else S1 / S0
        return positions, centers

    last_center = drift.center_from_sums(S, x)
    centers[0] = last_center
    last_knot_x = x
    for i in range(n):
        d = drift.value(x, S) + drift.external_value(x)
        x += -d * dt + noise[i]
        for j in range(L - 1, 0, -1):
            S[j] += dt * x ** j
        S[0] += dt
        positions[i + 1] = x
        if (i + 1) % cfg.center_every == 0 or abs(x - last_knot_x) > 0.5:
            last_center = drift.center_from_sums(S, last_center)
            centers[i + 1] = last_center
            last_knot_x = x
        else:
            centers[i + 1] = np.nan
    _interpolate_center_gaps(centers)
    return positions, centers


def _interpolate_center_gaps(centers: np.ndarray):
    bad = np.isnan(centers)
    if bad.any():
        idx = np.arange(centers.size)
        centers[bad] = np.interp(idx[bad], idx[~bad], centers[~bad])


def _run_full_history_loop(drift, x0, cfg, increments, initial_occupation):
    n = cfg.n_steps
    dt = cfg.dt
    positions = np.empty(n + 1)
    positions[0] = x0
    centers = np.empty(n + 1)
    if initial_occupation is None:
        base_pos = np.array([x0])
        base_w = np.array([cfg.t_start])
    else:
        base_pos = initial_occupation.positions.copy()
        base_w = initial_occupation.weights * (cfg.t_start / initial_occupation.total_mass)
    g = drift.g
    x = float(x0)
    S = _initial_sums(drift, x0, cfg.t_start, initial_occupation)
    last_center = drift.center_from_sums(S, x)
    centers[0] = last_center
    mass = float(base_w.sum())
    for i in range(n):
        d = float(base_w @ np.polynomial.polynomial.polyval(x - base_pos, g))
        if i > 0:
            d += dt * float(np.polynomial.polynomial.polyval(
                x - positions[1:i + 1], g).sum())
        d = d / mass + drift.external_value(x)
        x += -d * dt + increments[i]
        mass += dt
        positions[i + 1] = x
        for j in range(len(S) - 1, 0, -1):
            S[j] += dt * x ** j
        S[0] += dt
        if (i + 1) % cfg.center_every == 0:
            last_center = drift.center_from_sums(S, last_center)
            centers[i + 1] = last_center
        else:
            centers[i + 1] = np.nan
    _interpolate_center_gaps(centers)
    return positions, centers


def _run_reservoir_loop(drift, x0, cfg, increments, replica):
    """Approximate history: a uniform reservoir over the atom stream, where
    the pre-history block counts as t_start/dt virtual atoms at x0.  While
    the stream fits in the reservoir this coincides with the full history."""
    n = cfg.n_steps
    dt = cfg.dt
    R = cfg.reservoir_size
    res = np.full(R, float(x0))
    positions = np.empty(n + 1)
    positions[0] = x0
    centers = np.empty(n + 1)
    g = drift.g
    pick = rng.stream(cfg.seed, replica, rng.RESERVOIR)
    u_accept = pick.random(n)
    u_slot = pick.integers(0, R, size=n)
    x = float(x0)
    S = _initial_sums(drift, x0, cfg.t_start, None)
    last_center = drift.center_from_sums(S, x)
    centers[0] = last_center
    seen = max(1, int(round(cfg.t_start / dt)))
    filled = min(seen, R)
    for i in range(n):
        d = float(np.polynomial.polynomial.polyval(x - res[:filled], g).mean())
        d += drift.external_value(x)
        x += -d * dt + increments[i]
        seen += 1
        if filled < R:
            res[filled] = x
            filled += 1
        elif u_accept[i] < R / seen:
            res[u_slot[i]] = x
        positions[i + 1] = x
        for j in range(len(S) - 1, 0, -1):
            S[j] += dt * x ** j
        S[0] += dt
        if (i + 1) % cfg.center_every == 0:
            last_center = drift.center_from_sums(S, last_center)
            centers[i + 1] = last_center
        else:
            centers[i + 1] = np.nan
    _interpolate_center_gaps(centers)
    return positions, centers


def simulate_ensemble(w: PotentialSpec, x0: float, cfg: SimConfig,
                      n_replicas: int, v: PotentialSpec | None = None,
                      initial_occupation: ParticleMeasure | None = None
                      ) -> list[TrajectoryRecord]:
    """Replica ensemble with independent noise streams, stepped in lock-step
    across replicas (running-moments mode, 1-d)."""
    if cfg.history_mode != "running-moments":
        return [simulate(w, x0, cfg, v=v, replica=r) for r in range(n_replicas)]
    _check_dt(w, cfg)
    if cfg.t_start == 0.0:
        raise UnsupportedInputError("ensemble runs start from positive time")
    drift = _PolyDrift(w, v)
    n = cfg.n_steps
    dt = cfg.dt
    scale = cfg.noise_scale * math.sqrt(dt)
    noise = np.empty((n, n_replicas))
    for r in range(n_replicas):
        noise[:, r] = scale * rng.normal_increments(cfg.seed, n, r)
    times = cfg.t_start + dt * np.arange(n + 1)

    x = np.full(n_replicas, float(x0))
    S = [np.full(n_replicas, s) for s in _initial_sums(drift, x0, cfg.t_start,
                                                       initial_occupation)]
    L = len(S)
    positions = np.empty((n + 1, n_replicas))
    positions[0] = x
    centers = np.empty((n + 1, n_replicas))
    centers[0] = drift.center_from_sums(np.stack(S), x)
    if drift.is_linear and drift.v_grad is None and L == 2:
        # quadratic families: drift = t00 + t11 (x - mean); centers recovered
        # from cumulative sums after the loop
        t00 = drift.table[0][0]
        t11 = drift.table[1][1]
        S0, S1 = S[0], S[1]
        for i in range(n):
            d = t00 + t11 * (x - S1 / S0)
            x = x - d * dt + noise[i]
            S0 = S0 + dt
            S1 = S1 + dt * x
            positions[i + 1] = x
        mass = S[0][0] + dt * np.arange(n + 1)
        sums = S[1][None, :] + dt * np.concatenate(
            (np.zeros((1, n_replicas)), np.cumsum(positions[1:], axis=0)))
        means = sums / mass[:, None]
        centers[:] = means - t00 / t11 if t11 != 0.0 else means
    else:
        knot = centers[0].copy()
        for i in range(n):
            b = drift.coefficients(S)
            d = _polyval_cols(b, x) + drift.external_value(x)
            x = x - d * dt + noise[i]
            for j in range(L - 1, 0, -1):
                S[j] = S[j] + dt * x ** j
            S[0] = S[0] + dt
            positions[i + 1] = x
            if drift.is_linear:
                centers[i + 1] = drift.center_from_sums(np.stack(S), x)
            elif (i + 1) % cfg.center_every == 0:
                knot = drift.center_from_sums(np.stack(S), knot)
                centers[i + 1] = knot
            else:
                centers[i + 1] = np.nan
    if not np.all(np.isfinite(positions)):
        raise NumericFailureError("ensemble lost finiteness (explosion); "
                                  "check the step size against the potential")
    records = []
    weights = np.full(n + 1, dt)
    weights[0] = cfg.t_start
    thin = cfg.record_moments_every or max(1, n // 2000)
    idx = np.arange(0, n + 1, thin)
    init_sums = (_initial_sums(drift, x0, cfg.t_start, initial_occupation)
                 if initial_occupation is not None else None)
    for r in range(n_replicas):
        cen = centers[:, r].copy()
        _interpolate_center_gaps(cen)
        mom = _moment_track(drift, positions[:, r], weights, idx, init_sums)
        records.append(TrajectoryRecord(w, v, cfg, r, times, positions[:, r].copy(),
                                        weights.copy(), cen, times[idx], mom,
                                        initial_occupation=initial_occupation))
    return records


# ---------------------------------------------------------------------------
# frozen-measure coupling


@dataclass(frozen=True)
class CoupledPaths:
    times: np.ndarray
    x_path: np.ndarray
    y_path: np.ndarray
    window: tuple[float, float]
    y_start: float
    frozen_center: float


def coupled_frozen(w: PotentialSpec, record: TrajectoryRecord,
                   window: tuple[float, float], seed: int,
                   v: PotentialSpec | None = None,
                   y_start: float | None = None) -> CoupledPaths:
    """Drive a companion process by the same noise, but with the occupation
    measure frozen at the window start; its stationary law is the Gibbs
    image of that frozen measure.

    The companion starts from a draw of the frozen Gibbs density restricted
    to the unit interval around the frozen center (or from ``y_start``).
    """
    t0, t1 = window
    cfg = record.config
    i0 = record.index_at(t0)
    i1 = record.index_at(t1)
    if not (0 <= i0 < i1 <= record.times.size - 1):
        raise InvalidInputError("window must lie inside the simulated range")
    drift = _PolyDrift(w, v)
    occ = record.occupation(t0)
    mass = float(record.times[i0])
    S = [mass * float(occ.weights @ occ.positions ** j)
         for j in range(drift.n_moments)]
    b = drift.coefficients(S)
    c0 = drift.center_from_sums(S, float(record.positions[i0]))

    if y_start is None:
        dens = gibbs_map(w, occ, v=v).density
        y_start = _sample_restricted(dens, c0 - 1.0, c0 + 1.0,
                                     rng.stream(seed, 0, rng.INIT_SAMPLING))

    incs = (cfg.noise_scale * math.sqrt(cfg.dt)
            * rng.normal_increments(cfg.seed, cfg.n_steps, record.replica))
    y = float(y_start)
    ys = np.empty(i1 - i0 + 1)
    ys[0] = y
    for step, i in enumerate(range(i0, i1)):
        d = _polyval_cols(b, np.asarray(y)) + drift.external_value(y)
        y = y - float(d) * cfg.dt + incs[i]
        ys[step + 1] = y
    return CoupledPaths(times=record.times[i0:i1 + 1],
                        x_path=record.positions[i0:i1 + 1].copy(),
                        y_path=ys, window=(t0, t1), y_start=float(y_start),
                        frozen_center=float(c0))


def _sample_restricted(dens, lo: float, hi: float, gen: np.random.Generator) -> float:
    xs = dens.axis_centers(0)
    mask = (xs >= lo) & (xs <= hi)
    if not mask.any():
        raise NumericFailureError("restriction window misses the density grid")
    weights = dens.values[mask]
    cum = np.cumsum(weights)
    cum /= cum[-1]
    u = gen.random()
    j = int(np.searchsorted(cum, u, side="left"))
    return float(xs[mask][j])


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck domination coupling


def blend(r: float, low: float = 0.1) -> float:
    """Smooth ramp: 0 near the origin, 1 from radius 1 on (quintic spline)."""
    if r <= low:
        return 0.0
    if r >= 1.0:
        return 1.0
    s = (r - low) / (1.0 - low)
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass(frozen=True)
class OuDominationResult:
    times: np.ndarray
    x_path: np.ndarray
    center_track: np.ndarray
    z_path: np.ndarray
    violation_fraction: float
    n_checked: int
    n_reflections: int
    eps_disc: float


def ou_domination(w: PotentialSpec, cfg: SimConfig, seed: int | None = None,
                  x0: float = 0.0, burn_in: float = 10.0,
                  eps_disc: float | None = None, z_min: float = 1e-6,
                  blend_low: float = 0.1) -> OuDominationResult:
    """Couple the path with the modulus of a 3d-dimensional OU process through
    the blended noise and report how often the domination inequality
    |X - c| <= 2 + Z + eps fails after burn-in (d = 1 here, so 3d - 1 = 2).

    eps allows for the Euler discretization; it defaults to 0.05 at dt = 1e-3
    and scales with sqrt(dt).
    """
    _check_dt(w, cfg)
    if w.convexity_constant <= 0:
        raise InvalidInputError("domination needs a uniformly convex interaction")
    if seed is None:
        seed = cfg.seed
    dt = cfg.dt
    n = cfg.n_steps
    if eps_disc is None:
        eps_disc = 0.05 * math.sqrt(dt / 1e-3)
    c_w = w.convexity_constant
    drift = _PolyDrift(w, None)
    sq_dt = math.sqrt(dt)
    db = (sq_dt * rng.normal_increments(seed, n, 0, rng.NOISE)).tolist()
    dbeta = (sq_dt * rng.normal_increments(seed, n, 0, rng.AUX_NOISE)).tolist()
    noise_scale = cfg.noise_scale

    x = float(x0)
    S = _initial_sums(drift, x0, cfg.t_start, None)
    L = len(S)
    c = drift.center_from_sums(S, x)
    z = max(1.0, abs(x - c))
    xs = np.empty(n + 1)
    cs = np.empty(n + 1)
    zs = np.empty(n + 1)
    xs[0], cs[0], zs[0] = x, c, z
    linear = drift.is_linear
    violations = 0
    checked = 0
    reflections = 0
    t_check = cfg.t_start + burn_in
    times = cfg.t_start + dt * np.arange(n + 1)
    for i in range(n):
        gap = x - c
        r = abs(gap)
        a = blend(r, blend_low)
        dg = (a * (db[i] if gap >= 0 else -db[i])
              + math.sqrt(max(0.0, 1.0 - a * a)) * dbeta[i])
        z += _SQRT2 * dg - (0.5 * c_w * z - 2.0 / z) * dt
        if z < z_min:
            z = z_min
            reflections += 1
        d = drift.value(x, S) if not linear else _lin_value(drift, S, x)
        x += -d * dt + noise_scale * db[i]
        for j in range(L - 1, 0, -1):
            S[j] += dt * x ** j
        S[0] += dt
        c = drift.center_from_sums(S, c) if not linear else _lin_center(drift, S)
        xs[i + 1], cs[i + 1], zs[i + 1] = x, c, z
        if times[i + 1] >= t_check:
            checked += 1
            if abs(x - c) > 2.0 + z + eps_disc:
                violations += 1
    frac = violations / checked if checked else 0.0
    return OuDominationResult(times=times, x_path=xs, center_track=cs, z_path=zs,
                              violation_fraction=frac, n_checked=checked,
                              n_reflections=reflections, eps_disc=eps_disc)


def _lin_value(drift: _PolyDrift, S, x: float) -> float:
    b0 = (drift.table[0][0] * S[0] + (drift.table[1][0] * S[1] if drift.n_moments > 1 else 0.0)) / S[0]
    b1 = drift.table[1][1] if drift.n_moments > 1 else 0.0
    return b0 + b1 * x


def _lin_center(drift: _PolyDrift, S) -> float:
    b0 = (drift.table[0][0] * S[0] + drift.table[1][0] * S[1]) / S[0]
    b1 = drift.table[1][1]
    return -b0 / b1


def ou_modulus_exact(c_w: float, d: int, dt: float, t_end: float, seed: int,
                     z0: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact-in-law path of Z = |U| for the 3d-dimensional OU process
    dU = sqrt(2) dB - (c_w/2) U dt, using the exact AR(1) transition."""
    m = 3 * d
    n = int(round(t_end / dt))
    theta = 0.5 * c_w
    a = math.exp(-theta * dt)
    s = math.sqrt((2.0 / c_w) * (1.0 - a * a))
    gen = rng.stream(seed, 0, rng.NOISE)
    if z0 is None:
        u = gen.standard_normal(m) * math.sqrt(2.0 / c_w)
    else:
        u = np.zeros(m)
        u[0] = z0
    out = np.empty((n + 1, m))
    out[0] = u
    # blockwise exact AR(1): within a block the scaled-cumsum trick is stable
    block = max(8, min(8192, int(30.0 / max(theta * dt, 1e-12))))
    xi = gen.standard_normal((n, m))
    pos = 0
    while pos < n:
        b = min(block, n - pos)
        powers = a ** np.arange(1, b + 1)
        inv = a ** (-np.arange(b, dtype=float))
        zcum = np.cumsum(xi[pos:pos + b] * inv[:, None], axis=0)
        seg = powers[:, None] * u[None, :] + s * (powers / a)[:, None] * zcum
        out[pos + 1:pos + b + 1] = seg
        u = seg[-1]
        pos += b
    ts = dt * np.arange(n + 1)
    return ts, np.linalg.norm(out, axis=1)


def ou_stationary_envelope_moment(c_w: float, d: int, scale: float, degree: int) -> float:
    """Closed-form stationary mean of P(Z): A (1 + E Z^k) for the 3d-dim OU
    modulus, via chi moments."""
    m = 3 * d
    ez_k = (4.0 / c_w) ** (degree / 2.0) * math.gamma((m + degree) / 2.0) / math.gamma(m / 2.0)
    return scale * (1.0 + ez_k)


# ---------------------------------------------------------------------------
# contraction bootstrap at time zero


@dataclass(frozen=True)
class PicardResult:
    times: np.ndarray
    path: np.ndarray
    sup_distances: tuple[float, ...]

    @property
    def contraction_ratios(self) -> tuple[float, ...]:
        d = self.sup_distances
        return tuple(d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0)


def picard_bootstrap(w: PotentialSpec, x0: float, times: np.ndarray,
                     noise_path: np.ndarray, tol: float = 1e-10,
                     max_rounds: int = 80) -> PicardResult:
    """Construct the path on a short initial interval by fixed-point iteration.

    The iteration map rebuilds the path from the supplied noise with the
    drift taken against the previous iterate's occupation measure; on a
    short enough interval it contracts at rate about one half.
    """
    times = np.asarray(times, dtype=float)
    noise = np.asarray(noise_path, dtype=float)
    if times[0] != 0.0 or times.size < 3 or times.size != noise.size:
        raise InvalidInputError("need matching time/noise grids starting at 0")
    delta = float(times[-1])
    lip = _lipschitz_radius2(w)
    if delta * lip >= 1.0 / 3.0:
        raise InvalidInputError(
            f"delta * Lip(grad W) = {delta * lip:.3f} >= 1/3; shrink the interval")
    if float(np.abs(noise).max()) > 0.5 + 1e-12:
        raise InvalidInputError("noise path leaves the half-unit ball; resample "
                                "with a smaller delta")
    g = np.asarray(np.polynomial.polynomial.polyder(w.poly1d_coefficients()))
    dts = np.diff(times)
    m = times.size
    path = x0 + noise.copy()
    sups = []
    for _ in range(max_rounds):
        new = np.empty(m)
        new[0] = x0
        # prefix power sums of the old path build the frozen drift at each step
        L = g.size
        S = np.zeros(L)
        y = x0
        for j in range(m - 1):
            if j == 0:
                d = float(np.polynomial.polynomial.polyval(y - path[0], g))
            else:
                b = np.zeros(L)
                for mm in range(L):
                    for i in range(mm + 1):
                        b[i] += g[mm] * math.comb(mm, i) * ((-1.0) ** (mm - i)) * S[mm - i]
                b /= S[0]
                d = float(np.polynomial.polynomial.polyval(y, b))
            y = y + (noise[j + 1] - noise[j]) - d * dts[j]
            new[j + 1] = y
            for p in range(L - 1, -1, -1):
                S[p] += dts[j] * path[j + 1] ** p
        sup = float(np.abs(new - path).max())
        sups.append(sup)
        path = new
        if len(sups) >= 2 and sups[-2] > 0 and sups[-1] / sups[-2] > 0.9:
            raise NumericFailureError("bootstrap iteration is not contracting; "
                                      "the interval is too long")
        if sup < tol:
            return PicardResult(times=times, path=path, sup_distances=tuple(sups))
    raise NumericFailureError("bootstrap did not reach tolerance")


def _lipschitz_radius2(w: PotentialSpec) -> float:
    xs = np.linspace(-2.0, 2.0, 2001)
    h = np.polynomial.polynomial.polyval(xs, np.polynomial.polynomial.polyder(
        w.poly1d_coefficients(), 2))
    return float(np.abs(h).max())


def _simulate_from_zero(w, x0, cfg, drift, replica):
    if drift.v_grad is not None:
        raise UnsupportedInputError("the t = 0 bootstrap handles the pure "
                                    "interaction case only")
    if cfg.history_mode != "running-moments":
        raise UnsupportedInputError("t = 0 runs use running-moments history")
    lip = _lipschitz_radius2(w)
    raw = rng.normal_increments(cfg.seed, cfg.n_steps, replica)
    incs = cfg.noise_scale * math.sqrt(cfg.dt) * raw
    noise_path = np.concatenate(([0.0], np.cumsum(incs)))
    m = int(min(cfg.n_steps // 2, max(2, math.floor((1.0 / (3.2 * lip)) / cfg.dt))))
    while m > 2 and float(np.abs(noise_path[:m + 1]).max()) > 0.5:
        m //= 2
    boot = picard_bootstrap(w, x0, cfg.dt * np.arange(m + 1), noise_path[:m + 1])
    occupation = ParticleMeasure(boot.path[1:], np.full(m, cfg.dt))
    tail_cfg = SimConfig(dt=cfg.dt, t_start=cfg.dt * m, t_end=cfg.t_end,
                         seed=cfg.seed, noise_scale=cfg.noise_scale,
                         history_mode=cfg.history_mode,
                         reservoir_size=cfg.reservoir_size,
                         center_every=cfg.center_every,
                         record_moments_every=cfg.record_moments_every)
    # reuse the tail of the same increment stream
    tail_n = tail_cfg.n_steps
    positions, centers = _run_moment_loop(drift, float(boot.path[-1]), tail_cfg,
                                          incs[m:m + tail_n], occupation)
    times = np.concatenate((boot.times[:-1],
                            tail_cfg.t_start + cfg.dt * np.arange(tail_n + 1)))
    full_pos = np.concatenate((boot.path[:-1], positions))
    weights = np.full(times.size, cfg.dt)
    weights[0] = 0.0
    cent = np.concatenate((np.full(m, centers[0]), centers))
    thin = cfg.record_moments_every or max(1, times.size // 2000)
    idx = np.arange(0, times.size, thin)
    mom = _moment_track(drift, full_pos, weights, idx)
    return TrajectoryRecord(w, None, cfg, replica, times, full_pos, weights,
                            cent, times[idx], mom)


# ---------------------------------------------------------------------------
# non-symmetric counterexample pair


def counterexample_system(t_end: float, dt: float, seed: int,
                          y0: float = 0.0, c0: float = 1.0,
                          t_start: float = 1.0, growth: float = 0.01
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduced Markov pair for the shifted quadratic attraction.

    Y is the path seen from the moving center and follows a linear SDE whose
    conditional transition is Gaussian with closed-form moments, so steps can
    grow proportionally to t (factor ``growth``) without integration bias;
    the center increments use log-exact quadrature plus a trapezoid for the
    fluctuation part.  The center grows like log t.
    """
    if t_start <= 0 or t_end <= t_start or dt <= 0:
        raise InvalidInputError("need t_end > t_start > 0 and dt > 0")
    gen = rng.stream(seed, 0, rng.NOISE)
    ts = [t_start]
    ys = [y0]
    cs = [c0]
    t, y, c = t_start, y0, c0
    while t < t_end - 1e-12:
        h = min(max(dt, growth * t), t_end - t)
        T = t + h
        eh = math.exp(-h)
        phi = eh * t / T
        mean_add = -(1.0 - eh) / T

        def prim(s):
            return math.exp(2.0 * (s - T)) * (0.5 * s * s - 0.5 * s + 0.25)

        var = max(0.0, (prim(T) - prim(t)) / (T * T))
        y_new = phi * y + mean_add + math.sqrt(var) * gen.standard_normal()
        c += math.log(T / t) + 0.5 * h * (y / t + y_new / T)
        t, y = T, y_new
        ts.append(t)
        ys.append(y)
        cs.append(c)
    return np.asarray(ts), np.asarray(ys), np.asarray(cs)


def counterexample_mean_track(t: np.ndarray, y0: float = 0.0,
                              t_start: float = 1.0) -> np.ndarray:
    """Closed-form mean of Y: ((y0 + 1) t0 e^{t0 - t} - 1)/t, against which
    replica averages can be checked."""
    t = np.asarray(t, dtype=float)
    return ((y0 + 1.0) * t_start * np.exp(t_start - t) - 1.0) / t
