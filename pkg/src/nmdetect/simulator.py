"""Particle-based Monte Carlo ground truth for swarm detection and sensing.

Protocol: NM centers are scattered as a Poisson point process in the shell
between the exclusion radius and the window radius, every walker advances by
independent Gaussian steps of per-axis variance 2 D dt, and contact is
declared when a step ends inside the contact sphere or, failing that, with
the Brownian-bridge probability exp(-g_in g_out / (D dt)) that the radial gap
touched zero somewhere inside the step. Checking endpoints alone shrinks the
effective contact radius by 0.58 sqrt(2 D dt) (a few percent here); the
bridge test removes that O(sqrt(dt)) bias and leaves one of order dt. Target
degradation is a single exponential epoch per trial; hits after it are
discarded at reduction time, so one simulated trial serves both the
degradable and non-degradable statistics.

Far-field acceleration: an NM whose gap to contact is g can take
k = g^2 / (384 D dt) protocol steps in one Gaussian jump. The constant is
6 z^2 with z = 8: by the reflection principle the chance that the walk
touched the target somewhere inside the jump despite the endpoint arithmetic
is at most 12 Q(8) ~ 7.5e-15 per block, far below one event over any run this
library performs, so results are indistinguishable from single-stepping while
the work drops by orders of magnitude. Near contact (k = 1) every step runs
the full endpoint-plus-bridge check.

Randomness: trials own keyed substreams (derived from the master seed and the
trial index), and every NM inside a trial owns its own xoshiro256++ stream
seeded from the trial key and a stable per-NM tag. Outputs are indexed by
trial and reduced in trial order, which makes results byte-identical for any
thread count, chunk size, or NM processing order.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit, prange

from .model import SimConfig, SystemConfig
from .numerics import RngStream

logger = logging.getLogger(__name__)

__all__ = [
    "Deployment",
    "McEstimate",
    "TrialOutcome",
    "detector_counts",
    "estimate_curves",
    "first_detection_times",
    "run_trial",
    "sample_deployment",
    "simulate_sensing",
]

# substream domains under the master seed
_DOM_DEPLOY = 11
_DOM_PATHS = 22
_DOM_DEGRADE = 33
_DOM_SENSE_AT = 44

# trials per kernel launch; bounds deployment memory, does not affect results
_CHUNK = 128

# block skip denominator 6 z^2 at z = 8; see module docstring
_BLOCK_DENOM = 384.0

# skip the bridge draw when exp(-ex) < exp(-40) ~ 4e-18: below one event
# over any run this library performs, same standard as the block bound
_BRIDGE_CUT = 40.0

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U23 = np.uint64(23)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_U45 = np.uint64(45)
_U64 = np.uint64(64)
_INV53 = 1.0 / 9007199254740992.0
_TWO_PI = 6.283185307179586


@njit(inline="always")
def _sm_next(state):
    # splitmix64; used only to expand seeds into xoshiro state words
    state = state + _GOLD
    z = state
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31), state


@njit(inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (_U64 - k))


@njit(inline="always")
def _xo_init(base, tag):
    mixed, _ = _sm_next(np.uint64(tag))
    st = base ^ mixed
    s0, st = _sm_next(st)
    s1, st = _sm_next(st)
    s2, st = _sm_next(st)
    s3, st = _sm_next(st)
    if s0 | s1 | s2 | s3 == np.uint64(0):
        s0 = _GOLD
    return s0, s1, s2, s3


@njit(inline="always")
def _xo_next(s0, s1, s2, s3):
    # xoshiro256++
    result = _rotl(s0 + s3, _U23) + s0
    t = s1 << _U17
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = _rotl(s3, _U45)
    return result, s0, s1, s2, s3


@njit(inline="always")
def _norm_pair(s0, s1, s2, s3):
    # Box-Muller; u1 in (0, 1] keeps the log finite
    r0, s0, s1, s2, s3 = _xo_next(s0, s1, s2, s3)
    r1, s0, s1, s2, s3 = _xo_next(s0, s1, s2, s3)
    u1 = 1.0 - (r0 >> _U11) * _INV53
    u2 = (r1 >> _U11) * _INV53
    rad = math.sqrt(-2.0 * math.log(u1))
    ang = _TWO_PI * u2
    return rad * math.cos(ang), rad * math.sin(ang), s0, s1, s2, s3


@njit(inline="always")
def _unif(s0, s1, s2, s3):
    r, s0, s1, s2, s3 = _xo_next(s0, s1, s2, s3)
    return (r >> _U11) * _INV53, s0, s1, s2, s3


@njit(parallel=True, cache=True)
def _kernel_stationary(
    pos, radius, diff, tags, offsets, words, td_steps, horizon_steps, dt, grid_steps, cap_mode
):
    """Per trial: raw first-hit step (-1 when none) and, unless cap_mode,
    per-grid counts of distinct NMs whose first hit beat both the grid time
    and the degradation step."""
    n_trials = offsets.shape[0] - 1
    n_grid = grid_steps.shape[0]
    first_hit = np.full(n_trials, -1, np.int64)
    counts = np.zeros((n_trials, n_grid), np.int32)
    for tr in prange(n_trials):
        lo = offsets[tr]
        hi = offsets[tr + 1]
        n_nm = hi - lo
        best = horizon_steps + 1
        td = td_steps[tr]
        bins = np.zeros(n_grid + 1, np.int32)
        order = np.arange(n_nm)
        if cap_mode and n_nm > 1:
            # nearest first makes the cap bite sooner; per-NM streams keep
            # the outcome identical for any order
            d2 = np.empty(n_nm)
            for j in range(n_nm):
                px = pos[lo + j, 0]
                py = pos[lo + j, 1]
                pz = pos[lo + j, 2]
                d2[j] = px * px + py * py + pz * pz
            order = np.argsort(d2)
        for oj in range(n_nm):
            j = lo + order[oj]
            a = radius[j]
            d_nm = diff[j]
            x = pos[j, 0]
            y = pos[j, 1]
            z = pos[j, 2]
            a2 = a * a
            limit = horizon_steps
            if cap_mode and best - 1 < limit:
                limit = best - 1
            d2v = x * x + y * y + z * z
            hit_step = np.int64(-1)
            if d2v <= a2:
                hit_step = np.int64(0)
            else:
                s0, s1, s2, s3 = _xo_init(words[tr, 0], tags[j])
                have_sp = False
                sp = 0.0
                sig1 = math.sqrt(2.0 * d_nm * dt)
                inv = 1.0 / (_BLOCK_DENOM * d_nm * dt)
                bri = 1.0 / (d_nm * dt)
                step = np.int64(0)
                while step < limit:
                    gap = math.sqrt(d2v) - a
                    kf = gap * gap * inv
                    remaining = limit - step
                    if kf < 1.0:
                        k = np.int64(1)
                    elif kf >= remaining:
                        k = remaining
                    else:
                        k = np.int64(kf)
                    if have_sp:
                        z1 = sp
                        z2, z3, s0, s1, s2, s3 = _norm_pair(s0, s1, s2, s3)
                        have_sp = False
                    else:
                        z1, z2, s0, s1, s2, s3 = _norm_pair(s0, s1, s2, s3)
                        z3, sp, s0, s1, s2, s3 = _norm_pair(s0, s1, s2, s3)
                        have_sp = True
                    sig = sig1 * math.sqrt(1.0 * k)
                    x += sig * z1
                    y += sig * z2
                    z += sig * z3
                    step += k
                    d2v = x * x + y * y + z * z
                    if d2v <= a2:
                        hit_step = step
                        break
                    if k == 1:
                        # endpoints outside; the radial gap may still have
                        # touched zero inside the step (bridge probability)
                        ex = gap * (math.sqrt(d2v) - a) * bri
                        if ex < _BRIDGE_CUT:
                            u, s0, s1, s2, s3 = _unif(s0, s1, s2, s3)
                            if u < math.exp(-ex):
                                hit_step = step
                                break
            if hit_step >= 0:
                if hit_step < best:
                    best = hit_step
                if not cap_mode and hit_step <= td:
                    b = np.searchsorted(grid_steps, hit_step)
                    if b < n_grid:
                        bins[b] += 1
        if best <= horizon_steps:
            first_hit[tr] = best
        if not cap_mode:
            acc = np.int32(0)
            for g in range(n_grid):
                acc += bins[g]
                counts[tr, g] = acc
    return first_hit, counts


@njit(parallel=True, cache=True)
def _kernel_mobile(
    pos, radius, diff, tags, offsets, words, td_steps, horizon_steps, dt, grid_steps,
    d_target, cap_mode
):
    """Mobile-target variant: all NMs of a trial share one target path, and
    each NM walks in the frame of the target (relative diffusion D + D_t)."""
    n_trials = offsets.shape[0] - 1
    n_grid = grid_steps.shape[0]
    first_hit = np.full(n_trials, -1, np.int64)
    counts = np.zeros((n_trials, n_grid), np.int32)
    for tr in prange(n_trials):
        lo = offsets[tr]
        hi = offsets[tr + 1]
        n_nm = hi - lo
        best = horizon_steps + 1
        td = td_steps[tr]
        bins = np.zeros(n_grid + 1, np.int32)
        tpath = np.empty((horizon_steps + 1, 3))
        tpath[0, 0] = 0.0
        tpath[0, 1] = 0.0
        tpath[0, 2] = 0.0
        filled = np.int64(0)
        t0, t1, t2, t3 = _xo_init(words[tr, 1], np.int64(0))
        t_have = False
        t_sp = 0.0
        sig_t = math.sqrt(2.0 * d_target * dt)
        order = np.arange(n_nm)
        if cap_mode and n_nm > 1:
            d2 = np.empty(n_nm)
            for j in range(n_nm):
                px = pos[lo + j, 0]
                py = pos[lo + j, 1]
                pz = pos[lo + j, 2]
                d2[j] = px * px + py * py + pz * pz
            order = np.argsort(d2)
        for oj in range(n_nm):
            j = lo + order[oj]
            a = radius[j]
            d_nm = diff[j]
            x = pos[j, 0]
            y = pos[j, 1]
            z = pos[j, 2]
            a2 = a * a
            limit = horizon_steps
            if cap_mode and best - 1 < limit:
                limit = best - 1
            d2v = x * x + y * y + z * z
            hit_step = np.int64(-1)
            if d2v <= a2:
                hit_step = np.int64(0)
            else:
                s0, s1, s2, s3 = _xo_init(words[tr, 0], tags[j])
                have_sp = False
                sp = 0.0
                d_rel = d_nm + d_target
                sig1 = math.sqrt(2.0 * d_nm * dt)
                inv = 1.0 / (_BLOCK_DENOM * d_rel * dt)
                bri = 1.0 / (d_rel * dt)
                step = np.int64(0)
                while step < limit:
                    gap = math.sqrt(d2v) - a
                    kf = gap * gap * inv
                    remaining = limit - step
                    if kf < 1.0:
                        k = np.int64(1)
                    elif kf >= remaining:
                        k = remaining
                    else:
                        k = np.int64(kf)
                    need = step + k
                    while filled < need:
                        nxt = filled + 1
                        if t_have:
                            w1 = t_sp
                            w2, w3, t0, t1, t2, t3 = _norm_pair(t0, t1, t2, t3)
                            t_have = False
                        else:
                            w1, w2, t0, t1, t2, t3 = _norm_pair(t0, t1, t2, t3)
                            w3, t_sp, t0, t1, t2, t3 = _norm_pair(t0, t1, t2, t3)
                            t_have = True
                        tpath[nxt, 0] = tpath[filled, 0] + sig_t * w1
                        tpath[nxt, 1] = tpath[filled, 1] + sig_t * w2
                        tpath[nxt, 2] = tpath[filled, 2] + sig_t * w3
                        filled = nxt
                    if have_sp:
                        z1 = sp
                        z2, z3, s0, s1, s2, s3 = _norm_pair(s0, s1, s2, s3)
                        have_sp = False
                    else:
                        z1, z2, s0, s1, s2, s3 = _norm_pair(s0, s1, s2, s3)
                        z3, sp, s0, s1, s2, s3 = _norm_pair(s0, s1, s2, s3)
                        have_sp = True
                    sig = sig1 * math.sqrt(1.0 * k)
                    x += sig * z1 - (tpath[need, 0] - tpath[step, 0])
                    y += sig * z2 - (tpath[need, 1] - tpath[step, 1])
                    z += sig * z3 - (tpath[need, 2] - tpath[step, 2])
                    step = need
                    d2v = x * x + y * y + z * z
                    if d2v <= a2:
                        hit_step = step
                        break
                    if k == 1:
                        # bridge over the relative motion, as in the
                        # stationary kernel
                        ex = gap * (math.sqrt(d2v) - a) * bri
                        if ex < _BRIDGE_CUT:
                            u, s0, s1, s2, s3 = _unif(s0, s1, s2, s3)
                            if u < math.exp(-ex):
                                hit_step = step
                                break
            if hit_step >= 0:
                if hit_step < best:
                    best = hit_step
                if not cap_mode and hit_step <= td:
                    b = np.searchsorted(grid_steps, hit_step)
                    if b < n_grid:
                        bins[b] += 1
        if best <= horizon_steps:
            first_hit[tr] = best
        if not cap_mode:
            acc = np.int32(0)
            for g in range(n_grid):
                acc += bins[g]
                counts[tr, g] = acc
    return first_hit, counts


@dataclass(frozen=True)
class Deployment:
    """Initial NM center positions, one (n, 3) array per class."""

    positions_by_class: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class TrialOutcome:
    detected: bool
    first_detection_time: Optional[float]       # raw first hit, s
    degradation_time: float                     # s, math.inf when mu = 0
    detectors_by_time: tuple[int, ...]          # distinct NMs with hit <= min(t, t_d)


@dataclass(frozen=True)
class McEstimate:
    t_grid: np.ndarray
    p_hat: np.ndarray
    ci_half_width: np.ndarray  # 95% normal approximation
    mean_detectors: np.ndarray
    trials: int

    def __post_init__(self) -> None:
        if np.any(self.p_hat < 0) or np.any(self.p_hat > 1):
            raise ValueError("p_hat must lie in [0, 1]")
        if np.any(self.ci_half_width < 0):
            raise ValueError("ci_half_width must be >= 0")


def _apply_thread_env() -> None:
    raw = os.environ.get("NMDETECT_THREADS")
    if raw:
        import numba

        limit = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(max(1, min(int(raw), limit)))


def _domain_rng(master_seed: int, domain: int) -> RngStream:
    return RngStream(master_seed, domain << 32)


def sample_deployment(config: SystemConfig, sim: SimConfig, rng: RngStream) -> Deployment:
    """Scatter NM centers in the shell [r, window_radius] per class, Poisson
    counts with inverse-CDF radii and isotropic directions. A config with
    single_nm_distance places exactly one NM of the first class instead."""
    if config.single_nm_distance is not None:
        d = config.single_nm_distance
        arrays = [np.array([[0.0, 0.0, d]])]
        arrays.extend(np.zeros((0, 3)) for _ in config.classes[1:])
        return Deployment(tuple(arrays))
    r3 = config.exclusion_radius**3
    w3 = sim.window_radius**3
    volume = (4.0 / 3.0) * math.pi * (w3 - r3)
    arrays = []
    for cls in config.classes:
        n = int(rng.poisson(cls.density * volume))
        if n == 0:
            arrays.append(np.zeros((0, 3)))
            continue
        radii = np.cbrt(r3 + rng.uniform(size=n) * (w3 - r3))
        vec = rng.normal(size=(n, 3))
        norms = np.linalg.norm(vec, axis=1)
        norms[norms == 0.0] = 1.0
        arrays.append(vec * (radii / norms)[:, None])
    return Deployment(tuple(arrays))


def _flatten(deployment: Deployment, config: SystemConfig, margin: float):
    """Concatenate class arrays with per-NM radius, diffusion, and a stable
    tag (class index and within-class index) that keys the NM's RNG stream."""
    pos_parts = []
    rad_parts = []
    diff_parts = []
    tag_parts = []
    for ci, (cls, arr) in enumerate(zip(config.classes, deployment.positions_by_class)):
        n = arr.shape[0]
        pos_parts.append(np.asarray(arr, dtype=np.float64).reshape(n, 3))
        rad_parts.append(np.full(n, cls.radius + margin))
        diff_parts.append(np.full(n, cls.diffusion))
        tag_parts.append((np.int64(ci) << np.int64(40)) + np.arange(n, dtype=np.int64))
    return (
        np.ascontiguousarray(np.concatenate(pos_parts)),
        np.concatenate(rad_parts),
        np.concatenate(diff_parts),
        np.concatenate(tag_parts),
    )


def _steps_of(t: float, dt: float) -> int:
    ratio = t / dt
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-6 * max(1.0, abs(ratio)):
        return int(nearest)
    return int(math.floor(ratio))


def _grid_steps(t_grid, dt: float) -> np.ndarray:
    return np.array([_steps_of(t, dt) for t in t_grid], dtype=np.int64)


def _path_words(master_seed: int, lo: int, hi: int) -> np.ndarray:
    words = np.empty((hi - lo, 2), dtype=np.uint64)
    for i in range(lo, hi):
        seq = np.random.SeedSequence((master_seed, _DOM_PATHS, i))
        words[i - lo] = seq.generate_state(2, np.uint64)
    return words


def _degradation_times(config: SystemConfig, sim: SimConfig) -> np.ndarray:
    mu = config.target.degradation_rate
    if mu <= 0:
        return np.full(sim.trials, math.inf)
    return _domain_rng(sim.master_seed, _DOM_DEGRADE).exponential(mu, sim.trials)


def _run_kernel(config, pos, radius, diff, tags, offsets, words, td_steps,
                horizon_steps, dt, grid_steps, cap_mode):
    _apply_thread_env()
    if config.target.diffusion > 0.0:
        return _kernel_mobile(
            pos, radius, diff, tags, offsets, words, td_steps,
            np.int64(horizon_steps), dt, grid_steps, config.target.diffusion, cap_mode,
        )
    return _kernel_stationary(
        pos, radius, diff, tags, offsets, words, td_steps,
        np.int64(horizon_steps), dt, grid_steps, cap_mode,
    )


def _batch(config: SystemConfig, sim: SimConfig, margin: float, cap_mode: bool):
    """Run all trials chunked; returns (first_hit_steps, counts, td_steps)."""
    n = sim.trials
    dt = sim.time_step
    horizon_steps = _steps_of(sim.horizon, dt)
    grid = _grid_steps(sim.t_grid, dt)
    td = _degradation_times(config, sim)
    td_steps = np.where(
        np.isinf(td),
        np.int64(horizon_steps + 1),
        np.minimum(np.floor(td / dt), horizon_steps + 1).astype(np.int64),
    )
    first_hit = np.empty(n, dtype=np.int64)
    counts = np.zeros((n, len(grid)), dtype=np.int32)
    total_nm = 0
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        parts = []
        offsets = np.zeros(hi - lo + 1, dtype=np.int64)
        for i in range(lo, hi):
            dep = sample_deployment(config, sim, _trial_rng(sim.master_seed, i))
            parts.append(_flatten(dep, config, margin))
            offsets[i - lo + 1] = offsets[i - lo] + parts[-1][0].shape[0]
        pos = np.concatenate([p[0] for p in parts])
        radius = np.concatenate([p[1] for p in parts])
        diff = np.concatenate([p[2] for p in parts])
        tags = np.concatenate([p[3] for p in parts])
        words = _path_words(sim.master_seed, lo, hi)
        fh, ct = _run_kernel(
            config, pos, radius, diff, tags, offsets, words, td_steps[lo:hi],
            horizon_steps, dt, grid, cap_mode,
        )
        first_hit[lo:hi] = fh
        counts[lo:hi] = ct
        total_nm += pos.shape[0]
    logger.debug(
        "batch: trials=%d mean NMs/trial=%.1f horizon_steps=%d cap=%s",
        n, total_nm / max(n, 1), horizon_steps, cap_mode,
    )
    return first_hit, counts, td_steps, horizon_steps, grid


def _trial_rng(master_seed: int, trial: int) -> RngStream:
    # stream id encodes (domain, trial) so each trial's deployment replays
    # from its own key, independent of chunking
    return RngStream(master_seed, (_DOM_DEPLOY << 32) + trial)


def run_trial(
    config: SystemConfig,
    sim: SimConfig,
    rng: RngStream,
    deployment: Optional[Deployment] = None,
) -> TrialOutcome:
    """One trial: deployment (sampled from rng unless given), one degradation
    epoch, Brownian walks to the horizon. Draw order: deployment, degradation
    epoch (only when mu > 0), then two path seed words."""
    if deployment is None:
        deployment = sample_deployment(config, sim, rng)
    mu = config.target.degradation_rate
    t_d = float(rng.exponential(mu)) if mu > 0 else math.inf
    words = rng.generator.integers(0, 2**64, size=(1, 2), dtype=np.uint64)
    dt = sim.time_step
    horizon_steps = _steps_of(sim.horizon, dt)
    grid = _grid_steps(sim.t_grid, dt)
    pos, radius, diff, tags = _flatten(deployment, config, 0.0)
    offsets = np.array([0, pos.shape[0]], dtype=np.int64)
    td_step = np.array(
        [horizon_steps + 1 if math.isinf(t_d) else min(int(t_d / dt), horizon_steps + 1)],
        dtype=np.int64,
    )
    fh, ct = _run_kernel(
        config, pos, radius, diff, tags, offsets, words, td_step,
        horizon_steps, dt, grid, False,
    )
    first = None if fh[0] < 0 else fh[0] * dt
    detected = first is not None and first <= min(sim.horizon, t_d)
    return TrialOutcome(
        detected=detected,
        first_detection_time=first,
        degradation_time=t_d,
        detectors_by_time=tuple(int(c) for c in ct[0]),
    )


def _reduce(first_hit, counts, td_steps, grid, dt, trials) -> McEstimate:
    hits = np.where(first_hit >= 0, first_hit, np.iinfo(np.int64).max)
    effective = np.where(hits <= td_steps, hits, np.iinfo(np.int64).max)
    p_hat = np.empty(len(grid))
    for g, gs in enumerate(grid):
        p_hat[g] = np.mean(effective <= gs)
    ci = 1.96 * np.sqrt(p_hat * (1.0 - p_hat) / trials)
    return McEstimate(
        t_grid=np.array(grid, dtype=np.float64) * dt,
        p_hat=p_hat,
        ci_half_width=ci,
        mean_detectors=counts.mean(axis=0),
        trials=trials,
    )


def estimate_curves(config: SystemConfig, sim: SimConfig) -> McEstimate:
    """Detection probability and mean distinct-detector count on the t grid,
    with 95% normal-approximation confidence half-widths."""
    if sim.trials < 100:
        raise ValueError(f"need at least 100 trials for estimates, got {sim.trials}")
    first_hit, counts, td_steps, _, grid = _batch(config, sim, 0.0, False)
    est = _reduce(first_hit, counts, td_steps, grid, sim.time_step, sim.trials)
    logger.info(
        "estimate_curves: trials=%d final p_hat=%.4f", sim.trials, est.p_hat[-1]
    )
    return est


def first_detection_times(config: SystemConfig, sim: SimConfig) -> np.ndarray:
    """Raw first-detection times per trial (math.inf when the horizon passed
    with no hit). Degradation does not censor these; it is reported separately
    by estimate_curves."""
    if sim.trials < 1:
        raise ValueError("need at least one trial")
    first_hit, _, _, _, _ = _batch(config, sim, 0.0, True)
    return np.where(first_hit >= 0, first_hit * sim.time_step, math.inf)


def detector_counts(config: SystemConfig, sim: SimConfig) -> np.ndarray:
    """Distinct-detector counts, one row per trial, one column per grid time."""
    if sim.trials < 1:
        raise ValueError("need at least one trial")
    _, counts, _, _, _ = _batch(config, sim, 0.0, False)
    return counts


def simulate_sensing(config: SystemConfig, sim: SimConfig, d_m: float, mode: str) -> McEstimate:
    """Sensing estimates for a margin d_m around every NM.

    within_t: first entry of any NM into its inflated contact radius, the
    same walk and reduction as estimate_curves (d_m = 0 reproduces it
    exactly, same seeds and all). at_t: occupation indicator evaluated only
    at the grid instants, sampled by exact Gaussian jumps between instants.
    """
    if d_m < 0:
        raise ValueError(f"d_m must be >= 0, got {d_m!r}")
    if mode == "within_t":
        if sim.trials < 100:
            raise ValueError(f"need at least 100 trials for estimates, got {sim.trials}")
        first_hit, counts, td_steps, _, grid = _batch(config, sim, d_m, False)
        return _reduce(first_hit, counts, td_steps, grid, sim.time_step, sim.trials)
    if mode != "at_t":
        raise ValueError(f"mode must be 'within_t' or 'at_t', got {mode!r}")
    if config.target.degradation_rate > 0:
        raise ValueError("at_t sensing is defined for non-degradable targets")
    if sim.trials < 100:
        raise ValueError(f"need at least 100 trials for estimates, got {sim.trials}")
    return _sense_at(config, sim, d_m)


def _sense_at(config: SystemConfig, sim: SimConfig, d_m: float) -> McEstimate:
    # positions at the grid instants are exactly Gaussian; no dt stepping
    n = sim.trials
    grid = np.asarray(sim.t_grid, dtype=np.float64)
    gen = _domain_rng(sim.master_seed, _DOM_SENSE_AT)
    d_t = config.target.diffusion
    any_inside = np.zeros((n, len(grid)), dtype=bool)
    inside_count = np.zeros((n, len(grid)), dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        parts = []
        offsets = np.zeros(hi - lo + 1, dtype=np.int64)
        for i in range(lo, hi):
            dep = sample_deployment(config, sim, _trial_rng(sim.master_seed, i))
            parts.append(_flatten(dep, config, d_m))
            offsets[i - lo + 1] = offsets[i - lo] + parts[-1][0].shape[0]
        pos = np.concatenate([p[0] for p in parts])
        reach = np.concatenate([p[1] for p in parts])
        diff = np.concatenate([p[2] for p in parts])
        trial_idx = np.repeat(np.arange(hi - lo), np.diff(offsets))
        prev_t = 0.0
        rel = pos.copy()
        for g, t in enumerate(grid):
            delta = t - prev_t
            if delta > 0.0:
                rel += gen.normal(size=rel.shape) * np.sqrt(2.0 * diff * delta)[:, None]
                if d_t > 0.0:
                    tgt = gen.normal(size=(hi - lo, 3)) * math.sqrt(2.0 * d_t * delta)
                    rel -= tgt[trial_idx]
                prev_t = t
            inside = np.einsum("ij,ij->i", rel, rel) <= reach * reach
            cnt = np.bincount(trial_idx[inside], minlength=hi - lo)
            inside_count[lo:hi, g] = cnt
            any_inside[lo:hi, g] = cnt > 0
    p_hat = any_inside.mean(axis=0)
    ci = 1.96 * np.sqrt(p_hat * (1.0 - p_hat) / n)
    return McEstimate(
        t_grid=grid,
        p_hat=p_hat,
        ci_half_width=ci,
        mean_detectors=inside_count.mean(axis=0),
        trials=n,
    )
