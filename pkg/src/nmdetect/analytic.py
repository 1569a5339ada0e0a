"""Closed-form detection and sensing quantities for diffusive NM swarms.

Setting: spherical nanomachines (radius a, diffusion D) are scattered outside
an exclusion ball of radius r around a point target at the origin, as a
homogeneous Poisson point process of density lambda. Each NM performs free
Brownian motion; the target is detected when some NM surface reaches it.

Single NM at initial center distance d >= a:

    p(t) = (a/d) erfc((d - a) / sqrt(4 D t))

and with first-order target degradation at rate mu (survival exp(-mu t)),
the probability of detecting before degradation and before t:

    p(t) = (a/2d) [ e^{-(d-a) sqrt(mu/D)} erfc(w - m)
                  + e^{+(d-a) sqrt(mu/D)} erfc(w + m) ],
    w = (d - a)/sqrt(4 D t),  m = sqrt(mu t).

Swarm counts. The mean number of NMs of one class whose tube (Brownian path
thickened by a) has covered the origin by time t:

    kappa(t) = 2 pi a lambda (a^2 - r^2 + 2 D t) erfc((r - a)/sqrt(4 D t))
             + 4 lambda sqrt(pi D t) a (r + a) e^{-(r-a)^2/(4 D t)}

which is the closed form of 4 pi a lambda Int_r^inf rho erfc((rho - a)/
sqrt(4 D t)) d rho. Detection by any NM is a void probability over the
superposed classes: P(t) = 1 - exp(-Sum_i kappa_i(t)). A target diffusing
with coefficient D_t is handled by the change of reference D -> D + D_t
(exact for the mean counts, an approximation for the void probability since
all NMs then share the one target path).

With degradation, averaging the conditional count over the exponential
degradation epoch gives

    zeta(t) = 2 pi lambda a (D/mu + r sqrt(D/mu)) e^{-(r-a) sqrt(mu/D)} erfc(w - m)
            + 2 pi lambda a (D/mu - r sqrt(D/mu)) e^{+(r-a) sqrt(mu/D)} erfc(w + m)
            - 4 pi a lambda (D/mu) e^{-mu t} erfc(w),
    w = (r - a)/sqrt(4 D t),  m = sqrt(mu t),

bounded as t -> inf by 4 pi lambda a (D/mu + r sqrt(D/mu)) e^{-(r-a) sqrt(mu/D)}.

The exp(+x) erfc(y) products above are evaluated as
exp(-(w^2 + m^2)) erfcx(w + m), using (d - a) sqrt(mu/D) = 2 w m, which never
overflows.

Indirect sensing: a target emitting marker molecules at rate M (marker
diffusion D_m) is sensed by an NM entering the region where the steady-state
concentration M/(4 pi D_m d) exceeds a threshold eta, i.e. within distance
d_m = M/(4 pi D_m eta). Sensing by time t is detection with every radius
inflated to a_i + d_m; sensing at time t is a ball-occupation probability of
the displaced NM density.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

from .model import MarkerSpec, NmClass, SystemConfig
from .numerics import QuadratureSpec, erfc, erfcx, integrate

logger = logging.getLogger(__name__)

__all__ = [
    "DetectionCurve",
    "DetectorCountCurve",
    "displaced_density",
    "kappa",
    "marker_concentration",
    "mean_detection_time",
    "p_detect",
    "p_detect_deg_approx",
    "p_detect_deg_exact",
    "p_sense_at",
    "p_sense_within",
    "p_single",
    "rho_given_td",
    "sensing_radius",
    "zeta",
]

_FOUR_PI = 4.0 * math.pi
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class DetectionCurve:
    """A probability-valued curve over a time grid."""

    t_grid: tuple[float, ...]
    values: tuple[float, ...]
    # cumulative curves ("detected within t") must be non-decreasing
    cumulative: bool = True

    def __post_init__(self) -> None:
        if len(self.t_grid) != len(self.values):
            raise ValueError("t_grid and values must have equal length")
        for v in self.values:
            if not -1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError(f"probability out of [0, 1]: {v!r}")
        if self.cumulative:
            for lo, hi in zip(self.values, self.values[1:]):
                if hi < lo - 1e-12:
                    raise ValueError("cumulative curve must be non-decreasing")


@dataclass(frozen=True)
class DetectorCountCurve:
    """An expected-count curve over a time grid."""

    t_grid: tuple[float, ...]
    values: tuple[float, ...]
    # mean coverage counts without degradation grow without bound
    monotone: bool = True

    def __post_init__(self) -> None:
        if len(self.t_grid) != len(self.values):
            raise ValueError("t_grid and values must have equal length")
        for v in self.values:
            if v < -1e-12:
                raise ValueError(f"count must be >= 0: {v!r}")
        if self.monotone:
            for lo, hi in zip(self.values, self.values[1:]):
                if hi < lo - 1e-12:
                    raise ValueError("count curve must be non-decreasing")


def _check_time(t: float, allow_inf: bool = False) -> float:
    t = float(t)
    if math.isnan(t) or t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if math.isinf(t) and not allow_inf:
        raise ValueError("t must be finite here")
    return t


def p_single(t: float, a: float, D: float, d: float, mu: float = 0.0) -> float:
    """Probability that one NM (radius a, diffusion D, initial center
    distance d) reaches the target within t, and before degradation when
    mu > 0. Accepts t = math.inf for the eventual-detection limit.
    """
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a!r}")
    if d < a:
        raise ValueError(f"d must be >= a (NM starts outside the target), got d={d!r}, a={a!r}")
    if not D > 0:
        raise ValueError(f"D must be > 0, got {D!r}")
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu!r}")
    t = _check_time(t, allow_inf=True)
    if t == 0.0:
        return 1.0 if d == a else 0.0
    if math.isinf(t):
        if mu == 0.0:
            return a / d
        return (a / d) * math.exp(-(d - a) * math.sqrt(mu / D))
    if mu == 0.0:
        return (a / d) * erfc((d - a) / math.sqrt(4.0 * D * t))
    w = (d - a) / math.sqrt(4.0 * D * t)
    m = math.sqrt(mu * t)
    # (d - a) sqrt(mu/D) = 2 w m; scaled form keeps both products bounded
    term_minus = math.exp(-2.0 * w * m) * erfc(w - m)
    term_plus = math.exp(-(w * w + m * m)) * erfcx(w + m)
    return (a / (2.0 * d)) * (term_minus + term_plus)


def displaced_density(rho: float, t: float, cls: NmClass, r: float) -> float:
    """Density of NM centers at distance rho from the target at time t, for
    an initially shell-excluded homogeneous deployment of this class.

    Equals lambda times the probability that a Gaussian displacement
    (per-axis variance 2 D t) starting at radius rho lands outside the
    exclusion ball, written as a sum of positive terms:

        lambda [ (erfc((r+rho)/s) + erfc((r-rho)/s)) / 2
               + (s/(2 rho sqrt(pi))) (e^{-((rho-r)/s)^2} - e^{-((rho+r)/s)^2}) ],
        s = sqrt(4 D t).
    """
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho!r}")
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r!r}")
    t = _check_time(t, allow_inf=True)
    lam = cls.density
    if math.isinf(t):
        return lam
    if t == 0.0:
        if rho > r:
            return lam
        if rho == r:
            return 0.5 * lam
        return 0.0
    s = math.sqrt(4.0 * cls.diffusion * t)
    half_sum = 0.5 * (erfc((r + rho) / s) + erfc((r - rho) / s))
    y = 2.0 * r * rho / (s * s)
    common = -(rho * rho + r * r) / (s * s)
    if y < 1e-4:
        # sinh(y)/rho -> (2 r / s^2)(1 + y^2/6); exact at rho = 0
        tail = (2.0 * r / (s * _SQRT_PI)) * math.exp(common) * (1.0 + y * y / 6.0)
    elif y < 1.0:
        tail = (s / (rho * _SQRT_PI)) * math.exp(common) * math.sinh(y)
    else:
        # difference of exponentials loses no precision once the terms are
        # an e^2 apart
        lo = (rho - r) / s
        hi = (rho + r) / s
        tail = (s / (2.0 * rho * _SQRT_PI)) * (math.exp(-lo * lo) - math.exp(-hi * hi))
    return lam * (half_sum + tail)


def kappa(t: float, cls: NmClass, r: float, D_override: Optional[float] = None) -> float:
    """Mean number of NMs of this class that have reached the target by t."""
    a = cls.radius
    lam = cls.density
    D = cls.diffusion if D_override is None else float(D_override)
    if not a > 0:
        raise ValueError(f"class radius must be > 0, got {a!r}")
    if r < a:
        raise ValueError(f"r must be >= class radius, got r={r!r}, a={a!r}")
    if not D > 0:
        raise ValueError(f"diffusion must be > 0, got {D!r}")
    t = _check_time(t, allow_inf=True)
    if t == 0.0 or lam == 0.0:
        return 0.0
    if math.isinf(t):
        return math.inf
    s = math.sqrt(4.0 * D * t)
    w = (r - a) / s
    first = 2.0 * math.pi * a * lam * (a * a - r * r + 2.0 * D * t) * erfc(w)
    second = 4.0 * lam * math.sqrt(math.pi * D * t) * a * (r + a) * math.exp(-w * w)
    return first + second


def zeta(
    t: float,
    cls: NmClass,
    r: float,
    mu: float,
    D_override: Optional[float] = None,
) -> float:
    """Mean number of NMs of this class that reach the target by t and before
    its degradation (rate mu > 0). Accepts t = math.inf for the saturated
    count; bounded, unlike kappa.

    The three-term closed form cancels terms of scale D/mu down to a value of
    scale D*t, so relative accuracy degrades like eps/(mu*t) as mu*t -> 0.
    Below mu*t ~ 1e-8 the count is within float precision of kappa(t) anyway
    (the two are sandwiched within relative mu*t of each other).
    """
    if not mu > 0:
        raise ValueError(
            f"zeta requires mu > 0; use kappa for the non-degradable case (got mu={mu!r})"
        )
    a = cls.radius
    lam = cls.density
    D = cls.diffusion if D_override is None else float(D_override)
    if not a > 0:
        raise ValueError(f"class radius must be > 0, got {a!r}")
    if r < a:
        raise ValueError(f"r must be >= class radius, got r={r!r}, a={a!r}")
    if not D > 0:
        raise ValueError(f"diffusion must be > 0, got {D!r}")
    t = _check_time(t, allow_inf=True)
    if t == 0.0 or lam == 0.0:
        return 0.0
    b_over = D / mu
    c_over = r * math.sqrt(D / mu)
    decay = math.exp(-(r - a) * math.sqrt(mu / D))
    if math.isinf(t):
        return _FOUR_PI * lam * a * (b_over + c_over) * decay
    w = (r - a) / math.sqrt(4.0 * D * t)
    m = math.sqrt(mu * t)
    pref = 2.0 * math.pi * lam * a
    term1 = pref * (b_over + c_over) * decay * erfc(w - m)
    # e^{(r-a) sqrt(mu/D)} erfc(w+m) = e^{-(w^2+m^2)} erfcx(w+m)
    term2 = pref * (b_over - c_over) * math.exp(-(w * w + m * m)) * erfcx(w + m)
    term3 = -2.0 * pref * b_over * math.exp(-mu * t) * erfc(w)
    return term1 + term2 + term3


def rho_given_td(t: float, t_d: float, cls: NmClass, r: float) -> float:
    """Mean detector count by time t given the target degraded at t_d:
    the count freezes at the degradation epoch."""
    t = _check_time(t)
    t_d = _check_time(t_d, allow_inf=True)
    return kappa(min(t, t_d), cls, r)


def _effective_d(cls: NmClass, config: SystemConfig) -> float:
    # relative motion of NM and target; exact for mean counts
    return cls.diffusion + config.target.diffusion


def p_detect(t: float, config: SystemConfig) -> float:
    """Probability that any NM has detected the (non-degradable) target by t."""
    if config.target.degradation_rate > 0:
        raise ValueError(
            "p_detect requires a non-degradable target; "
            "use p_detect_deg_exact or p_detect_deg_approx for mu > 0"
        )
    if config.single_nm_distance is not None:
        raise ValueError(
            "p_detect is the swarm void probability; use p_single for the "
            "fixed single-NM scenario"
        )
    t = _check_time(t)
    total = 0.0
    for cls in config.classes:
        total += kappa(t, cls, config.exclusion_radius, D_override=_effective_d(cls, config))
    return -math.expm1(-total)


def p_detect_deg_exact(
    t: float,
    config: SystemConfig,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """Detection probability before degradation, as the exact expectation over
    the degradation epoch: the conditional no-detection probability
    exp(-Sum kappa_i(min(t, t_d))) averaged over t_d ~ Exponential(mu).
    """
    mu = config.target.degradation_rate
    if not mu > 0:
        raise ValueError("p_detect_deg_exact requires mu > 0; use p_detect for mu = 0")
    if config.single_nm_distance is not None:
        raise ValueError("p_detect_deg_exact is the swarm form; use p_single with mu")
    t = _check_time(t)
    if t == 0.0:
        return 0.0
    if spec is None:
        spec = QuadratureSpec()
    r = config.exclusion_radius

    def survival(tau: float) -> float:
        total = 0.0
        for cls in config.classes:
            total += kappa(tau, cls, r, D_override=_effective_d(cls, config))
        return math.exp(-total)

    # the exponential weight puts everything below tau_cut; the remainder is
    # bounded by the weight itself
    tau_cut = min(t, -math.log(spec.tail_truncation_threshold) / mu)
    integral = integrate(lambda tau: mu * math.exp(-mu * tau) * survival(tau), 0.0, tau_cut, spec)
    atom = math.exp(-mu * t) * survival(t)
    return 1.0 - (integral + atom)


def p_detect_deg_approx(t: float, config: SystemConfig) -> float:
    """First-cumulant approximation of detection before degradation:
    1 - exp(-Sum zeta_i(t)). Accepts t = math.inf (saturation probability).
    """
    mu = config.target.degradation_rate
    if not mu > 0:
        raise ValueError("p_detect_deg_approx requires mu > 0; use p_detect for mu = 0")
    if config.single_nm_distance is not None:
        raise ValueError("p_detect_deg_approx is the swarm form; use p_single with mu")
    t = _check_time(t, allow_inf=True)
    total = 0.0
    for cls in config.classes:
        total += zeta(t, cls, config.exclusion_radius, mu, D_override=_effective_d(cls, config))
    return -math.expm1(-total)


def mean_detection_time(
    config: SystemConfig,
    mode: str = "stationary",
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """Expected first-detection epoch, Int_0^inf (1 - P(t)) dt.

    mode selects whether the target's own diffusion is folded into the NM
    diffusion ("mobile") or ignored ("stationary"). Returns math.inf whenever
    detection can fail: degradable targets, empty deployments, and the fixed
    single-NM scenario with d > a.
    """
    if mode not in ("stationary", "mobile"):
        raise ValueError(f"mode must be 'stationary' or 'mobile', got {mode!r}")
    if config.target.degradation_rate > 0:
        return math.inf
    if config.single_nm_distance is not None:
        return math.inf if config.single_nm_distance > config.classes[0].radius else 0.0
    if all(cls.density == 0.0 for cls in config.classes):
        return math.inf
    if spec is None:
        spec = QuadratureSpec()
    r = config.exclusion_radius

    def d_of(cls: NmClass) -> float:
        return cls.diffusion + (config.target.diffusion if mode == "mobile" else 0.0)

    def survival(t: float) -> float:
        total = 0.0
        for cls in config.classes:
            total += kappa(t, cls, r, D_override=d_of(cls))
        return math.exp(-total)

    upper = 64.0
    while survival(upper) > spec.tail_truncation_threshold:
        upper *= 2.0
        if upper > 2.0**40:
            raise ArithmeticError("no-detection probability does not decay; cannot integrate")
    # beyond `upper` the hazard rate exceeds sum_i 4 pi a_i lambda_i D_i erfc(...),
    # so the dropped tail is below survival(upper)/rate ~ 1e-15 seconds
    rate = sum(
        _FOUR_PI * cls.radius * cls.density * d_of(cls)
        * erfc((r - cls.radius) / math.sqrt(4.0 * d_of(cls) * upper))
        for cls in config.classes
    )
    tail_bound = survival(upper) / rate if rate > 0 else math.inf
    value = integrate(survival, 0.0, upper, spec)
    logger.debug("mean_detection_time: upper=%g tail_bound=%g value=%g", upper, tail_bound, value)
    return value


def marker_concentration(d: float, t: float, marker: MarkerSpec) -> float:
    """Marker concentration at distance d after emission time t; t = math.inf
    gives the steady state M/(4 pi D_m d)."""
    if not d > 0:
        raise ValueError(f"d must be > 0 (concentration diverges at the source), got {d!r}")
    t = _check_time(t, allow_inf=True)
    steady = marker.emission_rate / (_FOUR_PI * marker.diffusion * d)
    if math.isinf(t):
        return steady
    if t == 0.0:
        return 0.0
    return steady * erfc(d / math.sqrt(4.0 * marker.diffusion * t))


def sensing_radius(marker: MarkerSpec) -> float:
    """Distance within which the steady-state marker concentration exceeds
    the sensing threshold: d_m = M/(4 pi D_m eta)."""
    return marker.emission_rate / (_FOUR_PI * marker.diffusion * marker.threshold)


def p_sense_at(
    t: float,
    config: SystemConfig,
    d_m: float,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """Probability that at the instant t some NM center lies within a_i + d_m
    of the target: a ball-occupation probability of the displaced density.
    Not monotone in t. Accepts t = math.inf (flat-density limit).
    """
    if d_m < 0:
        raise ValueError(f"d_m must be >= 0, got {d_m!r}")
    t = _check_time(t, allow_inf=True)
    if spec is None:
        spec = QuadratureSpec()
    r = config.exclusion_radius
    total = 0.0
    for cls in config.classes:
        reach = cls.radius + d_m
        if math.isinf(t):
            total += cls.density * (4.0 / 3.0) * math.pi * reach**3
            continue
        if t == 0.0:
            if reach > r:
                total += cls.density * (4.0 / 3.0) * math.pi * (reach**3 - r**3)
            continue
        moved = NmClass(cls.radius, _effective_d(cls, config), cls.density)
        integrand = lambda rho, c=moved: _FOUR_PI * rho * rho * displaced_density(rho, t, c, r)
        total += integrate(integrand, 0.0, reach, spec)
    return -math.expm1(-total)


def p_sense_within(t: float, config: SystemConfig, d_m: float) -> float:
    """Probability that some NM has come within a_i + d_m of the target by t:
    detection with every radius inflated by the sensing margin. Valid only
    when the inflated radii stay inside the exclusion ball (r >= a_i + d_m)."""
    if d_m < 0:
        raise ValueError(f"d_m must be >= 0, got {d_m!r}")
    r = config.exclusion_radius
    for i, cls in enumerate(config.classes):
        if cls.radius + d_m > r:
            raise ValueError(
                f"classes[{i}]: inflated radius {cls.radius + d_m} exceeds the exclusion "
                f"radius {r}; the within-time sensing form does not cover NMs deployed "
                "inside the sensing region"
            )
    inflated = SystemConfig(
        classes=tuple(NmClass(c.radius + d_m, c.diffusion, c.density) for c in config.classes),
        exclusion_radius=r,
        target=config.target,
        marker=config.marker,
        single_nm_distance=config.single_nm_distance,
    )
    return p_detect(t, inflated)
