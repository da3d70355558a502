"""Decoy-state parameter-estimation bounds.

Given fluctuation-adjusted postselection probabilities for the signal
and decoy intensities, these functions bound the vacuum yield, the
single-pair yield, the single-pair fraction of the postselected signal
events and the excess-noise factors.  Lower bounds are computed from the
pessimistic ends of the intervals, upper bounds from the optimistic
ends, so every bound stays conservative as the intervals widen.

Probability-like bounds clamp to [0, 1].  Excess-noise bounds clamp
below at 0 and are reported as "no key" above a configurable cap, since
nothing useful can be certified once the estimate diverges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from . import fluctuation
from .errors import ComputationError, DomainError, NoKeyError

__all__ = [
    "TWO_DECOY",
    "SINGLE_DECOY",
    "EXCESS_NOISE_CAP",
    "IntensityConfig",
    "IntensityStats",
    "VacuumYieldBounds",
    "DecoyBounds",
    "multiplier_forward",
    "vacuum_yield_bounds",
    "single_pair_yield_lower",
    "single_pair_fraction_lower_two",
    "single_pair_fraction_lower_single",
    "excess_noise_upper_two",
    "excess_noise_upper_single",
    "attach_fluctuation",
    "estimate_bounds",
]

TWO_DECOY = "two-decoy"
SINGLE_DECOY = "single-decoy"

#: Excess-noise bounds above this value are reported as "no key".
EXCESS_NOISE_CAP = 1e3


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class IntensityConfig:
    """Signal/decoy intensities and their selection probabilities.

    Two-decoy mode requires ``mu > v1 + v2`` and ``v1 > v2 >= 0``; the
    weakest selection probability is implied as the remainder.  In
    single-decoy mode ``v1`` holds the lone decoy intensity and must
    satisfy ``mu > v1 > 0``.
    """

    mode: str
    mu: float
    v1: float
    v2: float | None
    p_mu: float
    p_v1: float

    def __post_init__(self) -> None:
        if self.mode not in (TWO_DECOY, SINGLE_DECOY):
            raise DomainError(f"unknown decoy mode {self.mode!r}")
        if self.mu <= 0.0:
            raise DomainError(f"mu must be > 0, got {self.mu}")
        if not 0.0 < self.p_mu < 1.0 or not 0.0 < self.p_v1 < 1.0:
            raise DomainError("selection probabilities must lie in (0, 1)")
        if self.mode == TWO_DECOY:
            if self.v2 is None:
                raise DomainError("two-decoy mode requires v2 (0 allowed)")
            if not self.v1 > self.v2 >= 0.0:
                raise DomainError(
                    f"decoy intensities must satisfy v1 > v2 >= 0, "
                    f"got v1={self.v1}, v2={self.v2}"
                )
            if not self.mu > self.v1 + self.v2:
                raise DomainError(
                    f"signal intensity must satisfy mu > v1 + v2, "
                    f"got mu={self.mu}, v1={self.v1}, v2={self.v2}"
                )
            if self.p_v2 <= 0.0:
                raise DomainError(
                    "selection probabilities must leave a positive remainder "
                    f"for v2, got p_mu={self.p_mu}, p_v1={self.p_v1}"
                )
        else:
            if self.v2 is not None:
                raise DomainError("single-decoy mode must not define v2")
            if not self.mu > self.v1 > 0.0:
                raise DomainError(
                    f"single-decoy intensities must satisfy mu > v > 0, "
                    f"got mu={self.mu}, v={self.v1}"
                )
            if self.p_mu + self.p_v1 > 1.0 + 1e-12:
                raise DomainError(
                    "selection probabilities must sum to at most 1, "
                    f"got {self.p_mu + self.p_v1}"
                )

    @classmethod
    def two_decoy(
        cls, mu: float, v1: float, v2: float, p_mu: float, p_v1: float
    ) -> "IntensityConfig":
        return cls(mode=TWO_DECOY, mu=mu, v1=v1, v2=v2, p_mu=p_mu, p_v1=p_v1)

    @classmethod
    def single_decoy(
        cls, mu: float, v: float, p_mu: float, p_v: float
    ) -> "IntensityConfig":
        return cls(mode=SINGLE_DECOY, mu=mu, v1=v, v2=None, p_mu=p_mu, p_v1=p_v)

    @property
    def p_v2(self) -> float:
        if self.mode == SINGLE_DECOY:
            return 0.0
        return 1.0 - self.p_mu - self.p_v1

    def roles(self) -> list[tuple[str, float, float]]:
        """(role, intensity, selection probability) triples in fixed order."""
        if self.mode == TWO_DECOY:
            assert self.v2 is not None
            return [
                ("mu", self.mu, self.p_mu),
                ("v1", self.v1, self.p_v1),
                ("v2", self.v2, self.p_v2),
            ]
        return [("mu", self.mu, self.p_mu), ("v", self.v1, self.p_v1)]


@dataclass(frozen=True)
class IntensityStats:
    """Measured statistics for one intensity.

    ``p_post`` is the measured postselection probability, ``p_minus`` /
    ``p_plus`` its fluctuation-adjusted bounds (clamped to [0, 1]), and
    ``phi_t`` / ``phi_w`` the measured average multipliers of the timing
    and frequency correlations.
    """

    p_post: float
    p_minus: float
    p_plus: float
    phi_t: float
    phi_w: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_minus <= self.p_post <= self.p_plus <= 1.0:
            raise DomainError(
                "stats must satisfy 0 <= p_minus <= p_post <= p_plus <= 1, got "
                f"[{self.p_minus}, {self.p_post}, {self.p_plus}]"
            )
        if self.phi_t < 0.0 or self.phi_w < 0.0:
            raise DomainError("average multipliers must be >= 0")

    def phi(self, basis: str) -> float:
        if basis == "t":
            return self.phi_t
        if basis == "w":
            return self.phi_w
        raise DomainError(f"unknown correlation basis {basis!r}")


MeasuredStats = Mapping[str, IntensityStats]


@dataclass(frozen=True)
class VacuumYieldBounds:
    """Interval for the vacuum (zero-pair) yield.

    ``degenerate`` flags the pathological case where the computed lower
    bound exceeded the upper bound; the interval then collapses onto the
    upper bound.
    """

    lower: float
    upper: float
    degenerate: bool = False


@dataclass(frozen=True)
class DecoyBounds:
    """All decoy-state estimation outputs for one channel point."""

    gamma0_lb: float
    gamma0_ub: float
    gamma1_lb: float
    kmu_lb: float
    zeta_t_ub: float
    zeta_w_ub: float
    gamma0_degenerate: bool = False

    @property
    def no_key(self) -> bool:
        return (
            self.kmu_lb <= 0.0
            or not math.isfinite(self.zeta_t_ub)
            or not math.isfinite(self.zeta_w_ub)
        )


def multiplier_forward(k_lambda: float, zeta_x: float, delta_phi_x: float) -> float:
    """Forward model of the measured average multiplier.

    Postselected frames containing a genuine pair contribute the
    noise-scaled multiplier, the remainder a baseline offset:

        k_lambda * (1 + zeta_x) + (1 - k_lambda) * delta_phi_x
    """
    if not 0.0 <= k_lambda <= 1.0:
        raise DomainError(f"k_lambda must lie in [0, 1], got {k_lambda}")
    if zeta_x < 0.0:
        raise DomainError(f"zeta_x must be >= 0, got {zeta_x}")
    return k_lambda * (1.0 + zeta_x) + (1.0 - k_lambda) * delta_phi_x


def vacuum_yield_bounds(
    stats: MeasuredStats, v1: float, v2: float, p_d: float
) -> VacuumYieldBounds:
    """Bound the vacuum yield from the two decoy intensities.

    The lower bound is the decoy linear combination floored at the
    dark-count-only value ``p_d**2``; the upper bound is ``p_d``.
    """
    if v1 <= v2:
        raise DomainError(f"decoy intensities must satisfy v1 > v2, got {v1}, {v2}")
    if v2 < 0.0:
        raise DomainError(f"v2 must be >= 0, got {v2}")
    if not 0.0 <= p_d <= 1.0:
        raise DomainError(f"p_d must lie in [0, 1], got {p_d}")
    s1, s2 = stats["v1"], stats["v2"]
    combination = (
        v1 * s2.p_minus * math.exp(v2) - v2 * s1.p_plus * math.exp(v1)
    ) / (v1 - v2)
    lower = _clamp01(max(combination, p_d * p_d))
    upper = _clamp01(p_d)
    if lower > upper:
        return VacuumYieldBounds(lower=upper, upper=upper, degenerate=True)
    return VacuumYieldBounds(lower=lower, upper=upper)


def _two_decoy_denominator(mu: float, v1: float, v2: float) -> float:
    den = mu * v1 - mu * v2 - v1 * v1 + v2 * v2
    if den <= 0.0:
        raise DomainError(
            "two-decoy combination requires mu*v1 - mu*v2 - v1^2 + v2^2 > 0, "
            f"got {den} (mu={mu}, v1={v1}, v2={v2})"
        )
    return den


def single_pair_yield_lower(
    stats: MeasuredStats, mu: float, v1: float, v2: float, gamma0_lb: float
) -> float:
    """Lower-bound the single-pair yield from both decoy intensities.

    Uses the pessimistic end for the stronger decoy, the optimistic end
    for the weaker decoy and the signal, and the vacuum-yield lower bound
    (whose sign makes it the conservative choice here).
    """
    den = _two_decoy_denominator(mu, v1, v2)
    s_mu, s1, s2 = stats["mu"], stats["v1"], stats["v2"]
    value = (mu / den) * (
        s1.p_minus * math.exp(v1)
        - s2.p_plus * math.exp(v2)
        - ((v1 * v1 - v2 * v2) / (mu * mu))
        * (s_mu.p_plus * math.exp(mu) - gamma0_lb)
    )
    return _clamp01(value)


def single_pair_fraction_lower_two(
    stats: MeasuredStats,
    mu: float,
    v1: float,
    v2: float,
    gamma0_lb: float,
    gamma0_ub: float,
) -> float:
    """Lower-bound the single-pair fraction of postselected signal events.

    Takes the best of two routes: the combination of both decoys (with
    the vacuum-yield lower bound) and, for each usable decoy intensity
    alone, a direct bound with the vacuum-yield upper bound.  When the
    weak decoy is vacuum only the strong decoy's direct route is
    admissible.
    """
    s_mu = stats["mu"]
    p_mu_plus = s_mu.p_plus
    if p_mu_plus <= 0.0:
        return 0.0
    den = _two_decoy_denominator(mu, v1, v2)
    mu2 = mu * mu
    branches = [
        (mu2 / den)
        * (
            (stats["v1"].p_minus / p_mu_plus) * math.exp(v1 - mu)
            - (stats["v2"].p_plus / p_mu_plus) * math.exp(v2 - mu)
            - ((v1 * v1 - v2 * v2) / mu2)
            * (1.0 - gamma0_lb * math.exp(-mu) / p_mu_plus)
        )
    ]
    for role, lam in (("v1", v1), ("v2", v2)):
        direct_den = mu * lam - lam * lam
        if lam <= 0.0 or direct_den <= 0.0:
            continue
        s = stats[role]
        branches.append(
            (mu2 / direct_den)
            * (
                (s.p_minus / p_mu_plus) * math.exp(lam - mu)
                - (lam * lam) / mu2
                - ((mu2 - lam * lam) / mu2)
                * gamma0_ub
                * math.exp(-mu)
                / p_mu_plus
            )
        )
    if not branches:
        raise ComputationError("no admissible single-pair fraction branch")
    return _clamp01(max(branches))


def single_pair_fraction_lower_single(
    stats: MeasuredStats, mu: float, v: float, gamma0_ub: float
) -> float:
    """Single-decoy lower bound on the single-pair fraction."""
    if not mu > v > 0.0:
        raise DomainError(f"requires mu > v > 0, got mu={mu}, v={v}")
    s_mu, s_v = stats["mu"], stats["v"]
    p_mu_plus = s_mu.p_plus
    if p_mu_plus <= 0.0:
        return 0.0
    mu2 = mu * mu
    value = (mu2 / (mu * v - v * v)) * (
        (s_v.p_minus / p_mu_plus) * math.exp(v - mu)
        - (v * v) / mu2
        - ((mu2 - v * v) / mu2) * gamma0_ub * math.exp(-mu) / p_mu_plus
    )
    return _clamp01(value)


def _excess_noise_from_branches(
    entries: list[tuple[float, IntensityStats]],
    mu: float,
    p_mu_plus: float,
    kmu_lb: float,
    basis: str,
    cap: float,
    pairwise: bool,
) -> float:
    """Shared branch evaluation for the excess-noise upper bounds.

    ``entries`` holds (intensity, stats) pairs sorted descending by
    intensity.  The pairwise route differences two intensities; the
    direct route uses a single one (vacuum is skipped there).
    """
    candidates: list[float] = []
    if pairwise:
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                lam1, s1 = entries[i]
                lam2, s2 = entries[j]
                if lam1 <= lam2:
                    continue
                candidates.append(
                    mu
                    * math.exp(-mu)
                    / ((lam1 - lam2) * kmu_lb)
                    * (
                        s1.phi(basis) * s1.p_plus * math.exp(lam1) / p_mu_plus
                        - s2.phi(basis) * s2.p_minus * math.exp(lam2) / p_mu_plus
                    )
                )
    for lam, s in entries:
        if lam <= 0.0:
            continue
        candidates.append(
            math.exp(lam - mu)
            * (mu * s.p_plus)
            / (lam * p_mu_plus)
            * s.phi(basis)
            / kmu_lb
        )
    if not candidates:
        raise ComputationError("no admissible excess-noise branch")
    bound = max(0.0, min(candidates) - 1.0)
    if bound > cap:
        raise NoKeyError(
            f"excess-noise bound {bound:.6g} exceeds the cap {cap:.6g}; "
            "no key can be certified"
        )
    return bound


def excess_noise_upper_two(
    stats: MeasuredStats,
    mu: float,
    v1: float,
    v2: float,
    kmu_lb: float,
    *,
    cap: float = EXCESS_NOISE_CAP,
) -> tuple[float, float]:
    """Upper-bound both excess-noise factors in two-decoy mode.

    Minimizes, per correlation basis, over every ordered intensity pair
    and over every single-intensity route (vacuum excluded from the
    latter), then subtracts the unit baseline.  A vanishing single-pair
    fraction certifies nothing and signals "no key".
    """
    if kmu_lb <= 0.0:
        raise NoKeyError("single-pair fraction bound is 0; no key can be certified")
    s_mu = stats["mu"]
    if s_mu.p_plus <= 0.0:
        raise NoKeyError("no signal postselection events; no key can be certified")
    entries = sorted(
        [(mu, s_mu), (v1, stats["v1"]), (v2, stats["v2"])],
        key=lambda e: -e[0],
    )
    return tuple(
        _excess_noise_from_branches(
            entries, mu, s_mu.p_plus, kmu_lb, basis, cap, pairwise=True
        )
        for basis in ("t", "w")
    )


def excess_noise_upper_single(
    stats: MeasuredStats,
    mu: float,
    v: float,
    kmu_lb: float,
    *,
    cap: float = EXCESS_NOISE_CAP,
) -> tuple[float, float]:
    """Single-decoy counterpart of :func:`excess_noise_upper_two`."""
    if not mu > v > 0.0:
        raise DomainError(f"requires mu > v > 0, got mu={mu}, v={v}")
    if kmu_lb <= 0.0:
        raise NoKeyError("single-pair fraction bound is 0; no key can be certified")
    s_mu = stats["mu"]
    if s_mu.p_plus <= 0.0:
        raise NoKeyError("no signal postselection events; no key can be certified")
    entries = [(mu, s_mu), (v, stats["v"])]
    return tuple(
        _excess_noise_from_branches(
            entries, mu, s_mu.p_plus, kmu_lb, basis, cap, pairwise=True
        )
        for basis in ("t", "w")
    )


def attach_fluctuation(
    stats: MeasuredStats,
    intensities: IntensityConfig,
    p_t: float,
    n_pulses: float,
    eps_pe: float,
    method: str,
    *,
    enforce_applicability: bool = True,
) -> dict[str, IntensityStats]:
    """Replace the interval ends of measured stats with method-derived ones.

    The centers and multipliers are preserved; only ``p_minus`` and
    ``p_plus`` are recomputed for the chosen concentration method.
    """
    adjusted: dict[str, IntensityStats] = {}
    for role, _lam, p_sel in intensities.roles():
        s = stats[role]
        iv = fluctuation.interval(
            s.p_post,
            p_sel,
            p_t,
            n_pulses,
            eps_pe,
            method,
            enforce_applicability=enforce_applicability,
        )
        adjusted[role] = IntensityStats(
            p_post=s.p_post,
            p_minus=iv.p_minus,
            p_plus=iv.p_plus,
            phi_t=s.phi_t,
            phi_w=s.phi_w,
        )
    return adjusted


def estimate_bounds(
    stats: MeasuredStats,
    intensities: IntensityConfig,
    p_d: float,
    *,
    cap: float = EXCESS_NOISE_CAP,
) -> DecoyBounds:
    """Run the full estimation chain for one channel point.

    Composes the vacuum-yield, single-pair-yield, single-pair-fraction
    and excess-noise bounds for the configured decoy mode.  "No key"
    conditions are folded into the result (zero fraction bound or
    infinite noise bounds) rather than raised, so sweep drivers can emit
    an explicit no-key row.
    """
    mu = intensities.mu
    if intensities.mode == TWO_DECOY:
        v1, v2 = intensities.v1, intensities.v2
        assert v2 is not None
        g0 = vacuum_yield_bounds(stats, v1, v2, p_d)
        gamma1_lb = single_pair_yield_lower(stats, mu, v1, v2, g0.lower)
        kmu_lb = single_pair_fraction_lower_two(
            stats, mu, v1, v2, g0.lower, g0.upper
        )
    else:
        v = intensities.v1
        g0 = VacuumYieldBounds(lower=_clamp01(p_d * p_d), upper=_clamp01(p_d))
        kmu_lb = single_pair_fraction_lower_single(stats, mu, v, g0.upper)
        # Implied by the fraction bound: K = mu e^{-mu} gamma_1 / P_mu.
        gamma1_lb = _clamp01(
            kmu_lb * stats["mu"].p_plus * math.exp(mu) / mu
        )
    try:
        if intensities.mode == TWO_DECOY:
            zeta_t_ub, zeta_w_ub = excess_noise_upper_two(
                stats, mu, intensities.v1, intensities.v2, kmu_lb, cap=cap
            )
        else:
            zeta_t_ub, zeta_w_ub = excess_noise_upper_single(
                stats, mu, intensities.v1, kmu_lb, cap=cap
            )
    except NoKeyError:
        zeta_t_ub = zeta_w_ub = math.inf
    return DecoyBounds(
        gamma0_lb=g0.lower,
        gamma0_ub=g0.upper,
        gamma1_lb=gamma1_lb,
        kmu_lb=kmu_lb,
        zeta_t_ub=zeta_t_ub,
        zeta_w_ub=zeta_w_ub,
        gamma0_degenerate=g0.degenerate,
    )
