"""Distance sweeps, maximum-distance search and CSV emission.

A sweep point evaluates the full chain at one channel length: analytic
postselection probabilities, fluctuation intervals of the configured
method, decoy-state bounds, worst-case security quantities and the
finite-size capacity.  The "measured" statistics of a sweep are the
model expectations (expected values plus fluctuation allowances); the
Monte Carlo path is a separate validation tool.

When the multiplicative bound's preconditions fail for an intensity,
the sweep proceeds with the stated widths and annotates the row's
method column (e.g. ``chernoff(unchecked:v2)``) instead of silently
switching methods; a strict mode raises instead.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable

from . import fluctuation, physics
from .decoy import (
    IntensityStats,
    attach_fluctuation,
    estimate_bounds,
    multiplier_forward,
)
from .errors import ChernoffInapplicableError, DomainError
from .keyrate import finite_key_terms, secure_key_capacity
from .physics import ChannelPoint
from .scenario import Scenario

__all__ = [
    "CSV_HEADER",
    "ResultRow",
    "run_point",
    "sweep_distance",
    "max_distance",
    "emit_csv",
    "emit_plotdata",
]

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "length_km,n_pulses,method,delta_i_bpc,r_hd_bpc,kmu_lb,zeta_t_ub,"
    "zeta_w_ub,ec_term,pa_term,smooth_term,positive"
)

#: Ceiling for the maximum-distance search; a capacity still positive
#: here is reported as an unbounded transmission distance.
MAX_SEARCH_KM = 2000.0


@dataclass(frozen=True)
class ResultRow:
    """One evaluated channel point."""

    length_km: float
    n_pulses: float
    method: str
    delta_i: float
    r_hd: float
    kmu_lb: float
    zeta_t_ub: float
    zeta_w_ub: float
    ec_term: float
    pa_term: float
    smooth_term: float
    positive: bool


def _effective_method(scenario: Scenario) -> str:
    if math.isinf(scenario.n_pulses):
        return "exact"
    return scenario.method


def run_point(
    scenario: Scenario,
    length_km: float,
    *,
    strict_chernoff: bool = False,
) -> ResultRow:
    """Evaluate the secure-key capacity at one channel length.

    "No key" conditions (vanishing single-pair fraction bound, or an
    excess-noise bound beyond the cap) yield a row with ``positive``
    false and capacities of ``-inf`` rather than an exception.
    """
    phys = scenario.phys
    frame = scenario.frame
    channel = ChannelPoint.from_length(phys.alpha, length_km)
    method = _effective_method(scenario)
    eps_pe = scenario.budget.eps_pe

    gamma1 = physics.pair_yield(
        1, phys.eta_alice, phys.eta_bob, channel.eta_t, frame.p_d
    )
    unchecked: list[str] = []
    raw_stats: dict[str, IntensityStats] = {}
    for role, lam, p_sel in scenario.intensities.roles():
        p_post = physics.postselection_prob_closed(
            lam, phys.eta_alice, phys.eta_bob, channel.eta_t, frame.p_d
        )
        k_true = lam * math.exp(-lam) * gamma1 / p_post if p_post > 0.0 else 0.0
        phi = multiplier_forward(min(k_true, 1.0), frame.zeta, scenario.delta_phi)
        if method == "chernoff":
            frames = fluctuation.frames_for_estimation(
                p_sel, scenario.p_t, scenario.n_pulses
            )
            check = fluctuation.chernoff_applicable(p_post * frames, frames, eps_pe)
            if not check.ok:
                if strict_chernoff:
                    raise ChernoffInapplicableError(
                        f"multiplicative bound inapplicable for intensity "
                        f"{role!r} at {length_km} km: {check.reason}",
                        diagnostics=check,
                    )
                unchecked.append(role)
        raw_stats[role] = IntensityStats(
            p_post=p_post, p_minus=p_post, p_plus=p_post, phi_t=phi, phi_w=phi
        )
    stats = attach_fluctuation(
        raw_stats,
        scenario.intensities,
        scenario.p_t,
        scenario.n_pulses,
        eps_pe,
        method,
        enforce_applicability=False,
    )
    bounds = estimate_bounds(stats, scenario.intensities, frame.p_d)

    method_label = method
    if unchecked:
        method_label = f"{method}(unchecked:{';'.join(unchecked)})"

    ec, pa, smooth = finite_key_terms(
        scenario.intensities.p_mu,
        scenario.p_t,
        scenario.n_pulses,
        phys.schmidt_d,
        scenario.budget,
    )
    if bounds.no_key:
        return ResultRow(
            length_km=length_km,
            n_pulses=scenario.n_pulses,
            method=method_label,
            delta_i=-math.inf,
            r_hd=-math.inf,
            kmu_lb=bounds.kmu_lb,
            zeta_t_ub=bounds.zeta_t_ub,
            zeta_w_ub=bounds.zeta_w_ub,
            ec_term=ec,
            pa_term=pa,
            smooth_term=smooth,
            positive=False,
        )
    sq = scenario.security_model.quantities(
        phys.schmidt_d,
        phys.delta_coh,
        frame.delta_cor,
        bounds.zeta_t_ub,
        bounds.zeta_w_ub,
    )
    result = secure_key_capacity(
        scenario.beta,
        sq,
        bounds.kmu_lb,
        scenario.intensities.p_mu,
        scenario.p_t,
        scenario.n_pulses,
        phys.schmidt_d,
        scenario.budget,
    )
    return ResultRow(
        length_km=length_km,
        n_pulses=scenario.n_pulses,
        method=method_label,
        delta_i=result.delta_i,
        r_hd=result.r_hd,
        kmu_lb=bounds.kmu_lb,
        zeta_t_ub=bounds.zeta_t_ub,
        zeta_w_ub=bounds.zeta_w_ub,
        ec_term=result.terms.ec_term,
        pa_term=result.terms.pa_term,
        smooth_term=result.terms.smooth_term,
        positive=result.positive,
    )


def _grid(l_min: float, l_max: float, step: float) -> list[float]:
    if step <= 0.0:
        raise DomainError(f"step must be > 0, got {step}")
    if l_min > l_max:
        raise DomainError(f"need l_min <= l_max, got {l_min} > {l_max}")
    count = int(math.floor((l_max - l_min) / step + 1e-9)) + 1
    return [l_min + i * step for i in range(count)]


def sweep_distance(
    scenario: Scenario,
    l_min: float,
    l_max: float,
    step: float,
    *,
    parallel: int = 1,
) -> list[ResultRow]:
    """Evaluate a distance grid, optionally across worker processes.

    Points are independent; results are returned in ascending length
    order regardless of worker scheduling, so output is deterministic.
    """
    lengths = _grid(l_min, l_max, step)
    if parallel <= 1 or len(lengths) <= 1:
        return [run_point(scenario, length) for length in lengths]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_point_task, ((scenario, length) for length in lengths)))


def _point_task(args: tuple[Scenario, float]) -> ResultRow:
    scenario, length = args
    return run_point(scenario, length)


def max_distance(scenario: Scenario, *, tol_km: float = 0.1) -> float:
    """Largest channel length with a positive secure-key capacity.

    Returns 0 when the capacity is non-positive already at zero length,
    and ``inf`` when it is still positive at the search ceiling (with
    expected-value statistics and a zero multiplier baseline, two-decoy
    estimation can stay informative down to the dark-count floor, so an
    infinite-pulse two-decoy scenario may have no cutoff).  Otherwise
    the capacity is assumed non-increasing in length and the zero
    crossing is bisected to ``tol_km``; if the coarse bracketing scan
    shows a non-monotone sign pattern, the search falls back to a fine
    grid and reports it through the logger.
    """
    if tol_km <= 0.0:
        raise DomainError(f"tol_km must be > 0, got {tol_km}")

    def capacity(length: float) -> float:
        return run_point(scenario, length).delta_i

    if capacity(0.0) <= 0.0:
        return 0.0
    hi = 25.0
    while capacity(hi) > 0.0:
        hi *= 2.0
        if hi > MAX_SEARCH_KM:
            logger.info(
                "capacity still positive at %.0f km; reporting an unbounded "
                "transmission distance",
                MAX_SEARCH_KM,
            )
            return math.inf
    # Coarse scan of the bracket to detect non-monotone behaviour.
    samples = [(length, capacity(length)) for length in _grid(0.0, hi, hi / 16.0)]
    signs = [value > 0.0 for _, value in samples]
    first_dead = signs.index(False)
    if any(signs[first_dead:]):
        logger.warning(
            "capacity is not monotone in length; falling back to a fine grid scan"
        )
        last_alive = 0.0
        for length in _grid(0.0, hi, tol_km):
            if capacity(length) > 0.0:
                last_alive = length
        return last_alive
    lo = samples[first_dead - 1][0]
    hi = samples[first_dead][0]
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if capacity(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".12e")


def _fmt_pulses(value: float) -> str:
    return "inf" if math.isinf(value) else format(value, ".12g")


def format_rows(rows: Iterable[ResultRow]) -> str:
    """Render rows as the canonical CSV document (deterministic bytes)."""
    rows = list(rows)
    if not rows:
        raise DomainError("no rows to emit")
    for earlier, later in zip(rows, rows[1:]):
        if later.length_km < earlier.length_km:
            raise DomainError(
                "rows must be in ascending length order "
                f"({later.length_km} after {earlier.length_km})"
            )
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    format(row.length_km, ".12g"),
                    _fmt_pulses(row.n_pulses),
                    row.method,
                    _fmt(row.delta_i),
                    _fmt(row.r_hd),
                    _fmt(row.kmu_lb),
                    _fmt(row.zeta_t_ub),
                    _fmt(row.zeta_w_ub),
                    _fmt(row.ec_term),
                    _fmt(row.pa_term),
                    _fmt(row.smooth_term),
                    "true" if row.positive else "false",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def emit_csv(rows: Iterable[ResultRow], destination: IO[str]) -> None:
    """Write the CSV document to an open text stream."""
    destination.write(format_rows(rows))


def emit_plotdata(rows: Iterable[ResultRow], destination: IO[str]) -> None:
    """Two-column (length, capacity) variant for plotting tools."""
    rows = list(rows)
    if not rows:
        raise DomainError("no rows to emit")
    lines = ["# length_km delta_i_bpc"]
    for row in rows:
        lines.append(f"{row.length_km:.12g} {_fmt(row.delta_i)}")
    destination.write("\n".join(lines) + "\n")
