"""Pluggable security models supplying I(A;B) and the Holevo bound.

Two implementations ship.  The table model interpolates a deterministic
grid loaded from a text file and is what reproducible sweeps and the
acceptance suite use.  The Gaussian model evaluates a collective-attack
Holevo bound on a two-mode Gaussian time-frequency state whose
entanglement is set by the Schmidt number and whose correlations are
degraded by the excess-noise factors; it is validated by contract
(ranges, monotonicity) and by an independently coded spectral oracle,
and exists so the toolkit is usable without a precomputed table.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Protocol

from .errors import DomainError, SecurityModelError

__all__ = [
    "SecurityQuantities",
    "SecurityModel",
    "TableSecurityModel",
    "GaussianSecurityModel",
    "gaussian_entropy",
    "load_pinned_table",
    "PINNED_TABLE_RESOURCE",
]

PINNED_TABLE_RESOURCE = "security_table.txt"


@dataclass(frozen=True)
class SecurityQuantities:
    """Information quantities entering the key-rate formula.

    ``i_ab`` is the mutual information per coincidence, ``phi_ub`` the
    upper bound on the eavesdropper's Holevo information and ``i_r`` the
    number of shared random bits per coincidence (log2 of the alphabet
    dimension).
    """

    i_ab: float
    phi_ub: float
    i_r: float

    def __post_init__(self) -> None:
        if self.i_ab < 0.0:
            raise DomainError(f"i_ab must be >= 0, got {self.i_ab}")
        if self.phi_ub < 0.0:
            raise DomainError(f"phi_ub must be >= 0, got {self.phi_ub}")
        if self.i_r < 0.0:
            raise DomainError(f"i_r must be >= 0, got {self.i_r}")


class SecurityModel(Protocol):
    """Anything that can evaluate the security quantities."""

    def quantities(
        self,
        d: int,
        delta_coh: float,
        delta_cor: float,
        zeta_t: float,
        zeta_w: float,
    ) -> SecurityQuantities: ...


def gaussian_entropy(nu: float) -> float:
    """Entropy (bits) of a thermal mode with symplectic eigenvalue ``nu``."""
    if nu <= 1.0:
        return 0.0
    a = (nu + 1.0) / 2.0
    b = (nu - 1.0) / 2.0
    return a * math.log2(a) - b * math.log2(b)


def _validate_query(
    d: int, delta_coh: float, delta_cor: float, zeta_t: float, zeta_w: float
) -> None:
    if d < 2 or int(d) != d:
        raise DomainError(f"dimension must be an integer >= 2, got {d}")
    if delta_coh <= 0.0 or delta_cor <= 0.0:
        raise DomainError("coherence and correlation times must be > 0")
    if zeta_t < 0.0 or zeta_w < 0.0:
        raise DomainError(
            f"excess-noise factors must be >= 0, got ({zeta_t}, {zeta_w})"
        )


class GaussianSecurityModel:
    """Collective-attack bound on a Gaussian time-frequency state.

    The biphoton is modelled as a two-mode squeezed Gaussian state whose
    symplectic eigenvalue equals the Schmidt number ``d`` (so the ideal
    timing measurement extracts exactly ``log2 d`` bits).  The channel
    injects independent Gaussian noise into the transmitted mode's
    timing and frequency quadratures, scaled so the variance of the
    correlated combination grows by ``1 + zeta``; Alice's marginal is
    untouched.  The Holevo bound is the entropy of the joint state minus
    the entropy conditioned on the timing measurement, each from
    symplectic eigenvalues.  The absolute time scales cancel in these
    dimensionless quantities, and the bound is nondecreasing in each
    noise factor.
    """

    def quantities(
        self,
        d: int,
        delta_coh: float,
        delta_cor: float,
        zeta_t: float,
        zeta_w: float,
    ) -> SecurityQuantities:
        _validate_query(d, delta_coh, delta_cor, zeta_t, zeta_w)
        nu = float(d)
        nu2 = nu * nu
        c0sq = nu2 - 1.0
        # Injected noise in units where u = nu * n_t; the correlated
        # combination's base variance is 2 (nu - sqrt(nu^2 - 1)).
        scale = 2.0 * nu * (nu - math.sqrt(c0sq))
        u = zeta_t * scale
        v = zeta_w * scale
        # Symplectic invariants of the noisy state; the discriminant is
        # regrouped into nonnegative terms so pure-state corners do not
        # suffer cancellation.
        delta = 2.0 + u + v + u * v / nu2
        det = (1.0 + u) * (1.0 + v)
        disc_sq = nu2 * nu2 * (u - v) ** 2 + u * v * (
            u * v + 4.0 * nu2 + 2.0 * nu2 * (u + v)
        )
        disc = math.sqrt(disc_sq) / nu2
        nu_plus = math.sqrt(max((delta + disc) / 2.0, 1.0))
        nu_minus = max(math.sqrt(det) / nu_plus, 1.0)
        # Conditional state of the transmitted mode after a timing
        # homodyne on Alice's side.
        nu_cond = math.sqrt(max((1.0 + u) * (nu2 + v), 1.0)) / nu
        phi_ub = max(
            gaussian_entropy(nu_plus)
            + gaussian_entropy(nu_minus)
            - gaussian_entropy(nu_cond),
            0.0,
        )
        i_ab = 0.5 * math.log2((nu2 + u) / (1.0 + u))
        return SecurityQuantities(i_ab=i_ab, phi_ub=phi_ub, i_r=math.log2(d))


@dataclass(frozen=True)
class _TableEntry:
    i_ab: float
    phi_ub: float


class TableSecurityModel:
    """Deterministic security quantities interpolated from a grid.

    The file format is one ``d zeta_t zeta_w i_ab phi_ub`` record per
    line, whitespace-separated, with ``#`` comments.  Each dimension must
    carry a complete rectangular (zeta_t, zeta_w) grid; duplicates are
    rejected.  Queries interpolate bilinearly in the noise factors,
    return grid values verbatim on the nodes, and refuse extrapolation.
    """

    def __init__(self, rows: Iterable[tuple[int, float, float, float, float]]):
        entries: dict[int, dict[tuple[float, float], _TableEntry]] = {}
        for d, zeta_t, zeta_w, i_ab, phi_ub in rows:
            per_d = entries.setdefault(int(d), {})
            key = (float(zeta_t), float(zeta_w))
            if key in per_d:
                raise SecurityModelError(
                    f"duplicate grid point d={d} zeta_t={zeta_t} zeta_w={zeta_w}"
                )
            per_d[key] = _TableEntry(i_ab=float(i_ab), phi_ub=float(phi_ub))
        if not entries:
            raise SecurityModelError("security table is empty")
        self._grids: dict[int, tuple[list[float], list[float], dict]] = {}
        for d, per_d in entries.items():
            ts = sorted({t for t, _ in per_d})
            ws = sorted({w for _, w in per_d})
            if len(per_d) != len(ts) * len(ws):
                raise SecurityModelError(
                    f"security table for d={d} is not a complete rectangular "
                    f"grid ({len(per_d)} entries for {len(ts)}x{len(ws)} nodes)"
                )
            self._grids[d] = (ts, ws, per_d)

    @classmethod
    def from_text(cls, text: str) -> "TableSecurityModel":
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 5:
                raise SecurityModelError(
                    f"line {lineno}: expected 'd zeta_t zeta_w i_ab phi_ub', "
                    f"got {len(fields)} fields"
                )
            try:
                d = int(fields[0])
                values = [float(f) for f in fields[1:]]
            except ValueError as exc:
                raise SecurityModelError(f"line {lineno}: {exc}") from exc
            rows.append((d, values[0], values[1], values[2], values[3]))
        return cls(rows)

    @classmethod
    def from_file(cls, path: str) -> "TableSecurityModel":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())

    def dimensions(self) -> list[int]:
        return sorted(self._grids)

    @staticmethod
    def _bracket(grid: list[float], value: float, name: str) -> tuple[int, int, float]:
        if value < grid[0] or value > grid[-1]:
            raise SecurityModelError(
                f"{name}={value:.6g} outside the table hull "
                f"[{grid[0]:.6g}, {grid[-1]:.6g}]"
            )
        hi = bisect.bisect_left(grid, value)
        if hi < len(grid) and grid[hi] == value:
            return hi, hi, 0.0
        lo = hi - 1
        frac = (value - grid[lo]) / (grid[hi] - grid[lo])
        return lo, hi, frac

    def quantities(
        self,
        d: int,
        delta_coh: float,
        delta_cor: float,
        zeta_t: float,
        zeta_w: float,
    ) -> SecurityQuantities:
        _validate_query(d, delta_coh, delta_cor, zeta_t, zeta_w)
        if d not in self._grids:
            raise SecurityModelError(
                f"dimension d={d} not tabulated (available: {self.dimensions()})"
            )
        ts, ws, per_d = self._grids[d]
        t_lo, t_hi, ft = self._bracket(ts, zeta_t, "zeta_t")
        w_lo, w_hi, fw = self._bracket(ws, zeta_w, "zeta_w")

        def value(attr: str) -> float:
            e00 = getattr(per_d[(ts[t_lo], ws[w_lo])], attr)
            e10 = getattr(per_d[(ts[t_hi], ws[w_lo])], attr)
            e01 = getattr(per_d[(ts[t_lo], ws[w_hi])], attr)
            e11 = getattr(per_d[(ts[t_hi], ws[w_hi])], attr)
            low = e00 + ft * (e10 - e00)
            high = e01 + ft * (e11 - e01)
            return low + fw * (high - low)

        return SecurityQuantities(
            i_ab=max(value("i_ab"), 0.0),
            phi_ub=max(value("phi_ub"), 0.0),
            i_r=math.log2(d),
        )


def load_pinned_table() -> TableSecurityModel:
    """Load the security table shipped with the package."""
    text = (
        resources.files("hdqkd")
        .joinpath("data", PINNED_TABLE_RESOURCE)
        .read_text(encoding="utf-8")
    )
    return TableSecurityModel.from_text(text)
