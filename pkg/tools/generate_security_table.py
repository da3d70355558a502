#!/usr/bin/env python3
"""Regenerate the pinned security-quantities table.

Evaluates the Gaussian security model on a fixed (dimension, zeta_t,
zeta_w) grid and writes the packaged data file.  The grid is dense where
sweeps actually land (noise factors below ~1) and coarse toward the
no-key cap at 1e3.
"""
from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from hdqkd.physics import PhysicalParams, FrameParams
from hdqkd.security import GaussianSecurityModel

DIMENSIONS = (8, 32)
ZETA_GRID = (
    0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.5,
    0.7, 1.0, 1.5, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 50.0,
    100.0, 200.0, 500.0, 1000.0,
)

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "hdqkd" / "data" / "security_table.txt"


def main() -> None:
    model = GaussianSecurityModel()
    lines = [
        "# Security quantities table: one record per line.",
        "# Columns: d zeta_t zeta_w i_ab phi_ub",
        "# Regenerate with tools/generate_security_table.py",
    ]
    for d in DIMENSIONS:
        phys = PhysicalParams(schmidt_d=d)
        frame = FrameParams.from_physical(phys)
        for zeta_t in ZETA_GRID:
            for zeta_w in ZETA_GRID:
                sq = model.quantities(
                    d, phys.delta_coh, frame.delta_cor, zeta_t, zeta_w
                )
                lines.append(
                    f"{d} {zeta_t:.12g} {zeta_w:.12g} "
                    f"{sq.i_ab:.12g} {sq.phi_ub:.12g}"
                )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({len(lines)} lines)")


if __name__ == "__main__":
    main()
