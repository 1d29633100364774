#!/usr/bin/env python3
"""Render the standard gallery of SVG scenes into figures/.

Grids with shaded faces, a foliation with separatrices, forward trajectories,
the K-cell band allocation, and the Hopf shadows of the barrier complement.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from liouville_lab import checks, divisor_arith, liouville2d, reeb3, svgplot
from liouville_lab.grid2d import (make_periodic_grid, make_pinwheel_grid,
                                  make_radial_grid)

OUT = pathlib.Path(__file__).resolve().parents[1] / "figures"


def main():
    OUT.mkdir(exist_ok=True)

    for name, grid in [
        ("grid_radial4", make_radial_grid(4, 1.0)),
        ("grid_pinwheel3", make_pinwheel_grid(3, 1.0, [0.35, -0.25, 0.1])),
        ("grid_periodic2", make_periodic_grid(2)),
    ]:
        (OUT / f"{name}.svg").write_text(svgplot.draw_grid(grid).render())
        print("wrote", name)

    form = liouville2d.build_form(make_radial_grid(3, 1.0))
    (OUT / "foliation_radial3.svg").write_text(
        svgplot.draw_foliation(form).render())
    print("wrote foliation_radial3")

    rng = np.random.default_rng(7)
    pts = checks.sample_off_singular(form, 24, rng, chart_margin=0.0,
                                    gamma_margin=0.0)
    trs = [form.flow(x, 20.0) for x in pts]
    (OUT / "trajectories_radial3.svg").write_text(
        svgplot.draw_trajectories(form, trs).render())
    print("wrote trajectories_radial3")

    K, cert = divisor_arith.monotone_K(2, 1, 1.0, 1.0)
    (OUT / "bands_K4.svg").write_text(
        svgplot.draw_band_diagram(2, 1, K, cert.assignment, 1.0, 1.0).render())
    print("wrote bands_K4 (K =", K, ")")

    S = reeb3.StarshapedHypersurface("sphere")
    k = 3
    paths = [reeb3._lune_boundary(S, k, j) for j in range(k)]
    areas = [abs(reeb3.spherical_polygon_area(p)) for p in paths]
    (OUT / "hopf_k3.svg").write_text(svgplot.draw_hopf(k, paths, areas).render())
    print("wrote hopf_k3")


if __name__ == "__main__":
    main()
