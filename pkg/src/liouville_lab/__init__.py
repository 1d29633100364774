"""Liouville lab: grids, Liouville forms with prescribed skeleta, product
polarizations of bidiscs, embedding-feasibility arithmetic, and Reeb-chord
search on starshaped hypersurfaces."""

__version__ = "0.1.0"
