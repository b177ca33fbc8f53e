from typing import Any, Dict, Optional

from permdecoder.grid.models import VoxelGrid


class OracleSolution:
    """
    Steady single-phase flow through a permeability map, unit pressure drop
    between the z=0 and z=nz-1 faces.
    """
    def __init__(
        self,
        k_eff: float,
        iterations: int,
        residual: float,
        pressure: VoxelGrid,
        percolates: bool,
        n_unknowns: int,
    ):
        self.k_eff = float(k_eff)
        self.iterations = int(iterations)
        self.residual = float(residual)
        self.pressure = pressure
        self.percolates = bool(percolates)
        self.n_unknowns = int(n_unknowns)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_eff": self.k_eff,
            "iterations": self.iterations,
            "residual": self.residual,
            "percolates": self.percolates,
            "n_unknowns": self.n_unknowns,
        }


class ComparisonRecord:
    def __init__(
        self,
        sample: str,
        k_3dpim: float,
        k_oracle: float,
        relative_error: Optional[float],
        within_bounds: bool,
    ):
        self.sample = sample
        self.k_3dpim = float(k_3dpim)
        self.k_oracle = float(k_oracle)
        self.relative_error = relative_error
        self.within_bounds = bool(within_bounds)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample": self.sample,
            "k_3dpim": self.k_3dpim,
            "k_oracle": self.k_oracle,
            "relative_error": self.relative_error,
            "within_bounds": self.within_bounds,
        }
