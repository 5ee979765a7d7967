"""Discretized probability densities over nonnegative time values.

A HistogramDensity holds probability mass per fixed-width bin plus an
optional tail mass for values beyond the last bin edge. Quadrature
throughout the package treats each bin as a point mass at the bin midpoint,
so a density is equivalent to a finite atom mixture; the tail is an atom at
an unknown value past the last edge.
"""

from dataclasses import dataclass

import numpy as np

MASS_TOL = 1e-9


class InvalidDensityError(ValueError):
    """Raised when a histogram violates its mass invariant."""

    code = "INVALID_DENSITY"


@dataclass(frozen=True)
class HistogramDensity:
    bin_width: float
    masses: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))

    @property
    def bin_count(self) -> int:
        return int(self.masses.shape[0])

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.bin_count) + 0.5) * self.bin_width

    @property
    def last_edge(self) -> float:
        return self.bin_count * self.bin_width

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum()) + self.tail_mass

    def is_valid(self) -> bool:
        if self.bin_width <= 0 or self.masses.ndim != 1:
            return False
        if self.tail_mass < -MASS_TOL or np.any(self.masses < -MASS_TOL):
            return False
        return self.total_mass <= 1.0 + MASS_TOL

    def is_complete(self) -> bool:
        return self.is_valid() and abs(self.total_mass - 1.0) <= MASS_TOL

    def check_valid(self) -> "HistogramDensity":
        if not self.is_valid():
            raise InvalidDensityError(
                f"histogram invariant violated: bin_width={self.bin_width}, "
                f"total_mass={self.total_mass}"
            )
        return self

    def mean(self, truncate_at: float | None = None) -> float:
        """Mean of the midpoint atoms; with truncate_at, E[min(value, bound)]
        where the tail atom counts as the bound."""
        mid = self.midpoints
        if truncate_at is None:
            if self.tail_mass > MASS_TOL:
                raise InvalidDensityError("untruncated mean undefined with tail mass")
            return float(np.dot(self.masses, mid))
        m = float(np.dot(self.masses, np.minimum(mid, truncate_at)))
        return m + self.tail_mass * truncate_at

    @classmethod
    def point_mass(cls, value: float) -> "HistogramDensity":
        """Single-atom density whose one bin midpoint equals value exactly."""
        if value < 0:
            raise ValueError("point mass value must be nonnegative")
        width = 2.0 * value if value > 0 else 1.0
        return cls(bin_width=width, masses=np.array([1.0]), tail_mass=0.0)

    @classmethod
    def from_samples(cls, values, bin_width: float, bin_count: int) -> "HistogramDensity":
        """Normalized histogram of nonnegative samples; values at or past the
        last edge go to the tail. Empty input yields the zero density."""
        values = np.asarray(values, dtype=float)
        if bin_width <= 0 or bin_count < 1:
            raise ValueError("bin_width must be > 0 and bin_count >= 1")
        n = values.size
        if n == 0:
            return cls(bin_width=bin_width, masses=np.zeros(bin_count), tail_mass=0.0)
        edge = bin_count * bin_width
        inside = values[values < edge]
        counts, _ = np.histogram(inside, bins=bin_count, range=(0.0, edge))
        tail = (n - inside.size) / n
        return cls(bin_width=bin_width, masses=counts / n, tail_mass=tail)

    def as_single_atom(self) -> tuple[float, float]:
        """(value, probability) if all bin mass sits in one bin, else raises."""
        nz = np.flatnonzero(self.masses > 0)
        if nz.size > 1:
            raise ValueError("density has mass in more than one bin")
        if nz.size == 0:
            return 0.0, 0.0
        j = int(nz[0])
        return float((j + 0.5) * self.bin_width), float(self.masses[j])
