"""Run parameters and shared exception types."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Case(Enum):
    """Which sideband structure is simulated.

    DEGENERATE: a single optical mode per guide takes part in the
    down-conversion (zero sideband detuning).
    GENERAL: two modes per guide (signal and idler sidebands) are coupled
    pairwise by the pump.
    """

    DEGENERATE = "degenerate"
    GENERAL = "general"


class NonFiniteError(RuntimeError):
    """Evolution produced non-finite values (step size too large)."""


class InvariantViolationError(RuntimeError):
    """A state or covariance matrix broke a structural invariant."""


# Hard accuracy/stability guard for the fixed-step integrator.
MAX_DZ_CS = 0.05


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical parameters of a lattice run.

    All lengths are measured in units of the inverse neighbor coupling
    ``1/c_s`` (the canonical choice is ``c_s = 1``), so ``g`` and ``gamma``
    are effectively the dimensionless ratios g/C_s and gamma/C_s.

    Attributes
    ----------
    n_sites : odd int >= 3
        Number of guides.  Site indices run -M..M with N = 2M + 1 and the
        pumped guide at index 0.  Boundaries are open: out-of-range
        neighbors contribute nothing.
    c_s : float >= 0
        Neighbor coupling.  Zero is allowed (isolated guides), which is
        the analytically solvable single-mode amplifier limit.
    g : float >= 0
        Parametric gain of the pumped guide (pump amplitude times the
        quadratic-nonlinearity coefficient).
    gamma : float >= 0
        Pump phase-diffusion rate per unit length.  Zero means a fully
        coherent pump.
    dz : float > 0
        Fixed RK4 step, guarded by ``dz * c_s <= 0.05``.
    case : Case
        Degenerate (one mode per guide) or general (signal/idler pair).
    """

    n_sites: int = 257
    c_s: float = 1.0
    g: float = 1.0
    gamma: float = 0.0
    dz: float = 1e-3
    case: Case = Case.DEGENERATE

    def __post_init__(self):
        if self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ValueError(f"n_sites must be odd and >= 3, got {self.n_sites}")
        if self.c_s < 0:
            raise ValueError(f"c_s must be >= 0, got {self.c_s}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.dz <= 0:
            raise ValueError(f"dz must be > 0, got {self.dz}")
        if self.dz * self.c_s > MAX_DZ_CS * (1 + 1e-12):
            raise ValueError(
                f"dz * c_s = {self.dz * self.c_s:g} exceeds the stability "
                f"guard {MAX_DZ_CS}"
            )

    @property
    def center(self) -> int:
        """Array index of the pumped guide."""
        return self.n_sites // 2

    def site_index(self, m: int) -> int:
        """Array index for the centered site label m in -M..M."""
        i = m + self.center
        if not 0 <= i < self.n_sites:
            raise IndexError(f"site {m} outside -{self.center}..{self.center}")
        return i
