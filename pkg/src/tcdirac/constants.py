"""Physical constants in Gaussian units and the Hamiltonian selector."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .errors import ConfigurationError

MODES = ("relativistic_plus", "relativistic_minus", "nonrelativistic")


@dataclass(frozen=True)
class Constants:
    """Desk-scale Gaussian-unit constants.

    ``e`` is the signed particle charge (electron: negative), so the
    elementary charge is ``e0 = -e``.
    """

    c: float = 1.0
    hbar: float = 0.01
    m0: float = 1.0
    e: float = -1.0
    g: float = 2.0

    def __post_init__(self):
        for name in ("c", "hbar", "m0"):
            v = getattr(self, name)
            if not (v > 0):
                raise ConfigurationError(f"constant {name} must be positive, got {v}")

    @property
    def e0(self) -> float:
        return -self.e

    @property
    def mu0(self) -> float:
        """Bohr magneton hbar*e0/(2 m0 c)."""
        return self.hbar * self.e0 / (2.0 * self.m0 * self.c)

    @property
    def g_tilde(self) -> float:
        """Anomalous part (g-2)/2."""
        return 0.5 * (self.g - 2.0)

    def with_hbar(self, hbar: float) -> "Constants":
        return Constants(c=self.c, hbar=hbar, m0=self.m0, e=self.e, g=self.g)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which energy sheet (or the Schrodinger limit) drives the flow."""

    field: "object"
    constants: Constants = dc_field(default_factory=Constants)
    mode: str = "relativistic_plus"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}")

    @property
    def sign(self) -> float:
        return -1.0 if self.mode == "relativistic_minus" else 1.0

    @property
    def relativistic(self) -> bool:
        return self.mode != "nonrelativistic"

    def with_hbar(self, hbar: float) -> "HamiltonianSpec":
        return HamiltonianSpec(self.field, self.constants.with_hbar(hbar), self.mode)
