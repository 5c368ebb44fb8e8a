"""Physical parameters of the crane and the published default values."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import InvalidParameter

AXES = ("x", "y", "l")

# effective axis inertia [kg m], damping [N s], voltage gain, Coulomb
# constants [N m], gear ratio, pulley radius [m] of the desk-scale rig
TABLE_J = (75e-4, 40e-4, 65e-4)
TABLE_B = (96.3e-3, 97.5e-3, 24.55e-2)
TABLE_K = (14e-4, 14e-4, 14e-4)
TABLE_A1 = (23e-4, 14e-4, 13e-4)
TABLE_A2 = (21e-4, 11e-4, 14e-4)
TABLE_RG = (13e-3, 13e-3, 13e-3)
TABLE_RP = (37.5e-3, 37.5e-3, 13.5e-3)


@dataclass(frozen=True)
class AxisParameters:
    """Actuator and transmission parameters of one axis."""

    J_e: float
    B_e: float
    K_e: float
    a_1: float
    a_2: float
    r_g: float
    R_p: float

    def validate(self, name: str = "") -> None:
        tag = f"axis {name}: " if name else ""
        if not self.J_e > 0:
            raise InvalidParameter(f"{tag}J_e must be > 0, got {self.J_e}")
        if not self.B_e > 0:
            raise InvalidParameter(f"{tag}B_e must be > 0, got {self.B_e}")
        if not self.K_e > 0:
            raise InvalidParameter(f"{tag}K_e must be > 0, got {self.K_e}")
        if not (self.a_1 >= 0 and self.a_2 >= 0):
            raise InvalidParameter(f"{tag}Coulomb constants must be >= 0")
        if not 0 < self.r_g < 1:
            raise InvalidParameter(f"{tag}r_g must lie in (0, 1), got {self.r_g}")
        if not self.R_p > 0:
            raise InvalidParameter(f"{tag}R_p must be > 0, got {self.R_p}")

    @property
    def ratio(self) -> float:
        """Force-to-torque transmission factor r_g * R_p."""
        return self.r_g * self.R_p


def _table_axis(i: int) -> AxisParameters:
    return AxisParameters(TABLE_J[i], TABLE_B[i], TABLE_K[i], TABLE_A1[i],
                          TABLE_A2[i], TABLE_RG[i], TABLE_RP[i])


@dataclass(frozen=True)
class CraneParameters:
    """Parameters of the three actuated axes plus the suspended load.

    Attributes
    ----------
    x, y, l : AxisParameters
        Traveling, traversing and hoisting axis.
    m : float
        Load mass [kg].
    g : float
        Gravitational acceleration [m/s^2].
    deadband : float
        Velocity band [m/s] inside which Coulomb friction is zero.
    angle_margin : float
        The simulation aborts once a swing angle exceeds pi/2 - margin.
    l_min : float
        Minimum admissible rope length [m].
    """

    x: AxisParameters = field(default_factory=lambda: _table_axis(0))
    y: AxisParameters = field(default_factory=lambda: _table_axis(1))
    l: AxisParameters = field(default_factory=lambda: _table_axis(2))
    m: float = 0.8
    g: float = 9.81
    deadband: float = 1e-4
    angle_margin: float = 0.05
    l_min: float = 1e-3

    def __post_init__(self) -> None:
        for name in AXES:
            getattr(self, name).validate(name)
        if not self.m >= 0:
            raise InvalidParameter(f"load mass must be >= 0, got {self.m}")
        if not self.g > 0:
            raise InvalidParameter(f"g must be > 0, got {self.g}")
        if not self.deadband >= 0:
            raise InvalidParameter("deadband must be >= 0")
        if not 0 <= self.angle_margin < 1.5:
            raise InvalidParameter("angle_margin must lie in [0, 1.5)")
        if not self.l_min > 0:
            raise InvalidParameter("l_min must be > 0")

    @property
    def axes(self) -> tuple[AxisParameters, AxisParameters, AxisParameters]:
        return (self.x, self.y, self.l)

    def with_mass(self, m: float) -> "CraneParameters":
        return replace(self, m=m)

    def scaled(self, inertia: float = 1.0, damping: float = 1.0,
               friction: float = 1.0) -> "CraneParameters":
        """Copy with every axis' J_e, B_e and Coulomb constants multiplied."""
        def sc(a: AxisParameters) -> AxisParameters:
            return replace(a, J_e=a.J_e * inertia, B_e=a.B_e * damping,
                           a_1=a.a_1 * friction, a_2=a.a_2 * friction)
        return replace(self, x=sc(self.x), y=sc(self.y), l=sc(self.l))


def table_parameters(m: float = 0.8, g: float = 9.81) -> CraneParameters:
    """Identified parameters of the laboratory crane."""
    return CraneParameters(m=m, g=g)
