"""Material and loading parameters of the phase-field fatigue model.

Units: stress MPa, length mm, energy release rate N/mm, energy density
mJ/mm^3 (= MPa).  The cumulated fatigue history and its threshold are
dimensionless (multiples of the normalizing energy ``alpha_n``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from ..mesh import Plane

#: Slope coefficients of the fatigue exponent n = C1 / b + C2 (f2 / AT1 variant).
C1_EXPONENT = 0.5
C2_EXPONENT = -0.13

#: Cycle count at which the endurance limit is defined.
ENDURANCE_CYCLES = 1.0e6

C_W_AT1 = 2.0 / 3.0


class MaterialError(ValueError):
    pass


def length_scale(E: float, Gc: float, sigma_c: float) -> float:
    """AT1 length scale, 3/8 of Irwin's length E*Gc/sigma_c^2."""
    return 3.0 * E * Gc / (8.0 * sigma_c**2)


def irwin_length(E: float, Gc: float, sigma_c: float) -> float:
    return E * Gc / sigma_c**2


def exponent_n(b: float) -> float:
    if not b > 0:
        raise MaterialError(f"Basquin slope b must be > 0, got {b}")
    return C1_EXPONENT / b + C2_EXPONENT


def basquin_slope(a: float, sigma_e: float, n_ref: float = ENDURANCE_CYCLES) -> float:
    """Slope b of sigma = a N^-b through (1, a) and (n_ref, sigma_e)."""
    return math.log(a / sigma_e) / math.log(n_ref)


def alpha_T_estimate(N_ref: float, sigma_ref: float, sigma_c: float, n: float) -> float:
    """Fatigue threshold from one S-N point ``(N_ref, sigma_ref)``."""
    if N_ref < 1:
        raise MaterialError("N_ref must be >= 1")
    if not 0 <= sigma_ref < sigma_c:
        raise MaterialError(f"need 0 <= sigma_ref < sigma_c, got {sigma_ref} vs {sigma_c}")
    s = sigma_ref / sigma_c
    return N_ref * s ** (2.0 * n) / (1.0 - s)


@dataclass(frozen=True)
class MaterialParams:
    """Elastic, fracture and fatigue constants.

    ``ell_source`` records how ``ell`` was obtained: ``"at1"`` (3/8 Irwin),
    ``"irwin"`` (full Irwin length, the convention of the tabulated AISI 4130
    data) or ``"given"``.

    The fatigue normalization ``alpha_n`` and the history floor ``H_min``
    are both ``3 Gc / (16 ell)``.  With the AT1 length scale this equals
    ``sigma_c^2 / (2E)``; for tabulated ``ell`` it is the value that keeps
    the tabulated ``alpha_T`` consistent with its S-N calibration point.
    ``model_strength`` is the corresponding strength ``sqrt(2 E alpha_n)``.
    """

    E: float
    nu: float
    Gc: float
    sigma_c: float
    ell: float
    sigma_e: float
    alpha_T: float
    basquin_a: float
    basquin_b: float
    n_exp: float
    plane: Plane = Plane.PLANE_STRESS
    ell_source: str = "given"
    alpha_e_override: float | None = None

    def __post_init__(self):
        checks = {
            "E": self.E > 0, "nu": 0 < self.nu < 0.5 or self.nu == 0.0, "Gc": self.Gc > 0,
            "sigma_c": self.sigma_c > 0, "ell": self.ell > 0, "alpha_T": self.alpha_T > 0,
            "n_exp": self.n_exp > 0, "sigma_e": self.sigma_e >= 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise MaterialError(f"invalid material parameters: {', '.join(bad)}")
        if isinstance(self.plane, str):
            object.__setattr__(self, "plane", Plane(self.plane))

    # derived elastic constants -------------------------------------------
    @property
    def lame_mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lame_lambda(self) -> float:
        """3-D Lame lambda (used with the full set of principal strains)."""
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def H_min(self) -> float:
        return 3.0 * self.Gc / (16.0 * self.ell)

    @property
    def alpha_n(self) -> float:
        return self.H_min

    @property
    def model_strength(self) -> float:
        return math.sqrt(2.0 * self.E * self.alpha_n)

    @property
    def alpha_e(self) -> float:
        if self.alpha_e_override is not None:
            return self.alpha_e_override
        return self.sigma_e**2 / (2.0 * self.E)

    @property
    def irwin_length(self) -> float:
        return irwin_length(self.E, self.Gc, self.sigma_c)

    def replace(self, **changes) -> "MaterialParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["plane"] = self.plane.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialParams":
        return cls(**d)

    @classmethod
    def aisi4130(cls, plane: Plane = Plane.PLANE_STRESS) -> "MaterialParams":
        """AISI 4130 constants as tabulated (ell = 2.9 mm, alpha_T = 8.2e-4)."""
        E = 200_000.0
        K_ic = 60.5  # MPa sqrt(m)
        Gc = K_ic**2 / E * 1000.0  # MPa m -> N/mm
        a, sigma_e = 485.9, 263.0
        b = basquin_slope(a, sigma_e)
        return cls(E=E, nu=0.3, Gc=Gc, sigma_c=1121.0, ell=2.9, sigma_e=sigma_e,
                   alpha_T=8.2e-4, basquin_a=a, basquin_b=b, n_exp=exponent_n(b),
                   plane=plane, ell_source="given")

    @classmethod
    def from_strength(cls, sigma_c: float, basquin_a: float, basquin_b: float,
                      E: float = 200_000.0, nu: float = 0.3, Gc: float = 18.30125,
                      ell_convention: str = "irwin", plane: Plane = Plane.PLANE_STRESS,
                      n_ref: float = ENDURANCE_CYCLES) -> "MaterialParams":
        """Derive ell, sigma_e and alpha_T for a strength variant.

        ``sigma_e`` is the Basquin stress at ``n_ref`` cycles and ``alpha_T``
        comes from the S-N point ``(n_ref, sigma_e)`` evaluated against the
        model strength.
        """
        if ell_convention == "irwin":
            ell = irwin_length(E, Gc, sigma_c)
        elif ell_convention == "at1":
            ell = length_scale(E, Gc, sigma_c)
        else:
            raise MaterialError(f"unknown ell convention {ell_convention!r}")
        n = exponent_n(basquin_b)
        sigma_e = basquin_a * n_ref ** (-basquin_b)
        strength = math.sqrt(2.0 * E * 3.0 * Gc / (16.0 * ell))
        alpha_T = alpha_T_estimate(n_ref, sigma_e, strength, n)
        return cls(E=E, nu=nu, Gc=Gc, sigma_c=sigma_c, ell=ell, sigma_e=sigma_e,
                   alpha_T=alpha_T, basquin_a=basquin_a, basquin_b=basquin_b, n_exp=n,
                   plane=plane, ell_source=ell_convention)


@dataclass(frozen=True)
class LoadSpec:
    """Constant-amplitude force-controlled loading."""

    sigma_a: float
    R: float = -1.0
    cycle_cap: int = 1_000_000
    cycle_jump: int = 1000

    def __post_init__(self):
        if not self.sigma_a > 0:
            raise MaterialError("sigma_a must be > 0")
        if not self.R < 1:
            raise MaterialError("stress ratio R must be < 1")
        if self.cycle_cap < 1 or self.cycle_jump < 1:
            raise MaterialError("cycle_cap and cycle_jump must be >= 1")

    @property
    def peak_stress(self) -> float:
        """Maximum applied stress of the cycle, where equilibrium is solved."""
        return self.sigma_a

    def with_amplitude(self, sigma_a: float) -> "LoadSpec":
        return replace(self, sigma_a=sigma_a)
