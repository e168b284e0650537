"""Strict INI run configuration with unit-suffixed keys.

Every key is declared below with its type and default; unknown sections or
keys, missing required keys and malformed values raise :class:`ConfigError`.
The resolved configuration (including which values were defaulted) is
echoed into run manifests.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

from .mesh import Plane, SpecimenGeometry, dogbone_geometry, strip_geometry
from .pffatigue.material import (LoadSpec, MaterialParams, basquin_slope, exponent_n,
                                 irwin_length, length_scale)
from .roughsurf import DEFAULT_WINDOW_UM, RoughnessSpec, rq_from_ra

SCHEMA_VERSION = 1
REQUIRED = object()


class ConfigError(ValueError):
    pass


def _float_list(text: str) -> list:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("empty list")
    return [float(p) for p in parts]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text):
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return parse


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("must be a 64-bit unsigned integer")
    return v


# section -> key -> (parser, default); None means optional without default
SCHEMA = {
    "material": {
        "preset": (_choice("aisi4130", "custom"), "aisi4130"),
        "e_mpa": (float, None), "nu": (float, None),
        "gc_n_per_mm": (float, None), "k_ic_mpa_sqrt_m": (float, None),
        "sigma_c_mpa": (float, None), "ell_mm": (float, None),
        "ell_convention": (_choice("given", "at1", "irwin"), "given"),
        "sigma_e_mpa": (float, None), "alpha_t": (float, None),
        "basquin_a_mpa": (float, None), "basquin_b": (float, None),
        "plane": (_choice("plane_stress", "plane_strain"), "plane_stress"),
    },
    "geometry": {
        "kind": (_choice("strip", "dogbone"), "strip"),
        "length_mm": (float, 1.0), "width_mm": (float, 0.5),
        "rough_edges": (_choice("both", "bottom", "top", "none"), "both"),
        "gauge_length_mm": (float, 12.0), "gauge_width_mm": (float, 5.0),
        "grip_width_mm": (float, 10.0), "grip_length_mm": (float, 10.0),
        "fillet_radius_mm": (float, 8.0),
        "boundary_size_um": (float, None), "interior_size_mm": (float, None),
    },
    "roughness": {
        "ra_um": (float, None), "rq_um": (float, None),
        "corr_length_um": (float, REQUIRED),
        "window_um": (float, DEFAULT_WINDOW_UM), "n_points": (int, None),
        "count": (int, 1),
    },
    "load": {
        "sigma_a_mpa": (float, None), "r_ratio": (float, -1.0),
        "cycle_cap": (int, 1_000_000), "cycle_jump": (int, 1000),
        "jump_tol": (float, 2e-3),
    },
    "ensemble": {
        "min_samples": (int, 30), "me_limit_percent": (float, 5.0),
        "max_samples": (int, 200), "base_seed": (_seed, 0),
        "strict_me": (_bool, False),
    },
    "sweep": {
        "ra_um_list": (_float_list, REQUIRED), "lcor_um_list": (_float_list, REQUIRED),
        "sigma_c_mpa_list": (_float_list, None), "ref_nf": (float, 3000.0),
    },
    "output": {
        "dir": (str, "roughfat_out"),
        "plots": (_bool, True),
    },
}

OPTIONAL_SECTIONS = {"sweep"}


@dataclass
class RunConfig:
    values: dict
    defaulted: dict
    present_sections: set
    source_text: str = ""
    _explicit: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def has_section(self, section) -> bool:
        return section in self.present_sections

    # builders ---------------------------------------------------------------
    def material(self) -> MaterialParams:
        m = self.values["material"]
        plane = Plane(m["plane"])
        base = MaterialParams.aisi4130(plane)
        if m["preset"] == "custom":
            for k in ("e_mpa", "nu", "sigma_c_mpa", "sigma_e_mpa", "basquin_a_mpa"):
                if m[k] is None:
                    raise ConfigError(f"[material] {k} is required with preset = custom")
        E = m["e_mpa"] if m["e_mpa"] is not None else base.E
        nu = m["nu"] if m["nu"] is not None else base.nu
        if m["gc_n_per_mm"] is not None:
            Gc = m["gc_n_per_mm"]
        elif m["k_ic_mpa_sqrt_m"] is not None:
            Gc = m["k_ic_mpa_sqrt_m"] ** 2 / E * 1000.0
        else:
            Gc = base.Gc
        sc = m["sigma_c_mpa"] if m["sigma_c_mpa"] is not None else base.sigma_c
        conv = m["ell_convention"]
        if m["ell_mm"] is not None:
            if conv != "given":
                raise ConfigError("[material] give either ell_mm or ell_convention, not both")
            ell = m["ell_mm"]
        elif conv == "at1":
            ell = length_scale(E, Gc, sc)
        elif conv == "irwin":
            ell = irwin_length(E, Gc, sc)
        else:
            ell = base.ell
        a = m["basquin_a_mpa"] if m["basquin_a_mpa"] is not None else base.basquin_a
        se = m["sigma_e_mpa"] if m["sigma_e_mpa"] is not None else base.sigma_e
        b = m["basquin_b"] if m["basquin_b"] is not None else basquin_slope(a, se)
        at = m["alpha_t"] if m["alpha_t"] is not None else base.alpha_T
        try:
            return MaterialParams(E=E, nu=nu, Gc=Gc, sigma_c=sc, ell=ell, sigma_e=se,
                                  alpha_T=at, basquin_a=a, basquin_b=b, n_exp=exponent_n(b),
                                  plane=plane, ell_source=conv)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def geometry(self) -> SpecimenGeometry:
        g = self.values["geometry"]
        plane = Plane(self.values["material"]["plane"])
        try:
            if g["kind"] == "strip":
                return strip_geometry(g["length_mm"], g["width_mm"], g["rough_edges"], plane)
            return dogbone_geometry(g["gauge_length_mm"], g["gauge_width_mm"], g["grip_width_mm"],
                                    g["grip_length_mm"], g["fillet_radius_mm"], plane=plane)
        except ValueError as exc:
            raise ConfigError(f"[geometry] {exc}") from exc

    def mesh_sizes_mm(self) -> tuple:
        g = self.values["geometry"]
        h = g["boundary_size_um"] / 1000.0 if g["boundary_size_um"] is not None else None
        return h, g["interior_size_mm"]

    def target_rq(self) -> float:
        r = self.values["roughness"]
        if r["ra_um"] is not None and r["rq_um"] is not None:
            raise ConfigError("[roughness] give ra_um or rq_um, not both")
        if r["rq_um"] is not None:
            return r["rq_um"]
        if r["ra_um"] is not None:
            return rq_from_ra(r["ra_um"])
        raise ConfigError("[roughness] ra_um or rq_um is required")

    def roughness_spec(self, seed: int = 0) -> RoughnessSpec:
        r = self.values["roughness"]
        n = r["n_points"]
        if n is None:
            n = int(math.ceil(r["window_um"] / (r["corr_length_um"] / 10.0))) + 1
        try:
            return RoughnessSpec(self.target_rq(), r["corr_length_um"], n, r["window_um"], seed)
        except ValueError as exc:
            raise ConfigError(f"[roughness] {exc}") from exc

    def load(self) -> LoadSpec:
        ld = self.values["load"]
        if ld["sigma_a_mpa"] is None:
            raise ConfigError("[load] sigma_a_mpa is required")
        try:
            return LoadSpec(ld["sigma_a_mpa"], ld["r_ratio"], ld["cycle_cap"], ld["cycle_jump"])
        except ValueError as exc:
            raise ConfigError(f"[load] {exc}") from exc

    # manifest ---------------------------------------------------------------
    def echo(self) -> dict:
        out = {}
        for sec, keys in self.values.items():
            if sec in OPTIONAL_SECTIONS and sec not in self.present_sections:
                continue
            out[sec] = {k: {"value": v, "defaulted": self.defaulted[sec][k]}
                        for k, v in keys.items() if v is not None or not self.defaulted[sec][k]}
        return out

    def resolved_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec, keys in self.echo().items():
            cp[sec] = {}
            for k, v in keys.items():
                val = v["value"]
                if isinstance(val, list):
                    val = ", ".join(repr(x) for x in val)
                elif isinstance(val, float):
                    val = repr(val)
                cp[sec][k] = str(val)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def parse_config(text: str, require=("roughness",)) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep case so that mis-cased keys are rejected
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    unknown = [s for s in cp.sections() if s not in SCHEMA]
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    missing = [s for s in require if s not in cp.sections()]
    if missing:
        raise ConfigError(f"missing section(s): {', '.join(missing)}")
    values, defaulted = {}, {}
    for sec, keys in SCHEMA.items():
        values[sec], defaulted[sec] = {}, {}
        given = dict(cp[sec]) if sec in cp else {}
        bad = [k for k in given if k not in keys]
        if bad:
            raise ConfigError(f"[{sec}] unknown key(s): {', '.join(bad)}")
        for key, (parse, default) in keys.items():
            if key in given:
                try:
                    values[sec][key] = parse(given[key])
                except ValueError as exc:
                    raise ConfigError(f"[{sec}] {key}: {exc}") from exc
                defaulted[sec][key] = False
            else:
                if default is REQUIRED and (sec in cp or sec not in OPTIONAL_SECTIONS):
                    raise ConfigError(f"[{sec}] missing required key {key}")
                values[sec][key] = None if default is REQUIRED else default
                defaulted[sec][key] = True
    return RunConfig(values, defaulted, set(cp.sections()), text)


def load_config(path, require=("roughness",)) -> RunConfig:
    """Read and validate a configuration file (OSError propagates)."""
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, require)
