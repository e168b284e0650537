"""Reduction of fatigue ensembles to S-N fits, endurance limits and surface factors."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .mesh import SpecimenGeometry, structured_strip_mesh
from .montecarlo import EnsembleConfig, EnsembleResult, run_ensemble
from .pffatigue.material import ENDURANCE_CYCLES, LoadSpec, MaterialError, MaterialParams
from .pffatigue.solver import DEFAULT_JUMP_TOL, Status, simulate
from .roughsurf import RoughnessSpec, rq_from_ra

logger = logging.getLogger(__name__)

REFERENCE_LIFE = 3000
LIFE_RTOL = 0.05
STRESS_ATOL = 1.0  # MPa
KS_OVERSHOOT = 0.02
MAP_HEADER = ["ra_um", "lcor_um", "sigma_c_mpa", "ks", "me_percent", "samples"]


class FitError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class SNPoint:
    stress_amplitude: float
    mean_nf: float
    me_percent: float | None = None
    censored: bool = False

    def __post_init__(self):
        if not self.stress_amplitude > 0:
            raise ValueError("stress amplitude must be > 0")
        if not self.mean_nf >= 1:
            raise ValueError("mean_nf must be >= 1")


@dataclass(frozen=True)
class BasquinFit:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise FitError(f"Basquin parameters must be positive (a={self.a}, b={self.b})")

    def stress(self, n):
        return self.a * np.asarray(n, dtype=float) ** (-self.b)

    def life(self, sigma):
        return (self.a / np.asarray(sigma, dtype=float)) ** (1.0 / self.b)


def basquin_fit(points) -> BasquinFit:
    """Least-squares line ``ln sigma = ln a - b ln N`` over uncensored points."""
    pts = [p for p in points if not p.censored]
    if len(pts) < 2:
        raise FitError("need at least two uncensored S-N points")
    n = np.log([p.mean_nf for p in pts])
    s = np.log([p.stress_amplitude for p in pts])
    if np.ptp(n) == 0:
        raise FitError("all S-N points share the same life")
    if np.ptp(s) == 0:
        raise FitError("all S-N points share the same stress: zero slope")
    A = np.column_stack([np.ones_like(n), -n])
    (ln_a, b), *_ = np.linalg.lstsq(A, s, rcond=None)
    return BasquinFit(float(np.exp(ln_a)), float(b))


def extrapolate_endurance(sigma_at_ref: float, ref_nf: float, b: float,
                          n_endurance: float = ENDURANCE_CYCLES) -> float:
    """Translate a stress along a Basquin line of slope ``b`` to ``n_endurance``."""
    if sigma_at_ref <= 0 or ref_nf <= 0 or b < 0:
        raise ValueError("need sigma_at_ref > 0, ref_nf > 0 and b >= 0")
    return sigma_at_ref * (ref_nf / n_endurance) ** b


def surface_factor(sigma_e_rough: float, sigma_e_polished: float) -> float:
    if sigma_e_rough <= 0 or sigma_e_polished <= 0:
        raise ValueError("endurance limits must be positive")
    return sigma_e_rough / sigma_e_polished


# root finding ----------------------------------------------------------------
@dataclass
class StressSearch:
    sigma: float
    mean_nf: float
    me_percent: float | None
    evaluations: list
    result: object = None


def find_stress_for_life(target_nf: float, evaluate, sigma0: float, b_guess: float,
                         life_rtol: float = LIFE_RTOL, stress_atol: float = STRESS_ATOL,
                         max_evals: int = 12) -> StressSearch:
    """Stress amplitude whose mean life equals ``target_nf``.

    ``evaluate(sigma) -> (mean_nf, me_percent, payload)``; ``mean_nf`` may
    be ``inf`` when every sample survives.  Steps are secants in
    (ln sigma, ln N), seeded with the Basquin slope ``b_guess``, and fall
    back to bisection of the bracket whenever the secant leaves it.
    """
    if not target_nf >= 1:
        raise ValueError("target life must be >= 1 cycle")
    ln_t = math.log(target_nf)
    evals = []

    def run(s):
        nf, me, payload = evaluate(s)
        evals.append((s, nf, me))
        logger.info("stress %.3f MPa -> mean life %s", s, nf)
        return nf, me, payload

    def done(s, nf):
        return math.isfinite(nf) and abs(nf - target_nf) <= life_rtol * target_nf

    lo = hi = None  # lo: life above target (stress too low); hi: life below target
    s = float(sigma0)
    widened = False
    best = None
    for _ in range(max_evals):
        nf, me, payload = run(s)
        if best is None or (math.isfinite(nf) and
                            abs(math.log(nf) - ln_t) < abs(math.log(best[1]) - ln_t)):
            best = (s, nf, me, payload)
        if done(s, nf):
            return StressSearch(s, nf, me, evals, payload)
        if nf > target_nf:
            if hi is not None and s >= hi[0]:
                if widened:
                    raise BracketError(f"non-monotone life: N({s:.2f}) > target but "
                                       f"N({hi[0]:.2f}) < target")
                widened = True
                hi = None
            lo = (s, nf)
        else:
            if lo is not None and s <= lo[0]:
                if widened:
                    raise BracketError(f"non-monotone life: N({s:.2f}) < target but "
                                       f"N({lo[0]:.2f}) > target")
                widened = True
                lo = None
            hi = (s, nf)
        if lo is not None and hi is not None:
            if hi[0] - lo[0] <= stress_atol:
                break
            if math.isfinite(lo[1]):
                slope = (math.log(hi[1]) - math.log(lo[1])) / (math.log(hi[0]) - math.log(lo[0]))
                s_new = math.exp(math.log(lo[0]) + (ln_t - math.log(lo[1])) / slope)
            else:
                s_new = 0.5 * (lo[0] + hi[0])
            margin = 0.05 * (hi[0] - lo[0])
            if not lo[0] + margin < s_new < hi[0] - margin:
                s_new = 0.5 * (lo[0] + hi[0])
            s = s_new
        else:
            # one-sided: a corrective step must bring the life closer to target
            if len(evals) >= 2 and math.isfinite(nf) and math.isfinite(evals[-2][1]):
                prev_gap = abs(math.log(evals[-2][1]) - ln_t)
                if abs(math.log(nf) - ln_t) > prev_gap * (1 + 1e-9) + math.log1p(life_rtol):
                    if widened:
                        raise BracketError(f"non-monotone life near sigma = {s:.2f}: "
                                           "stepping toward the target moved away from it")
                    widened = True
            # Basquin step; a surviving ensemble gives no life, step up by 5 %
            if math.isfinite(nf):
                s = s * (nf / target_nf) ** b_guess
                step = s / evals[-1][0]
                if abs(step - 1) * s < 0.5 * stress_atol:
                    s = evals[-1][0] + math.copysign(0.5 * stress_atol, step - 1)
            else:
                s = s * 1.05
    s, nf, me, payload = best
    return StressSearch(s, nf, me, evals, payload)


# calibration -----------------------------------------------------------------
def polished_life(sigma: float, mat: MaterialParams, cycle_cap: int = 10**6,
                  jump_tol: float = DEFAULT_JUMP_TOL, mesh=None) -> float:
    """Deterministic life of the homogeneous polished strip (inf if it survives)."""
    mesh = structured_strip_mesh(1.0, 1.0, 1, 1, plane=mat.plane) if mesh is None else mesh
    out = simulate(mesh, mat, LoadSpec(sigma, cycle_cap=cycle_cap), jump_tol=jump_tol)
    return float(out.n_cycles) if out.status is Status.FAILED else math.inf


def calibrate_basquin_a(sigma_c: float, b: float, a0: float, life_fn=None,
                        probe_nf: float = REFERENCE_LIFE, rtol: float = 0.02,
                        max_iter: int = 40, **material_kw) -> tuple[float, MaterialParams, int]:
    """Adjust the Basquin coefficient so the polished solver reproduces the
    probe life at the stress ``a N_probe^-b`` that the curve itself assigns.

    ``life_fn(sigma, mat) -> cycles`` defaults to :func:`polished_life`.
    Returns ``(a, material, solver_calls)``.
    """
    life_fn = polished_life if life_fn is None else life_fn
    calls = 0

    def resid(a):
        nonlocal calls
        try:
            mat = MaterialParams.from_strength(sigma_c, a, b, **material_kw)
        except MaterialError as exc:
            raise CalibrationError(f"Basquin coefficient {a:.4g} is inadmissible: {exc}") from exc
        calls += 1
        nf = life_fn(a * probe_nf ** (-b), mat)
        r = math.log(nf / probe_nf) if math.isfinite(nf) else math.inf
        return r, mat

    r0, m0 = resid(a0)
    if abs(r0) <= math.log1p(rtol):
        return a0, m0, calls
    lo, hi = 0.5 * a0, 2.0 * a0
    r_lo, m_lo = resid(lo)
    r_hi, m_hi = resid(hi)
    if r_lo * r_hi > 0:
        raise CalibrationError(f"no sign change of the life mismatch for a in [{lo:.4g}, {hi:.4g}]")
    if r_lo * r0 < 0:
        hi, r_hi = a0, r0
    else:
        lo, r_lo = a0, r0
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        r, m = resid(mid)
        if abs(r) <= math.log1p(rtol):
            return mid, m, calls
        if r * r_lo < 0:
            hi, r_hi = mid, r
        else:
            lo, r_lo = mid, r
    raise CalibrationError("bisection on the Basquin coefficient did not converge")


# surface-factor sweep --------------------------------------------------------
@dataclass
class SurfaceFactorRecord:
    ra: float
    corr_length: float
    sigma_c: float
    ks: float
    me_percent: float | None
    sample_count: int
    sigma_rough: float | None = None
    sigma_polished: float | None = None
    flagged: bool = False
    status: str = "OK"
    error: str | None = None
    me_converged: bool = True

    def key(self) -> tuple:
        return _case_key(self.ra, self.corr_length, self.sigma_c)

    def csv_row(self) -> list:
        me = "" if self.me_percent is None else f"{self.me_percent:.6g}"
        return [f"{self.ra:g}", f"{self.corr_length:g}", f"{self.sigma_c:g}",
                f"{self.ks:.6f}", me, str(self.sample_count)]


def _case_key(ra, lcor, sc) -> tuple:
    return (round(float(ra), 6), round(float(lcor), 6), round(float(sc), 6))


def case_seed(base_seed: int, ra: float, lcor: float, sigma_c: float) -> int:
    """Seed of one sweep case, a function of its coordinates only."""
    key = [int(round(v * 1000)) for v in (ra, lcor, sigma_c)]
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepSettings:
    geometry: SpecimenGeometry
    base_material: MaterialParams
    min_samples: int = 30
    max_samples: int = 200
    me_limit: float = 5.0
    base_seed: int = 0
    ref_nf: float = REFERENCE_LIFE
    cycle_cap: int = 10**6
    jump_tol: float = DEFAULT_JUMP_TOL
    boundary_size: float | None = None
    interior_size: float | None = None
    ell_convention: str = "irwin"
    workers: int = 1


def material_for_strength(sigma_c: float, s: SweepSettings, life_fn=None) -> MaterialParams:
    """Base material for its own strength, otherwise the recalibrated variant."""
    base = s.base_material
    if math.isclose(sigma_c, base.sigma_c):
        return base
    scale = sigma_c / base.sigma_c  # initial guess scales with strength
    if life_fn is None:
        def life_fn(sig, mat):
            return polished_life(sig, mat, s.cycle_cap, s.jump_tol)
    _, mat, _ = calibrate_basquin_a(sigma_c, base.basquin_b, base.basquin_a * scale, life_fn,
                                    probe_nf=s.ref_nf, E=base.E, nu=base.nu, Gc=base.Gc,
                                    ell_convention=s.ell_convention, plane=base.plane)
    return mat


def ensemble_config(s: SweepSettings, mat: MaterialParams, ra: float, lcor: float,
                    sigma: float, seed: int) -> EnsembleConfig:
    rough = RoughnessSpec(rq_from_ra(ra), lcor, 2, lcor / 5.0)
    return EnsembleConfig(rough, mat, LoadSpec(sigma, cycle_cap=s.cycle_cap), s.geometry,
                          s.min_samples, s.me_limit, s.max_samples, seed,
                          s.boundary_size, s.interior_size, s.jump_tol)


def ensemble_evaluator(cfg: EnsembleConfig, runner_factory=None, workers: int = 1):
    """``sigma -> (mean_nf, me, EnsembleResult)`` for :func:`find_stress_for_life`."""
    def evaluate(sigma):
        c = cfg.with_load(sigma)
        res = run_ensemble(c, runner_factory(c) if runner_factory else None, workers)
        nf = res.mean_nf if res.mean_nf is not None else math.inf
        return nf, res.me_percent, res
    return evaluate


class SweepStore:
    """Append-only JSON-lines store of finished sweep cases."""

    def __init__(self, path):
        self.path = Path(path)

    def load(self) -> dict:
        out = {}
        if self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    if line.strip():
                        rec = SurfaceFactorRecord(**json.loads(line))
                        out[rec.key()] = rec
        return out

    def append(self, rec: SurfaceFactorRecord) -> None:
        with open(self.path, "a") as fh:
            fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")


def write_map_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MAP_HEADER)
        for r in records:
            w.writerow(r.csv_row())


def read_map_csv(path) -> list:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [SurfaceFactorRecord(float(r["ra_um"]), float(r["lcor_um"]), float(r["sigma_c_mpa"]),
                                float(r["ks"]), float(r["me_percent"]) if r["me_percent"] else None,
                                int(r["samples"])) for r in rows]


def planned_cases(ra_list, lcor_list, sigma_c_list) -> list:
    return [(sc, ra, lc) for sc in sigma_c_list for ra in ra_list for lc in lcor_list]


def sweep_surface_factor(ra_list, lcor_list, sigma_c_list, settings: SweepSettings,
                         store_path=None, resume: bool = False, runner_factory=None,
                         polished_fn=None, progress=None) -> list:
    """Surface factor for every (Ra, lcor, sigma_c) case.

    Per strength: the material is (re)calibrated and the polished stress at
    ``ref_nf`` found on the deterministic homogeneous strip.  Per case: the
    rough ensemble stress at ``ref_nf`` is found with the polished stress as
    the starting point, and both are translated to 10^6 cycles at the common
    slope ``b``.  With ``resume`` finished cases are read back from the store.
    """
    store = SweepStore(store_path) if store_path is not None else None
    if store is not None and not resume and store.path.exists():
        store.path.unlink()
    finished = store.load() if (store is not None and resume) else {}
    records = []
    for sc in sigma_c_list:
        todo = [(ra, lc) for ra in ra_list for lc in lcor_list
                if _case_key(ra, lc, sc) not in finished]
        mat = sig_p = None
        if todo:
            mat = material_for_strength(sc, settings)
            pf = polished_fn or (lambda s, m: polished_life(s, m, settings.cycle_cap,
                                                            settings.jump_tol))
            search = find_stress_for_life(
                settings.ref_nf, lambda s: (pf(s, mat), 0.0, None),
                mat.basquin_a * settings.ref_nf ** (-mat.basquin_b), mat.basquin_b)
            sig_p = search.sigma
        for ra in ra_list:
            for lc in lcor_list:
                key = _case_key(ra, lc, sc)
                if key in finished:
                    records.append(finished[key])
                    continue
                rec = _run_case(ra, lc, sc, mat, sig_p, settings, runner_factory)
                if store is not None:
                    store.append(rec)
                if progress is not None:
                    progress(rec)
                records.append(rec)
    return records


def _run_case(ra, lc, sc, mat, sig_p, s: SweepSettings, runner_factory) -> SurfaceFactorRecord:
    try:
        if ra == 0:
            return SurfaceFactorRecord(ra, lc, sc, 1.0, 0.0, 0, sig_p, sig_p)
        seed = case_seed(s.base_seed, ra, lc, sc)
        cfg = ensemble_config(s, mat, ra, lc, sig_p, seed)
        search = find_stress_for_life(s.ref_nf, ensemble_evaluator(cfg, runner_factory, s.workers),
                                      sig_p, mat.basquin_b)
        b = mat.basquin_b
        ks = surface_factor(extrapolate_endurance(search.sigma, s.ref_nf, b),
                            extrapolate_endurance(sig_p, s.ref_nf, b))
        res: EnsembleResult = search.result
        n = res.n_samples if res is not None else 0
        return SurfaceFactorRecord(ra, lc, sc, ks, search.me_percent, n, search.sigma, sig_p,
                                   flagged=ks > 1.0,
                                   me_converged=res is None or res.converged)
    except Exception as exc:  # per-case failures are recorded, the sweep continues
        logger.warning("case Ra=%g lcor=%g sigma_c=%g failed: %s", ra, lc, sc, exc)
        return SurfaceFactorRecord(ra, lc, sc, float("nan"), None, 0, None, sig_p,
                                   status="ERROR", error=f"{type(exc).__name__}: {exc}")


def with_settings(s: SweepSettings, **kw) -> SweepSettings:
    return replace(s, **kw)
