"""Monte-Carlo ensembles of rough-specimen fatigue simulations.

Sample ``k`` draws its white noise from a seed derived from
``(base_seed, k)`` alone, so every sample is reproducible in isolation and
results do not depend on worker scheduling.  The stopping rule is checked
on the ordered prefix of completed samples.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .mesh import (SpecimenGeometry, build_polished_mesh, default_interior_size,
                   mesh_size_rule, perturb_boundary, UM_PER_MM)
from .pffatigue.material import LoadSpec, MaterialParams
from .pffatigue.solver import Status, simulate, DEFAULT_JUMP_TOL
from .roughsurf import (RNG_ALGORITHM, RoughnessSpec, build_autocorr_matrix,
                        cholesky_factor, sample_profile)

logger = logging.getLogger(__name__)

Z_95 = 1.96
MAX_ERROR_FRACTION = 0.2
CONVERGED = "CONVERGED"
UNCONVERGED_ME = "UNCONVERGED_ME"


class EnsembleError(RuntimeError):
    def __init__(self, message: str, records=()):
        super().__init__(message)
        self.records = list(records)


def margin_of_error(nf_samples, strict_as_printed: bool = False) -> float:
    """Half-width of the 95% confidence interval of the mean life, in percent.

    The default is relative to the mean, ``100 * 1.96 s / (sqrt(M) mean)``.
    ``strict_as_printed`` multiplies by the mean instead; that variant is
    not dimensionless and exists only to audit the literal formula.
    """
    x = np.asarray(nf_samples, dtype=float)
    if x.size < 2:
        raise ValueError("margin of error needs at least two samples")
    mean = float(np.mean(x))
    if mean == 0:
        raise ValueError("margin of error undefined for zero mean")
    s = float(np.std(x, ddof=1))
    if strict_as_printed:
        return Z_95 * s / math.sqrt(x.size) * mean * 100.0
    return 100.0 * Z_95 * s / (math.sqrt(x.size) * mean)


def sample_seed(base_seed: int, k: int) -> int:
    """64-bit seed of sample ``k`` (splittable hash of ``(base_seed, k)``)."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(k),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble definition.

    ``roughness`` supplies ``target_rq`` and ``corr_length`` (um); its seed
    and sampling grid are ignored because abscissae come from the mesh.
    """

    roughness: RoughnessSpec
    material: MaterialParams
    load: LoadSpec
    geometry: SpecimenGeometry
    min_samples: int = 30
    me_limit: float = 5.0
    max_samples: int = 200
    base_seed: int = 0
    boundary_size: float | None = None  # mm; default from the mesh-size rule
    interior_size: float | None = None  # mm
    jump_tol: float = DEFAULT_JUMP_TOL
    strict_me: bool = False

    def __post_init__(self):
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if not 0 < self.me_limit <= 100:
            raise ValueError("me_limit must lie in (0, 100]")
        if self.max_samples < self.min_samples:
            raise ValueError("max_samples must be >= min_samples")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")

    def mesh_sizes(self) -> tuple[float, float]:
        ell_um = self.material.ell * UM_PER_MM
        h = self.boundary_size
        if h is None:
            h = mesh_size_rule(self.roughness.corr_length, ell_um) / UM_PER_MM
        hi = self.interior_size
        if hi is None:
            hi = default_interior_size(h, self.material.ell)
        return h, max(h, hi)

    def with_load(self, sigma_a: float) -> "EnsembleConfig":
        from dataclasses import replace
        return replace(self, load=self.load.with_amplitude(sigma_a))

    def echo(self) -> dict:
        h, hi = self.mesh_sizes()
        return {
            "roughness": {"target_rq_um": self.roughness.target_rq,
                          "corr_length_um": self.roughness.corr_length},
            "material": self.material.to_dict(),
            "load": asdict(self.load),
            "geometry": {"name": self.geometry.name, "outline_mm": self.geometry.outline.tolist(),
                         "tags": [t.name for t in self.geometry.tags],
                         "plane": self.geometry.plane.value},
            "min_samples": self.min_samples, "me_limit": self.me_limit,
            "max_samples": self.max_samples, "base_seed": int(self.base_seed),
            "boundary_size_mm": h, "interior_size_mm": hi, "jump_tol": self.jump_tol,
            "strict_me": self.strict_me, "rng": RNG_ALGORITHM,
        }


@dataclass
class SampleRecord:
    index: int
    seed: int
    nf: int | None
    status: str  # FAILED, SURVIVED_CAP or ERROR
    wall_time: float = 0.0
    error: str | None = None


@dataclass
class EnsembleResult:
    nf_samples: list
    censored_flags: list
    sample_seeds: list
    statuses: list
    mean_nf: float | None
    std_nf: float | None
    me_percent: float | None
    flag: str
    records: list = field(default_factory=list)
    strict_me: bool = False

    @property
    def converged(self) -> bool:
        return self.flag == CONVERGED

    @property
    def n_samples(self) -> int:
        return len(self.nf_samples)

    @property
    def n_censored(self) -> int:
        return int(sum(self.censored_flags))

    @property
    def survival_fraction(self) -> float:
        valid = [s for s in self.statuses if s != "ERROR"]
        return sum(s == Status.SURVIVED_CAP.value for s in valid) / max(len(valid), 1)

    def uncensored(self) -> list:
        return [n for n, s in zip(self.nf_samples, self.statuses) if s == Status.FAILED.value]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "seed", "nf", "status"])
            for r in self.records:
                w.writerow([r.index, r.seed, "" if r.nf is None else r.nf, r.status])

    def to_dict(self) -> dict:
        return {
            "mean_nf": self.mean_nf, "std_nf": self.std_nf, "me_percent": self.me_percent,
            "flag": self.flag, "n_samples": self.n_samples, "n_censored": self.n_censored,
            "survival_fraction": self.survival_fraction, "strict_me": self.strict_me,
            "samples": [asdict(r) for r in self.records],
        }

    def to_json(self, path, config: EnsembleConfig | dict | None = None) -> None:
        doc = {"software": {"name": "roughfat", "version": __version__}, "result": self.to_dict()}
        if config is not None:
            doc["config"] = config.echo() if isinstance(config, EnsembleConfig) else config
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "EnsembleResult":
        with open(path) as fh:
            doc = json.load(fh)
        res = doc["result"]
        recs = [SampleRecord(**r) for r in res["samples"]]
        return summarize(recs, res["flag"] == CONVERGED, res.get("strict_me", False))


def summarize(records, converged: bool, strict_me: bool = False) -> EnsembleResult:
    recs = sorted(records, key=lambda r: r.index)
    ok = [r for r in recs if r.status != "ERROR"]
    lives = [r.nf for r in ok if r.status == Status.FAILED.value]
    mean = float(np.mean(lives)) if lives else None
    std = float(np.std(lives, ddof=1)) if len(lives) >= 2 else None
    me = margin_of_error(lives, strict_me) if len(lives) >= 2 and mean else None
    if len(lives) >= 2 and std == 0:
        me = 0.0
    return EnsembleResult(
        nf_samples=[r.nf for r in ok],
        censored_flags=[r.status == Status.SURVIVED_CAP.value for r in ok],
        sample_seeds=[r.seed for r in ok],
        statuses=[r.status for r in ok],
        mean_nf=mean, std_nf=std, me_percent=me,
        flag=CONVERGED if converged else UNCONVERGED_ME,
        records=recs, strict_me=strict_me,
    )


def stop_predicate(records, cfg: EnsembleConfig) -> bool:
    """Stopping rule on an ordered prefix of sample records."""
    ok = [r for r in records if r.status != "ERROR"]
    if len(ok) < cfg.min_samples:
        return False
    lives = [r.nf for r in ok if r.status == Status.FAILED.value]
    if not lives:
        return True  # every sample survived: nothing left to estimate
    if len(lives) < 2:
        return False
    if min(lives) == max(lives):
        return True
    return margin_of_error(lives, cfg.strict_me) <= cfg.me_limit


class SpecimenRunner:
    """Default sample runner: polished mesh and Cholesky factor built once,
    then one perturbed mesh and fatigue run per sample."""

    def __init__(self, cfg: EnsembleConfig):
        self.cfg = cfg
        self._mesh = None
        self._factor = None
        self._deterministic = None

    def _prepare(self):
        if self._mesh is not None:
            return
        cfg = self.cfg
        h, hi = cfg.mesh_sizes()
        rough = cfg.roughness.target_rq > 0
        self._mesh = build_polished_mesh(cfg.geometry, h, hi, require_rough=rough)
        if rough:
            x0 = self._mesh.rough_x0_um()
            self._factor, jitter = cholesky_factor(
                build_autocorr_matrix(x0, cfg.roughness.corr_length))
            logger.debug("Cholesky factor of %d rough nodes, jitter %.1e", x0.size, jitter)

    def __call__(self, k: int, seed: int) -> SampleRecord:
        cfg = self.cfg
        t0 = time.perf_counter()
        try:
            self._prepare()
            if cfg.roughness.target_rq == 0:
                # polished: every sample is the same deterministic run
                if self._deterministic is None:
                    out = simulate(self._mesh, cfg.material, cfg.load, jump_tol=cfg.jump_tol)
                    self._deterministic = (out.n_cycles, out.status.value)
                nf, status = self._deterministic
            else:
                x0 = self._mesh.rough_x0_um()
                spec = RoughnessSpec.for_abscissae(cfg.roughness.target_rq,
                                                   cfg.roughness.corr_length, x0, seed)
                prof = sample_profile(spec, x0, self._factor)
                mesh = perturb_boundary(self._mesh, prof)
                out = simulate(mesh, cfg.material, cfg.load, jump_tol=cfg.jump_tol)
                nf, status = out.n_cycles, out.status.value
            return SampleRecord(k, seed, int(nf), status, time.perf_counter() - t0)
        except Exception as exc:  # recorded per sample, the ensemble continues
            logger.warning("sample %d (seed %d) failed: %s", k, seed, exc)
            return SampleRecord(k, seed, None, "ERROR", time.perf_counter() - t0,
                                f"{type(exc).__name__}: {exc}")


def _call(runner, k, seed):
    return runner(k, seed)


def run_ensemble(cfg: EnsembleConfig, runner=None, workers: int = 1,
                 progress=None) -> EnsembleResult:
    """Run samples k = 0, 1, ... until the stopping rule holds on the prefix.

    ``runner(k, seed) -> SampleRecord`` defaults to :class:`SpecimenRunner`.
    With ``workers > 1`` samples run in a process pool in batches of
    ``workers``; samples past the stopping index are discarded.
    """
    runner = SpecimenRunner(cfg) if runner is None else runner
    done: dict[int, SampleRecord] = {}
    k_next = 0
    stop_at = None

    def errors_exceeded(prefix):
        n_err = sum(r.status == "ERROR" for r in prefix)
        return n_err > MAX_ERROR_FRACTION * max(len(prefix), cfg.min_samples)

    def scan():
        prefix = []
        for k in range(len(done)):
            if k not in done:
                break
            prefix.append(done[k])
            if stop_predicate(prefix, cfg):
                return k + 1, prefix
        return None, prefix

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while stop_at is None and k_next < cfg.max_samples:
            batch = range(k_next, min(k_next + max(workers, 1), cfg.max_samples))
            seeds = [sample_seed(cfg.base_seed, k) for k in batch]
            if pool is None:
                recs = [runner(k, s) for k, s in zip(batch, seeds)]
            else:
                recs = list(pool.map(_call, [runner] * len(batch), batch, seeds))
            for r in recs:
                done[r.index] = r
                if progress is not None:
                    progress(r)
            k_next = batch.stop
            stop_at, prefix = scan()
            if errors_exceeded(prefix) and len(prefix) >= cfg.min_samples:
                raise EnsembleError(
                    f"{sum(r.status == 'ERROR' for r in prefix)} of {len(prefix)} samples "
                    f"failed with solver errors", prefix)
    finally:
        if pool is not None:
            pool.shutdown()
    n = stop_at if stop_at is not None else cfg.max_samples
    records = [done[k] for k in range(n)]
    if errors_exceeded(records):
        raise EnsembleError(f"{sum(r.status == 'ERROR' for r in records)} of {n} samples "
                            f"failed with solver errors", records)
    return summarize(records, stop_at is not None, cfg.strict_me)
