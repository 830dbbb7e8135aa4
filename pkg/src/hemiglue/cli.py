"""Command-line runner: ``hemiglue run <scenario.yaml>`` and ``hemiglue verify <suite>``.

Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import scipy
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from . import circle_homeo as ch
from .acceptance import SUITES, CRITERIA, collapsed_condenser, random_glued_points, run_suite
from .density import DEFAULT_RADII, bilip_bounds, density_sweep
from .errors import ConfigError, DomainError, HemiglueError
from .extension import Gauge, beurling_ahlfors_extend, distortion_field, exp_integrability, extension_bilip, radial_extend
from .glued_metric import as_metric, quotient_classes
from .modulus import (
    annulus_capacity_profile, annulus_mesh, annulus_problem, quadrilateral_problem, rectangle_mesh,
    rectangle_sides, solve_modulus,
)
from .seam_measure import nu_abs, polyline_seam_length, seam_h1
from .sphere_geom import sigma_array

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 1, 2, 3
VERDICT_CANTOR = "not QC-equivalent: capacity bounded below"


def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


# ------------------------------------------------------------------ config


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DistanceConfig(_Strict):
    pairs: int = Field(1000, ge=1, le=10**6)
    seam_samples: int = Field(512, ge=16, le=2**16)


class SeamConfig(_Strict):
    arcs: list[tuple[float, float]] = [(-np.pi, np.pi)]
    resolution: int = Field(2**14, ge=2, le=2**20)
    class_resolution: int = Field(2**16, ge=64, le=2**22)


class DensityConfig(_Strict):
    points: list[float] = [np.pi / 2]
    radii: list[float] = list(DEFAULT_RADII)
    quadrature_resolution: int = Field(200, ge=8, le=4000)

    @field_validator("radii")
    @classmethod
    def _radii(cls, v):
        if len(v) < 2 or any(b >= a for a, b in zip(v, v[1:])) or v[0] >= np.pi / 4 or v[-1] <= 0:
            raise ValueError("radii must strictly decrease inside (0, π/4), at least two")
        return v


class GaugeConfig(_Strict):
    kind: Literal["exp", "table"] = "exp"
    p: float = Field(1.0, gt=0)
    t: list[float] = []
    a: list[float] = []


class ExtensionConfig(_Strict):
    kind: Literal["radial", "beurling-ahlfors"] = "radial"
    gauge: GaugeConfig = GaugeConfig()
    quadrature_resolution: int = Field(1024, ge=16, le=2**16)
    bilip_samples: int = Field(20000, ge=100, le=10**6)
    field_radii: int = Field(8, ge=1, le=256)
    field_angles: int = Field(256, ge=4, le=2**14)


class ModulusConfig(_Strict):
    shape: Literal["rectangle", "annulus"] = "rectangle"
    a: float = Field(1.0, gt=0)
    b: float = Field(1.0, gt=0)
    n: int = Field(200, ge=1, le=2000)
    r: float = Field(0.1, gt=0)
    R: float = Field(1.0, gt=0)
    rings: int = Field(64, ge=2, le=4096)
    sectors: int = Field(256, ge=8, le=16384)
    dump_mesh: bool = False

    @model_validator(mode="after")
    def _radii(self):
        if self.r >= self.R:
            raise ValueError("annulus needs r < R")
        return self


class CapacityConfig(_Strict):
    theta0: float = 0.0
    R: float = Field(0.5, gt=0, lt=np.pi / 2)
    radii: list[float] = list(0.5 * 2.0 ** -np.arange(1, 9))
    positivity_threshold: float = Field(0.05, gt=0)
    background: int = Field(2000, ge=100, le=10**5)
    fraction: float = Field(0.5, gt=0, lt=1)
    levels: list[int] = [4, 5, 6]

    @model_validator(mode="after")
    def _ladder(self):
        r = self.radii
        if not r or any(b >= a for a, b in zip(r, r[1:])) or r[0] >= self.R:
            raise ValueError("radii must strictly decrease below R")
        if any(not 1 <= k <= 12 for k in self.levels):
            raise ValueError("levels must lie in [1, 12]")
        return self


class Scenario(_Strict):
    homeo: dict[str, Any]
    experiment: Literal["distance", "seam", "density", "extension", "modulus", "capacity-power", "capacity-cantor"]
    seed: int = Field(0, ge=0)
    table_size: int = Field(ch.DEFAULT_TABLE_SIZE, ge=256, le=2**22)
    distance: DistanceConfig = DistanceConfig()
    seam: SeamConfig = SeamConfig()
    density: DensityConfig = DensityConfig()
    extension: ExtensionConfig = ExtensionConfig()
    modulus: ModulusConfig = ModulusConfig()
    capacity: CapacityConfig = CapacityConfig()
    output_prefix: str = Field("result", pattern=r"^[A-Za-z0-9_.-]+$")

    @field_validator("homeo")
    @classmethod
    def _homeo(cls, v):
        try:
            ch.from_descriptor(v, table_size=256)
        except DomainError as exc:
            raise ValueError(str(exc)) from None
        return v


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping")
    return Scenario.model_validate(data)


def config_hash(s: Scenario) -> str:
    canon = json.dumps(s.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ------------------------------------------------------------------ artifacts


class Artifacts:
    """Collects outputs in memory; everything is written at the end."""

    def __init__(self) -> None:
        self.files: dict[str, str] = {}

    def table(self, name: str, header: list[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
        self.files[name] = buf.getvalue()

    def json(self, name: str, obj) -> None:
        self.files[name] = json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"

    def text(self, name: str, s: str) -> None:
        self.files[name] = s

    def write(self, out: Path) -> list[str]:
        out.mkdir(parents=True, exist_ok=True)
        for name, content in self.files.items():
            (out / name).write_text(content)
        return sorted(self.files)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ------------------------------------------------------------------ experiments


def _scaled(n: int, scale: float, lo: int = 2) -> int:
    return max(lo, int(round(n * scale)))


def exp_distance(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    m = as_metric(g)
    rng = np.random.default_rng(s.seed)
    n = s.distance.pairs
    xa, na = random_glued_points(n, rng)
    xb, nb = random_glued_points(n, rng)
    d = m.distances(xa, na, xb, nb, seam_samples=_scaled(s.distance.seam_samples, scale, 16))
    sig = sigma_array(xa, xb)
    hem = np.where(na, "N", "S"), np.where(nb, "N", "S")
    art.table(f"{s.output_prefix}_distance.csv", ["pair", "hemisphere_a", "hemisphere_b", "sigma", "d_Z"],
              zip(range(n), hem[0], hem[1], sig, d))
    art.json(f"{s.output_prefix}_distance_summary.json",
             {"pairs": n, "max_abs_sigma_minus_dZ": float(np.max(np.abs(sig - d)))})
    return True


def exp_seam(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    rows = []
    res = _scaled(s.seam.resolution, scale)
    for a, b in s.seam.arcs:
        rows.append((a, b, seam_h1(g, [(a, b)]), nu_abs(g, [(a, b)]), polyline_seam_length(g, [(a, b)], res)))
    art.table(f"{s.output_prefix}_seam.csv", ["start", "end", "seam_h1", "nu_abs", "polyline"], rows)
    classes = quotient_classes(g, _scaled(s.seam.class_resolution, scale, 64))
    art.table(f"{s.output_prefix}_classes.csv", ["start", "end"], classes)
    return True


def exp_density(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    q = _scaled(s.density.quadrature_resolution, scale, 8)
    metric = as_metric(g)

    def one(t):
        return density_sweep(metric, t, s.density.radii, q)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        reports = list(ex.map(one, s.density.points))
    rows = [row for rep in reports for row in rep.rows()]
    art.table(f"{s.output_prefix}_density.csv", ["theta0", "r", "area_south", "area_north", "ratio"], rows)
    c_prime = max(r.C for r in reports)
    art.json(f"{s.output_prefix}_density_summary.json", {
        "points": [{"theta0": r.theta0, "C1": r.C1, "C2": r.C2, "certified": r.certified} for r in reports],
        "C_prime": c_prime,
        "bounds": bilip_bounds(c_prime),
        "measured_bilip": ch.bilip_constant(g),
    })
    return True


def exp_extension(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    e = s.extension
    gauge = Gauge(e.gauge.kind, e.gauge.p, tuple(e.gauge.t), tuple(e.gauge.a))
    if e.kind == "radial":
        ext = radial_extend(g)
        field = distortion_field(ext, e.field_radii, e.field_angles)
        art.table(f"{s.output_prefix}_distortion.csv", ["r", "angle", "K"], field.rows())
        rep = exp_integrability(ext, gauge, _scaled(e.quadrature_resolution, scale, 16))
        integ = {"resolutions": rep.resolutions, "values": rep.values, "growth": rep.growth,
                 "verdict": rep.verdict, "crossover": rep.crossover}
    else:
        ext = beurling_ahlfors_extend(g)
        integ = None
    bilip = extension_bilip(ext.sphere_map, e.bilip_samples, seed=s.seed)
    art.json(f"{s.output_prefix}_extension.json", {
        "kind": e.kind, "gauge": gauge.describe(), "integrability": integ,
        "extension_bilip": bilip, "boundary_bilip": ch.bilip_constant(g),
    })
    return True


def exp_modulus(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    c = s.modulus
    if c.shape == "rectangle":
        n = _scaled(c.n, scale, 1)
        mesh = rectangle_mesh(c.a, c.b, n, n)
        sides = rectangle_sides(mesh)
        sol = solve_modulus(quadrilateral_problem(mesh, sides), n_paths=200, seed=s.seed)
        dual = solve_modulus(quadrilateral_problem(mesh, sides, (1, 3)), n_paths=0)
        rows = [("rectangle", sol.value, c.b / c.a, sol.value * dual.value, sol.residual)]
    else:
        mesh = annulus_mesh(c.r, c.R, _scaled(c.rings, scale), _scaled(c.sectors, scale, 8))
        sol = solve_modulus(annulus_problem(mesh, (0.0, 0.0), c.r, c.R), n_paths=200, seed=s.seed)
        rows = [("annulus", sol.value, 2 * np.pi / np.log(c.R / c.r), float("nan"), sol.residual)]
    art.table(f"{s.output_prefix}_modulus.csv", ["shape", "modulus", "reference", "reciprocal_product", "residual"], rows)
    if c.dump_mesh:
        art.json(f"{s.output_prefix}_mesh.json", {"mesh": mesh.to_dict(), "solution": sol.to_dict()})
    return True


def exp_capacity_power(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    e = s.capacity
    prof = annulus_capacity_profile(g, e.theta0, e.R, e.radii, background=_scaled(e.background, scale, 100))
    art.table(f"{s.output_prefix}_profile.csv", ["r", "modulus"], prof)
    lowest = min(m for _, m in prof)
    ok = lowest >= e.positivity_threshold
    art.json(f"{s.output_prefix}_profile_summary.json", {
        "theta0": e.theta0, "R": e.R, "min_modulus": lowest, "threshold": e.positivity_threshold,
        "bounded_below": ok,
    })
    return ok


def exp_capacity_cantor(s: Scenario, g, art: Artifacts, scale: float, threads: int) -> bool:
    e = s.capacity
    rows = [(k, collapsed_condenser(k, e.fraction), collapsed_condenser(k, e.fraction, collapse=False)) for k in e.levels]
    art.table(f"{s.output_prefix}_profile.csv", ["level", "collapsed_modulus", "euclidean_modulus"], rows)
    ok = min(r[1] for r in rows) >= e.positivity_threshold
    verdict = VERDICT_CANTOR if ok else "inconclusive: capacity not bounded below"
    art.text(f"{s.output_prefix}_verdict.txt", verdict + "\n")
    return ok


EXPERIMENTS = {
    "distance": exp_distance, "seam": exp_seam, "density": exp_density, "extension": exp_extension,
    "modulus": exp_modulus, "capacity-power": exp_capacity_power, "capacity-cantor": exp_capacity_cantor,
}


# ------------------------------------------------------------------ commands


def _versions() -> dict[str, str]:
    return {"hemiglue": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.config)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            print(f"config error: {loc}: {err['msg']}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    art = Artifacts()
    try:
        g = ch.from_descriptor(scenario.homeo, table_size=scenario.table_size)
        ok = EXPERIMENTS[scenario.experiment](scenario, g, art, args.resolution_scale, args.threads)
    except (HemiglueError, ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure in {scenario.experiment}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = Path(args.out)
    names = art.write(out)
    manifest = {
        "config_hash": config_hash(scenario),
        "experiment": scenario.experiment,
        "versions": _versions(),
        "wall_time_s": round(time.perf_counter() - start, 3),
        "resolution_scale": args.resolution_scale,
        "threads": args.threads,
        "outputs": names,
        "passed": ok,
    }
    (out / f"{scenario.output_prefix}_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for n in names:
        print(out / n)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_verify(args) -> int:
    homeo = None
    if args.homeo:
        try:
            homeo = ch.from_descriptor(json.loads(args.homeo))
        except (json.JSONDecodeError, DomainError) as exc:
            print(f"config error: --homeo: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    results = run_suite(args.suite, args.resolution_scale, homeo)
    for r in results:
        print(r.line())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"verify_{args.suite}.json").write_text(
            json.dumps([_plain(r.to_dict()) for r in results], indent=2) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hemiglue", description="Glued-hemisphere metric experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for independent sample points")
        sp.add_argument("--resolution-scale", type=float, default=1.0, help="multiplier for resolution knobs")

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config")
    common(r)
    v = sub.add_parser("verify", help="run an invariant battery")
    v.add_argument("suite", choices=list(SUITES) + [f"criterion-{k}" for k in sorted(CRITERIA)])
    v.add_argument("--homeo", default=None, help="JSON descriptor for the axioms suite")
    common(v)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1 or not args.resolution_scale > 0:
        print("config error: --threads must be >= 1 and --resolution-scale > 0", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run":
        if args.out is None:
            args.out = "."
        return cmd_run(args)
    return cmd_verify(args)


if __name__ == "__main__":
    raise SystemExit(main())
