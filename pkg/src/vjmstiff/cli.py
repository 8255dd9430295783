"""Command-line front end: ``validate``, ``equilibrium``, ``sweep`` and ``map``.

Chains come from a chain-description file (``--chain``) or the built-in
Orthoglide leg (``--posture``). Offsets and directions are twists in m and rad;
sweep lengths are given in mm. Exit codes: 0 success, 1 bad input,
2 no equilibrium found, 3 kinematic singularity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import detect_buckling, displacement_sweep, stiffness_at_offset
from .chain import ChainError, ChainModel, IKError, inverse_kinematics_unloaded, load_chain
from .equilibrium import NoEquilibriumError, SingularityError, SolverSettings, unloaded_state
from .models import AXIAL, POSTURES, OrthoglideGeometry, orthoglide_chain
from .serialize import (
    atomic_write,
    csv_text,
    equilibrium_document,
    json_text,
    report_document,
    sweep_csv,
    sweep_json,
)

log = logging.getLogger("vjmstiff")

EXIT_OK, EXIT_INPUT, EXIT_NO_EQUILIBRIUM, EXIT_SINGULAR = 0, 1, 2, 3
FINE_STEP_MM = 0.001
_NAMED_DIRECTIONS = {name: i for i, name in enumerate(("x", "y", "z", "rx", "ry", "rz"))}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument helpers


def parse_vector(text: str, size: int, what: str) -> np.ndarray:
    try:
        values = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"{what}: expected {size} comma-separated numbers, got {text!r}") from None
    if values.shape != (size,) or not np.all(np.isfinite(values)):
        raise InputError(f"{what}: expected {size} finite comma-separated numbers, got {text!r}")
    return values


def parse_direction(text: str) -> np.ndarray:
    """``x``, ``-ry`` etc. or six comma-separated components (normalized)."""
    key = text.strip().lower()
    sign = -1.0 if key.startswith("-") else 1.0
    key = key.lstrip("+-")
    if key in _NAMED_DIRECTIONS:
        d = np.zeros(6)
        d[_NAMED_DIRECTIONS[key]] = sign
        return d
    d = parse_vector(text, 6, "--direction")
    norm = np.linalg.norm(d)
    if norm == 0:
        raise InputError("--direction must be non-zero")
    return d / norm


def parse_grid_axis(text: str) -> tuple[str, np.ndarray]:
    """``NAME=start:stop:count`` with NAME one of q1..qn or x, y, z."""
    try:
        name, spec = text.split("=", 1)
        start, stop, count = spec.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise InputError(f"--grid: expected NAME=start:stop:count, got {text!r}") from None
    if values.size < 1:
        raise InputError(f"--grid {text!r}: count must be positive")
    return name.strip().lower(), values


@dataclass
class ChainChoice:
    chain: ChainModel
    q0: np.ndarray
    geometry: dict
    default_direction: np.ndarray


def load_choice(args) -> ChainChoice:
    if bool(args.chain) == bool(args.posture):
        raise InputError("give exactly one of --chain FILE or --posture A|B|C|D")
    if args.posture:
        chain, q0 = orthoglide_chain(args.posture)
        return ChainChoice(chain, q0, OrthoglideGeometry().metadata(), AXIAL.copy())
    try:
        chain = load_chain(args.chain)
    except OSError as exc:
        raise InputError(f"cannot read chain file: {exc}") from None
    q0 = np.zeros(chain.n)
    if "q0" in chain.metadata:
        q0 = np.asarray(chain.metadata["q0"], dtype=float).reshape(-1)
    if getattr(args, "q0", None):
        q0 = parse_vector(args.q0, chain.n, "--q0")
    if q0.shape != (chain.n,):
        raise InputError(f"q0 must have {chain.n} entries")
    return ChainChoice(chain, q0, dict(chain.metadata.get("assumed_geometry", {})), AXIAL.copy())


def settings_from(args) -> SolverSettings:
    return SolverSettings(rng_seed=args.seed, max_iter=args.max_iter, max_restarts=args.max_restarts)


def emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    choice = load_choice(args)
    chain = choice.chain
    eigs = np.linalg.eigvalsh(chain.K_theta) if chain.m else np.array([])
    pose = unloaded_state(chain, np.zeros(chain.n)).pose
    lines = [
        f"chain {chain.name or '(unnamed)'}",
        f"n={chain.n} m={chain.m} K_θ eigs=[{', '.join(format(e, '.6g') for e in eigs)}]",
        f"unloaded position at q=0: [{', '.join(format(v, '.6g') for v in pose.position)}]",
    ]
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    choice = load_choice(args)
    offset = parse_vector(args.offset, 6, "--offset") if args.offset else np.zeros(6)
    state, result = stiffness_at_offset(choice.chain, choice.q0, offset, settings_from(args))
    doc = equilibrium_document(state, result)
    doc["offset"] = offset
    emit(json_text(doc), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    choice = load_choice(args)
    direction = parse_direction(args.direction) if args.direction else choice.default_direction
    step_mm = FINE_STEP_MM if args.paper_step else args.step
    if not step_mm > 0 or not args.dmax >= step_mm:
        raise InputError("need --step > 0 and --dmax >= --step")
    curve = displacement_sweep(
        choice.chain, choice.q0, direction, args.dmax * 1e-3, step_mm * 1e-3, settings_from(args)
    )
    if len(curve.samples) >= 10:
        report = report_document(detect_buckling(curve, args.drop_factor), curve, choice.geometry)
    else:
        report = {"detected": False, "failure": curve.failure, "samples": len(curve.samples),
                  "assumed_geometry": choice.geometry}
    out = Path(args.out)
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    atomic_write(out, sweep_json(curve) if args.format == "json" else sweep_csv(curve))
    atomic_write(report_path, json_text(report))
    if curve.failure:
        log.error("sweep truncated: %s", curve.failure)
        return EXIT_SINGULAR if curve.failure.startswith("SingularityError") else EXIT_NO_EQUILIBRIUM
    return EXIT_OK


def _map_point(task) -> dict:
    chain, q0, offset, direction, settings = task
    row = {"k_dir": np.nan, "eigs": np.full(6, np.nan), "critical": True, "iterations": 0, "error": ""}
    try:
        state, result = stiffness_at_offset(chain, q0, offset, settings)
        row.update(k_dir=result.directional(direction), eigs=result.spectrum, critical=result.critical,
                   iterations=state.iterations)
    except (NoEquilibriumError, SingularityError, ValueError, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _map_points(args, choice: ChainChoice) -> tuple[list[str], list[np.ndarray], list[np.ndarray | None]]:
    """Returns coordinate names, coordinate rows and the q0 of each point (None when IK failed)."""
    chain = choice.chain
    if args.postures:
        names = [f"q{i + 1}" for i in range(chain.n)]
        labels = [p.strip().upper() for p in args.postures.split(",")]
        bad = [p for p in labels if p not in POSTURES]
        if bad or not args.posture:
            raise InputError("--postures needs the built-in chain (--posture) and labels from A, B, C, D")
        coords = [np.array(POSTURES[p]) for p in labels]
        return names, coords, list(coords)
    if args.points:
        names = [f"q{i + 1}" for i in range(chain.n)]
        coords = [parse_vector(p, chain.n, "--points") for p in args.points.split(";") if p.strip()]
        return names, coords, list(coords)
    if not args.grid:
        raise InputError("map needs --grid, --points or --postures")
    axes = [parse_grid_axis(g) for g in args.grid]
    names = [a for a, _ in axes]
    cartesian = set(names) <= {"x", "y", "z"}
    joints = {f"q{i + 1}" for i in range(chain.n)}
    if not cartesian and not set(names) <= joints:
        raise InputError(f"--grid axes must all be from {sorted(joints)} or all from x, y, z")
    if len(set(names)) != len(names):
        raise InputError("--grid axes repeat")
    mesh = np.meshgrid(*[v for _, v in axes], indexing="ij")
    coords = [np.array(c) for c in zip(*[m.ravel() for m in mesh])]
    q0s: list[np.ndarray | None] = []
    ref = unloaded_state(chain, choice.q0).pose
    for c in coords:
        if cartesian:
            twist = np.zeros(6)
            for name, v in zip(names, c):
                twist["xyz".index(name)] = v
            try:
                q0s.append(inverse_kinematics_unloaded(chain, ref.displaced(twist), choice.q0))
            except IKError:
                q0s.append(None)
        else:
            q = choice.q0.copy()
            for name, v in zip(names, c):
                q[int(name[1:]) - 1] = v
            q0s.append(q)
    return names, coords, q0s


def cmd_map(args) -> int:
    choice = load_choice(args)
    offset = parse_vector(args.offset, 6, "--offset") if args.offset else np.zeros(6)
    direction = parse_direction(args.direction) if args.direction else choice.default_direction
    names, coords, q0s = _map_points(args, choice)
    base = settings_from(args)
    tasks = [(choice.chain, q0, offset, direction, replace(base, rng_seed=base.rng_seed + i))
             for i, q0 in enumerate(q0s) if q0 is not None]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            computed = list(pool.map(_map_point, tasks))
    else:
        computed = [_map_point(t) for t in tasks]
    it = iter(computed)
    rows = []
    for c, q0 in zip(coords, q0s):
        r = next(it) if q0 is not None else {"k_dir": np.nan, "eigs": np.full(6, np.nan), "critical": True,
                                              "iterations": 0, "error": "IKError: target unreachable"}
        rows.append((c, r))
    header = [*names, "k_dir", *[f"eig{i + 1}" for i in range(6)], "critical_flag", "iterations", "error"]
    if args.format == "json":
        emit(json_text([dict(zip(names, c)) | {"k_dir": r["k_dir"], "eigenvalues": r["eigs"],
                        "critical": r["critical"], "iterations": r["iterations"], "error": r["error"] or None}
                        for c, r in rows]), args.out)
    else:
        emit(csv_text(header, [[*c, r["k_dir"], *r["eigs"], r["critical"], r["iterations"], r["error"]]
                               for c, r in rows]), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vjmstiff", description="Stiffness and buckling analysis of serial elastic chains.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, solver=True):
        p.add_argument("--chain", metavar="FILE", help="chain-description JSON file")
        p.add_argument("--posture", choices=sorted(POSTURES), type=str.upper, help="built-in Orthoglide leg posture")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        if solver:
            p.add_argument("--q0", help="passive-joint values for --chain, comma-separated")
            p.add_argument("--seed", type=int, default=0, help="restart RNG seed")
            p.add_argument("--max-iter", type=int, default=100)
            p.add_argument("--max-restarts", type=int, default=10)

    p = sub.add_parser("validate", help="parse a chain and print its dimensions and spring spectrum")
    common(p, solver=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("equilibrium", help="equilibrium and stiffness at one end-effector offset")
    common(p)
    p.add_argument("--offset", metavar="x,y,z,rx,ry,rz", help="twist from the unloaded pose, m and rad")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("sweep", help="force-displacement sweep and buckling report")
    common(p)
    p.add_argument("--direction", help="x, y, z, rx, ry, rz (optionally signed) or six components")
    p.add_argument("--dmax", type=float, default=4.0, metavar="MM", help="sweep length in mm (default 4)")
    p.add_argument("--step", type=float, default=0.01, metavar="MM", help="step in mm (default 0.01)")
    p.add_argument("--paper-step", action="store_true", help=f"use a {FINE_STEP_MM} mm step")
    p.add_argument("--drop-factor", type=float, default=5.0)
    p.add_argument("--report", metavar="PATH", help="buckling report path (default: OUT with .report.json)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep, out="sweep.csv")

    p = sub.add_parser("map", help="stiffness spectra over a grid or list of configurations")
    common(p)
    p.add_argument("--grid", action="append", metavar="NAME=start:stop:count",
                   help="grid axis over q1..qn or Cartesian x, y, z (repeatable)")
    p.add_argument("--points", metavar="Q;Q;...", help="explicit passive-joint points")
    p.add_argument("--postures", metavar="A,B,...", help="named postures of the built-in chain")
    p.add_argument("--offset", metavar="x,y,z,rx,ry,rz", help="twist applied at every point")
    p.add_argument("--direction", help="direction of the k_dir column")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_map)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("VJMSTIFF_LOG", "WARNING").strip().upper()
    numeric = int(level) if level.isdigit() else getattr(logging, level, None)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(level=numeric, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ChainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoEquilibriumError as exc:
        print(f"no equilibrium: {exc}", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except SingularityError as exc:
        print(f"singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
