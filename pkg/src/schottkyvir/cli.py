"""Command-line interface.

Commands: validate, differentials, period-matrix, check-identities,
graphs, virasoro-npoint, recursion-check, modular-check.  Every report
is schema-stable JSON with complex numbers as [re, im] pairs, the
sha256 hash of the effective configuration, truncation diagnostics and
nonnegative residuals; the same seed reproduces byte-identical output.

Exit codes: 0 all residuals within their declared tolerances, 1 residual
failure, 2 malformed configuration, 3 numerical guard trip.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .differentials import Surface, TruncationPolicy, reference_params
from .errors import NumericalGuardError
from .moduli import parse_supplier
from .modular import (
    logdetM_derivative_check,
    random_sp,
    transform_frame,
    verify_automorphy,
)
from .schottky import SchottkyParams, validate
from .variations import (
    FDConfig,
    check_nabla_nu,
    check_nabla_omega,
    check_nabla_s,
    check_rauch,
)
from .virgraphs import apply_Dn, enumerate_graphs, graph_count, verify_recursion

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3


class ConfigError(ValueError):
    pass


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[_pair(v) for v in row] for row in np.asarray(m, dtype=complex)]


def parse_complex(text: str) -> complex:
    """Accept 1.5+0.2i or 1.5+0.2j, plain reals included."""
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError as exc:
        raise ConfigError(f"bad complex literal {text!r}") from exc


def parse_points(text: str) -> tuple[complex, ...]:
    return tuple(parse_complex(t) for t in text.split(",") if t.strip())


def load_config(args: argparse.Namespace) -> dict:
    """Config file then flags (flags win); defaults to the reference surface."""
    doc: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if "genus" in doc:
        try:
            params = SchottkyParams.from_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad parameter document: {exc}") from exc
    else:
        params = reference_params()
    pol = doc.get("policy", {})
    policy = TruncationPolicy(
        max_word_length=int(pol.get("max_word_length", 8)),
        tail_tol=float(pol.get("tail_tol", 1e-10)),
        mode=str(pol.get("mode", "adaptive")),
    )
    seed = int(doc.get("seed", 0))
    if args.seed is not None:
        seed = args.seed
    threads = args.threads or os.cpu_count() or 1
    return {"params": params, "policy": policy, "seed": seed, "threads": threads}


def config_hash(cfg: dict) -> str:
    doc = {
        "params": cfg["params"].to_dict(),
        "policy": {
            "max_word_length": cfg["policy"].max_word_length,
            "tail_tol": cfg["policy"].tail_tol,
            "mode": cfg["policy"].mode,
        },
        "seed": cfg["seed"],
    }
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def seeded_circle_points(seed: int, n: int, radius: float = 6.0) -> tuple[complex, ...]:
    """Evaluation points drawn uniformly on a circle outside all discs."""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return tuple(radius * complex(math.cos(a), math.sin(a)) for a in angles)


def seeded_triples(seed: int, n: int, radius: float = 6.0) -> list[tuple[complex, ...]]:
    """Separated point triples: a seeded rotation of the circle thirds.

    Identity checks difference their integrands near each point; fully
    independent draws can nearly collide and cross a pole inside the
    stencil, so triples keep a guaranteed angular gap.
    """
    rng = np.random.default_rng(seed)
    out = []
    for theta in rng.uniform(0.0, 2.0 * math.pi, size=n):
        out.append(
            tuple(
                radius * complex(math.cos(theta + k * 2 * math.pi / 3),
                                 math.sin(theta + k * 2 * math.pi / 3))
                for k in range(3)
            )
        )
    return out


def _surface(cfg: dict) -> Surface:
    """A fresh surface per invocation: its diagnostics then depend only on
    the command and seed, keeping reports byte-identical across runs (the
    group-matrix stack underneath is still cached by parameters)."""
    return Surface(cfg["params"], cfg["policy"])


def _report(cfg: dict, command: str, result: dict, residuals: dict[str, tuple[float, float]],
            surface: Surface | None) -> tuple[dict, int]:
    """Assemble the envelope; residuals map name -> (value, tolerance)."""
    ok = all(v <= tol for v, tol in residuals.values())
    doc = {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "policy": {
            "max_word_length": cfg["policy"].max_word_length,
            "tail_tol": cfg["policy"].tail_tol,
            "mode": cfg["policy"].mode,
        },
        "result": result,
        "residuals": {k: {"value": v, "tolerance": tol} for k, (v, tol) in residuals.items()},
        "diagnostics": surface.diagnostics.as_dict() if surface else {},
        "ok": ok,
    }
    return doc, (EXIT_OK if ok else EXIT_RESIDUAL)


# --------------------------------------------------------------- subcommands
def cmd_validate(cfg: dict, args) -> tuple[dict, int]:
    report = validate(cfg["params"])
    result = {
        "pass": report.ok,
        "violations": [
            {"a": a, "b": b, "margin": m} for a, b, m in report.violations
        ],
    }
    residuals = {"separation": (0.0 if report.ok else 1.0, 0.5)}
    return _report(cfg, "validate", result, residuals, None)


def cmd_differentials(cfg: dict, args) -> tuple[dict, int]:
    x, y = parse_points(args.at)
    surf = _surface(cfg)
    pm = surf.period_matrix()
    result = {
        "omega": _pair(surf.omega_raw(x, y)),
        "s": _pair(surf.s_raw(x)),
        "nu": [_pair(v) for v in surf.nu_vec(x)],
        "tau": _matrix(pm.tau),
    }
    residuals = {"period_asymmetry": (pm.asymmetry, 1e-6)}
    return _report(cfg, "differentials", result, residuals, surf)


def cmd_period_matrix(cfg: dict, args) -> tuple[dict, int]:
    surf = _surface(cfg)
    pm = surf.period_matrix()
    result = {
        "tau": _matrix(pm.tau),
        "index_set_K": [list(p) for p in pm.index_set_K],
        "min_im_eigenvalue": pm.min_im_eigenvalue,
    }
    residuals = {
        "period_asymmetry": (pm.asymmetry, 1e-9),
        "riemann_relation": (max(0.0, -pm.min_im_eigenvalue), 1e-9),
    }
    return _report(cfg, "period-matrix", result, residuals, surf)


def cmd_check_identities(cfg: dict, args) -> tuple[dict, int]:
    surf = _surface(cfg)
    fd = FDConfig()
    if args.points:
        pts = parse_points(args.points)
        sets = [pts[i : i + 3] for i in range(0, len(pts) - 2, 3)][: args.sets]
    else:
        sets = seeded_triples(cfg["seed"], args.sets)

    def one(group):
        x, y1, y2 = group
        return {
            "rauch": check_rauch(surf, x, fd)["residual"],
            "nabla_nu": check_nabla_nu(surf, x, y1, 1, fd)["residual"],
            "nabla_omega": check_nabla_omega(surf, x, y1, y2, fd)["residual"],
            "nabla_s": check_nabla_s(surf, x, y1, fd)["residual"],
        }

    with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
        rows = list(pool.map(one, sets))
    worst = {k: max(r[k] for r in rows) for k in rows[0]}
    residuals = {k: (v, 1e-6) for k, v in worst.items()}
    return _report(cfg, "check-identities", dict(worst), residuals, surf)


def cmd_graphs(cfg: dict, args) -> tuple[dict, int]:
    graphs = enumerate_graphs(args.n)
    result = {
        "count": len(graphs),
        "closed_form": graph_count(args.n),
        "graphs": [
            {
                "mapping": [list(e) for e in gr.mapping],
                "cycles": [list(c) for c in gr.cycles],
                "chains": [list(c) for c in gr.chains],
            }
            for gr in graphs
        ],
    }
    residuals = {"census": (abs(len(graphs) - graph_count(args.n)), 0.5)}
    return _report(cfg, "graphs", result, residuals, None)


def cmd_virasoro_npoint(cfg: dict, args) -> tuple[dict, int]:
    surf = _surface(cfg)
    F = parse_supplier(args.theta)
    zs = parse_points(args.points) if args.points else seeded_circle_points(cfg["seed"], args.n)
    if len(zs) != args.n:
        raise ConfigError(f"need {args.n} points, got {len(zs)}")
    c = parse_complex(args.c)
    total, per_graph = apply_Dn(surf, args.n, c, F, zs, per_graph=True)
    result = {
        "G_n": _pair(total),
        "per_graph": [_pair(v) for v in per_graph],
        "graph_count": len(per_graph),
        "points": [_pair(z) for z in zs],
    }
    return _report(cfg, "virasoro-npoint", result, {}, surf)


def cmd_recursion_check(cfg: dict, args) -> tuple[dict, int]:
    surf = _surface(cfg)
    F = parse_supplier(args.theta)
    pts = seeded_circle_points(cfg["seed"], args.n + 1)
    c = parse_complex(args.c)
    out = verify_recursion(surf, args.n, c, F, pts[: args.n], pts[args.n], FDConfig())
    result = {
        "lhs": _pair(out["lhs"]),
        "rhs": _pair(out["rhs"]),
        "residual": out["residual"],
        "points": [_pair(z) for z in pts],
    }
    residuals = {"recursion": (out["residual"], 1e-4)}
    return _report(cfg, "recursion-check", result, residuals, surf)


def cmd_modular_check(cfg: dict, args) -> tuple[dict, int]:
    surf = _surface(cfg)
    g = surf.genus
    F = parse_supplier(args.theta)
    zs = seeded_circle_points(cfg["seed"], args.n)
    c = parse_complex(args.c)
    rng = np.random.default_rng(cfg["seed"])
    samples = [random_sp(g, 6, rng) for _ in range(args.samples)]
    pm = surf.period_matrix()

    def one(sp):
        frame = transform_frame(pm.omega_cap, sp)
        A, _, C, _ = sp.blocks()
        lemma_i = float(np.abs(frame.N - (A.T - C.T @ frame.omega_new)).max())
        nc_sym = float(np.abs(frame.nc() - frame.nc().T).max())
        logdet = logdetM_derivative_check(pm.omega_cap, sp)
        auto = verify_automorphy(surf, sp, args.n, c, F, zs)["residual"]
        return {"lemma_i": lemma_i, "nc_symmetry": nc_sym,
                "logdet_fd": logdet, "automorphy": auto}

    with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
        rows = list(pool.map(one, samples))
    summary = {
        k: {"max": max(r[k] for r in rows), "median": float(np.median([r[k] for r in rows]))}
        for k in rows[0]
    }
    residuals = {
        "lemma_i": (summary["lemma_i"]["max"], 1e-10),
        "nc_symmetry": (summary["nc_symmetry"]["max"], 1e-10),
        "logdet_fd": (summary["logdet_fd"]["max"], 1e-7),
        "automorphy": (summary["automorphy"]["max"], 1e-4),
    }
    result = {"samples": rows, "summary": summary}
    return _report(cfg, "modular-check", result, residuals, surf)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="schottkyvir",
        description="Genus-g surfaces by circle sewing: differentials, "
        "variational identities, Virasoro n-point operators, modular checks.",
    )
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--output", help="write the JSON report here instead of stdout")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomised choices")
    ap.add_argument("--threads", type=int, default=None, help="worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="circle separation check")

    d = sub.add_parser("differentials", help="classical forms at a point pair")
    d.add_argument("--at", required=True, help='evaluation points "x,y"')

    sub.add_parser("period-matrix", help="period matrix with diagnostics")

    ci = sub.add_parser("check-identities", help="variational identity residuals")
    ci.add_argument("--points", help="comma-separated points (groups of 3)")
    ci.add_argument("--sets", type=int, default=3, help="number of seeded point sets")

    gr = sub.add_parser("graphs", help="order-n graph census and decompositions")
    gr.add_argument("--n", type=int, required=True)

    vn = sub.add_parser("virasoro-npoint", help="n-point function of a supplier")
    vn.add_argument("--n", type=int, required=True)
    vn.add_argument("--c", default="1", help="central charge")
    vn.add_argument("--points", help="comma-separated insertion points")
    vn.add_argument("--theta", default="lattice:sqrt2", help="supplier spec")

    rc = sub.add_parser("recursion-check", help="order-lowering recursion residual")
    rc.add_argument("--n", type=int, default=1)
    rc.add_argument("--c", default="1")
    rc.add_argument("--theta", default="lattice:sqrt2")

    mc = sub.add_parser("modular-check", help="homology base-change identities")
    mc.add_argument("--g", type=int, default=2, help="genus (informational)")
    mc.add_argument("--samples", type=int, default=20)
    mc.add_argument("--n", type=int, default=1)
    mc.add_argument("--c", default="1")
    mc.add_argument("--theta", default="lattice:sqrt2")

    return ap


_DISPATCH = {
    "validate": cmd_validate,
    "differentials": cmd_differentials,
    "period-matrix": cmd_period_matrix,
    "check-identities": cmd_check_identities,
    "graphs": cmd_graphs,
    "virasoro-npoint": cmd_virasoro_npoint,
    "recursion-check": cmd_recursion_check,
    "modular-check": cmd_modular_check,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args)
        doc, code = _DISPATCH[args.command](cfg, args)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "kind": "config"}), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(json.dumps({"error": str(exc), "kind": "numerical-guard"}), file=sys.stderr)
        return EXIT_GUARD
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
