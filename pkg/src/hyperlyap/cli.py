"""Command-line interface.

Every command prints a JSON run record (``--output json``, default) or the
command's table as CSV (``--output csv``).  ``--record PATH`` additionally
writes the JSON record to a file.

Exit codes: 0 success, 2 invalid input, 3 integrability gate failure,
4 numerical alarm, 5 corrupt snapshot.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import sympy as sp

from . import hodge, lyapunov, monodromy, series
from .errors import CorruptSnapshot, HyperlyapError, InvalidInput, InvalidParams
from .records import RunRecord, jsonable

log = logging.getLogger("hyperlyap")

THREADS_ENV = "HYPERLYAP_THREADS"
TABLE_HEADER = (
    "id", "model", "C", "d", "mu1", "mu2", "lambda1", "lambda1_plus_lambda2",
    "bound", "slack", "chi_abs", "thin_expected",
)
TABLE_CHECKPOINT_FORMAT = "hyperlyap-table-checkpoint"
TREND_GENERA = (10, 100, 1_000, 10_000, 100_000, 1_000_000)


class RunInterrupted(Exception):
    """Raised when a table run is stopped on purpose after a checkpoint."""


def _fractions(text: str) -> list[Fraction]:
    try:
        return [hodge.as_fraction(part.strip()) for part in text.split(",") if part.strip()]
    except (ValueError, ZeroDivisionError):
        raise InvalidParams(f"cannot parse rational list {text!r}") from None


def _fraction(text: str) -> Fraction:
    try:
        return hodge.as_fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise InvalidParams(f"cannot parse rational {text!r}") from None


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidInput("config file must hold a JSON object")
    return data


def simulation_config(args) -> lyapunov.SimulationConfig:
    """Defaults, then the config file, then explicit flags."""
    fields = set(lyapunov.SimulationConfig.__dataclass_fields__)
    base = {k: v for k, v in _load_config_file(args.config).items() if k in fields}
    overrides = {
        "dt": args.dt,
        "steps": args.steps,
        "burn_in": args.burn_in,
        "qr_interval": args.qr_interval,
        "trajectories": args.trajectories,
        "y_guard": args.y_guard,
        "seed": args.seed,
        "assignment": tuple(args.assignment.split(",")) if args.assignment else None,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return lyapunov.SimulationConfig(**base)
    except TypeError as exc:
        raise InvalidParams(str(exc)) from None


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _inject_expanding(rep: monodromy.MonodromyRep) -> monodromy.MonodromyRep:
    """Scale h0 by 2 and hinf by 1/2: the product relation survives, the gate fails."""
    if rep.is_exact:
        return monodromy.MonodromyRep(
            sp.ImmutableMatrix(2 * rep.h0), rep.h1, sp.ImmutableMatrix(rep.hinf / 2),
            monodromy.EXACT, rep.name + " (expanding)",
        )
    return monodromy.MonodromyRep(2 * rep.h0, rep.h1, rep.hinf / 2, monodromy.FLOATING, rep.name + " (expanding)")


def _cy_comparisons(est, case: monodromy.CYCase) -> dict:
    out = {}
    degs = (case.mu1, case.mu1 + case.mu2)
    for k, deg in zip((1, 2), degs):
        cmp = lyapunov.compare_bound(est, k, deg, 0, 3)
        out[f"k{k}"] = {
            "deg_par": deg,
            "bound": cmp.bound_exact,
            "bound_float": cmp.bound,
            "partial_sum": cmp.partial_sum,
            "slack": cmp.slack,
        }
    orb, chi = hodge.orbifold_normalize(est.lambdas, case.mu1, case.mu2)
    return {"bounds": out, "orbifold_lambda": orb, "chi_abs": chi}


def cmd_simulate(args):
    cfg = simulation_config(args)
    if args.case is not None:
        case = monodromy.cy_case(args.case)
        rep = monodromy.cy_realization(case.id)
        source = {"case": case.id}
    elif args.alpha is not None and args.beta is not None:
        case = None
        params = monodromy.HypergeometricParams(_fractions(args.alpha), _fractions(args.beta))
        rep = monodromy.levelt_construct(params)
        source = {"alpha": list(params.alpha), "beta": list(params.beta)}
    else:
        raise InvalidInput("simulate needs --case or both --alpha and --beta")
    if args.inject_expanding:
        rep = _inject_expanding(rep)
    est = lyapunov.estimate(
        rep, cfg, threads=_threads(args), checkpoint_path=args.checkpoint, resume_from=args.resume
    )
    results = {"source": source, "rank": rep.rank, "mode": rep.mode, "estimate": est.to_dict()}
    if case is not None:
        results.update(_cy_comparisons(est, case))
        results["table"] = {"lambda1": case.table_lambda1, "lambda1_plus_lambda2": case.table_lambda_sum}
    config = {"simulation": cfg.to_dict(), **source, "inject_expanding": bool(args.inject_expanding)}
    rows = [(i + 1, lam, err) for i, (lam, err) in enumerate(zip(est.lambdas, est.stderr))]
    return config, results, _csv(("index", "lambda", "stderr"), rows)


def _table_row(case: monodromy.CYCase, est: lyapunov.LyapunovEstimate) -> dict:
    bound = hodge.main_bound(case.mu1 + case.mu2, 0, 3)
    total = est.lambdas[0] + est.lambdas[1]
    _, chi = hodge.orbifold_normalize(est.lambdas, case.mu1, case.mu2)
    return {
        "id": case.id,
        "model": case.label,
        "C": case.C,
        "d": case.d,
        "mu1": str(case.mu1),
        "mu2": str(case.mu2),
        "lambda1": est.lambdas[0],
        "lambda1_plus_lambda2": total,
        "bound": str(bound),
        "slack": total - float(bound),
        "chi_abs": str(chi),
        "thin_expected": case.thin_expected,
        "stderr": list(est.stderr),
        "symmetry_defect": est.symmetry_defect,
    }


def _save_table_checkpoint(path, cfg, completed, current):
    data = {
        "format": TABLE_CHECKPOINT_FORMAT,
        "version": lyapunov.SNAPSHOT_VERSION,
        "config": cfg.to_dict(),
        "completed": completed,
        "current": current,
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(data))
    tmp.replace(path)


def _load_table_checkpoint(path, cfg):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptSnapshot(f"cannot read checkpoint {path}: {exc}") from None
    if data.get("format") != TABLE_CHECKPOINT_FORMAT or data.get("version") != lyapunov.SNAPSHOT_VERSION:
        raise CorruptSnapshot("not a table checkpoint of a supported version")
    if data.get("config") != cfg.to_dict():
        raise CorruptSnapshot("checkpoint configuration differs from the requested one")
    return data.get("completed", {}), data.get("current")


def cmd_table(args, stop_after_chunks=None):
    cfg = simulation_config(args)
    threads = _threads(args)
    completed: dict[str, dict] = {}
    current = None
    if args.resume:
        completed, current = _load_table_checkpoint(args.resume, cfg)
    for case in monodromy.CY_CASES.values():
        if str(case.id) in completed:
            continue
        rep = monodromy.cy_realization(case.id)
        engine, gens = lyapunov.new_engine(rep, cfg)
        if current is not None and current.get("case") == case.id:
            engine = lyapunov.resume(current["snapshot"])
        current = None

        def on_chunk(eng, case_id=case.id):
            if args.checkpoint:
                snap = {"case": case_id, "snapshot": lyapunov.checkpoint(eng)}
                _save_table_checkpoint(args.checkpoint, cfg, completed, snap)

        est = lyapunov.run_engine(engine, gens, threads=threads, on_chunk=on_chunk,
                                  stop_after_chunks=stop_after_chunks)
        if est is None:
            raise RunInterrupted(f"stopped during case {case.id}")
        completed[str(case.id)] = _table_row(case, est)
        if args.checkpoint:
            _save_table_checkpoint(args.checkpoint, cfg, completed, None)
        log.info("case %d done: lambda=%s", case.id, est.lambdas)
    rows = [completed[str(i)] for i in sorted(int(k) for k in completed)]
    results = {"rows": rows}
    table = _csv(TABLE_HEADER, ([row[h] for h in TABLE_HEADER] for row in rows))
    return {"simulation": cfg.to_dict()}, results, table


def _mu_from_args(args) -> tuple[Fraction, Fraction, dict]:
    if args.case is not None:
        case = monodromy.cy_case(args.case)
        return case.mu1, case.mu2, {"case": case.id}
    if args.mu1 is None or args.mu2 is None:
        raise InvalidInput("degrees needs --case or both --mu1 and --mu2")
    mu1, mu2 = _fraction(args.mu1), _fraction(args.mu2)
    return mu1, mu2, {"mu1": mu1, "mu2": mu2}


def cmd_degrees(args):
    mu1, mu2, source = _mu_from_args(args)
    degs = hodge.cy_hodge_degrees(mu1, mu2)
    rederived = hodge.hodge_degrees_from_cokernels(mu1, mu2)
    params = monodromy.HypergeometricParams((mu1, mu2, 1 - mu2, 1 - mu1), (0, 0, 0, 0))
    cok = hodge.cokernel_table(mu1, mu2)
    bounds = {
        "k1": hodge.main_bound(degs.e30, 0, 3),
        "k2": hodge.main_bound(degs.e30 + degs.e21, 0, 3),
    }
    _, chi = hodge.orbifold_normalize([], mu1, mu2)
    results = {
        "hodge_degrees": {"E30": degs.e30, "E21": degs.e21, "E12": degs.e12, "E03": degs.e03},
        "cokernel_rederivation_agrees": rederived == degs,
        "hodge_numbers": monodromy.hodge_numbers(params),
        "main_bound": bounds,
        "cokernel_lengths": {p: list(v) for p, v in cok.items()},
        "chi_abs": chi,
    }
    rows = [(p, *v) for p, v in cok.items()]
    return source, results, _csv(("point", "tau0", "tau1", "tau2"), rows)


def _heights(text):
    return [float(v) for v in text.split(",") if v.strip()] if text else None


def _dominance(poly, lyap_text, stderr_text, chi_abs=None):
    heights = _heights(lyap_text)
    if heights is None:
        return None, None
    lyap = hodge.lyapunov_polygon(heights, chi_abs)
    stderr = _heights(stderr_text)
    verdict = hodge.polygon_dominates(lyap, poly, stderr=stderr)
    return lyap, verdict


def cmd_strata(args):
    g, stratum = args.genus, args.stratum
    if g < 1:
        raise InvalidInput("genus must be at least 1")
    pieces = hodge.hyperelliptic_pieces(g, stratum)
    poly = hodge.hn_polygon(pieces, 2)
    bounds = [hodge.large_genus_bound(g, k, stratum) for k in range(1, g + 1)]
    trend = [
        {"g": gg, "k": k, "lambda_k_bound": hodge.large_genus_bound(gg, k, stratum).lambda_k_bound}
        for gg in TREND_GENERA
        for k in range(1, 6)
        if k <= gg
    ]
    # exponents here are partial sums of lambda_i, so no orbifold rescaling
    lyap, verdict = _dominance(poly, args.lyapunov, args.stderr)
    results = {
        "hn_polygon": [list(v) for v in poly.vertices],
        "bounds": [
            {"k": b.k, "sum_bound": b.sum_bound, "lambda_k_bound": b.lambda_k_bound} for b in bounds
        ],
        "trend": [{**t, "lambda_k_bound_float": float(t["lambda_k_bound"])} for t in trend],
        "dominates": verdict,
    }
    return {"genus": g, "stratum": stratum}, results, poly.to_csv()


def _parse_pieces(text: str) -> list[tuple[int, Fraction]]:
    pieces = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        rank, _, degree = item.partition(":")
        if not degree:
            raise InvalidParams(f"piece {item!r} must be rank:degree")
        try:
            pieces.append((int(rank), _fraction(degree)))
        except ValueError:
            raise InvalidParams(f"bad piece {item!r}") from None
    if not pieces:
        raise InvalidParams("no pieces given")
    return pieces


def cmd_polygon(args):
    pieces = _parse_pieces(args.pieces)
    chi = _fraction(args.chi)
    poly = hodge.hn_polygon(pieces, chi)
    lyap, verdict = _dominance(poly, args.lyapunov, args.stderr)
    results = {
        "hn_polygon": [list(v) for v in poly.vertices],
        "lyapunov_polygon": None if lyap is None else [list(v) for v in lyap.vertices],
        "dominates": verdict,
    }
    return {"pieces": [list(p) for p in pieces], "chi_abs": chi}, results, poly.to_csv()


def cmd_wronskian(args):
    if args.N < 2:
        raise InvalidInput("N must be at least 2")
    if not 0 <= args.n0 < args.N:
        raise InvalidInput("need 0 <= n0 < N")
    tw = series.wronskian_series(args.N)
    inv = series.inverse_F_coefficients(args.N)
    fit = series.growth_fit(inv, args.n0)
    results = {
        "tW_constant_term": tw[0],
        "log_cancellation": "exact",
        "fit": fit.to_dict(),
        "verdict": f"sqrt-growth consistent: {'yes' if fit.sqrt_consistent else 'no'}",
        "first_coefficients": [str(c) for c in inv.coeffs[:6]],
    }
    if args.self_test:
        synthetic = [Fraction(2) ** n for n in range(args.N + 1)]
        synth_fit = series.growth_fit(synthetic, args.n0)
        results["self_test"] = {
            "input": "2^n",
            "fit": synth_fit.to_dict(),
            "flagged_exponential": not synth_fit.sqrt_consistent,
        }
    return {"N": args.N, "n0": args.n0}, results, series.coefficients_csv(inv)


def cmd_catalog(args):
    rows = [
        {"id": c.id, "label": c.label, "C": c.C, "d": c.d, "mu1": c.mu1, "mu2": c.mu2}
        for c in monodromy.CY_CASES.values()
    ]
    return {}, {"cases": rows}, monodromy.catalog_csv()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--record", help="also write the JSON run record here")
    p.add_argument("--checkpoint", help="write resumable snapshots to this path")
    p.add_argument("--resume", help="resume from a snapshot written by --checkpoint")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (env {THREADS_ENV})")
    p.add_argument("--config", help="JSON file with simulation settings")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_simulation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--qr-interval", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--y-guard", type=float)
    p.add_argument("--assignment", help="cusp rotation, one of 0,1 / 1,inf / inf,0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperlyap", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Lyapunov spectrum of one representation")
    _add_common(p)
    _add_simulation(p)
    p.add_argument("--case", type=int)
    p.add_argument("--alpha", help="comma-separated rationals, e.g. 1/2,1/2")
    p.add_argument("--beta")
    p.add_argument("--inject-expanding", action="store_true",
                   help="scale h0 to break the non-expanding condition (error-path check)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", help="simulate all 14 Calabi-Yau cases")
    _add_common(p)
    _add_simulation(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("degrees", help="exact Hodge-bundle degrees and bounds")
    _add_common(p)
    p.add_argument("--case", type=int)
    p.add_argument("--mu1")
    p.add_argument("--mu2")
    p.set_defaults(func=cmd_degrees)

    p = sub.add_parser("strata", help="hyperelliptic HN polygon and large-genus bounds")
    _add_common(p)
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--stratum", choices=hodge.STRATA, default=hodge.MINIMAL)
    p.add_argument("--lyapunov", help="comma-separated exponents to test for dominance")
    p.add_argument("--stderr", help="comma-separated standard errors of the partial sums")
    p.set_defaults(func=cmd_strata)

    p = sub.add_parser("polygon", help="HN polygon from pieces rank:degree")
    _add_common(p)
    p.add_argument("--pieces", required=True, help="e.g. 1:1,1:1/3")
    p.add_argument("--chi", default="2", help="|chi| used to normalise degrees")
    p.add_argument("--lyapunov")
    p.add_argument("--stderr")
    p.set_defaults(func=cmd_polygon)

    p = sub.add_parser("wronskian", help="coefficient growth of 1/(qF)")
    _add_common(p)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--n0", type=int, default=50)
    p.add_argument("--self-test", action="store_true", help="also fit a synthetic 2^n series")
    p.set_defaults(func=cmd_wronskian)

    p = sub.add_parser("catalog", help="the 14 Calabi-Yau parameter rows")
    _add_common(p)
    p.set_defaults(func=cmd_catalog)
    return parser


def run(argv=None, stdout=None) -> tuple[int, RunRecord | None]:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    timestamp = datetime.now(timezone.utc).isoformat()
    try:
        config, results, table = args.func(args)
    except HyperlyapError as exc:
        print(f"hyperlyap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code, None
    config = jsonable(config)
    record = RunRecord(
        command=args.command,
        config=config,
        results=jsonable(results),
        duration=time.perf_counter() - start,
        timestamp=timestamp,
    )
    if args.record:
        Path(args.record).write_text(record.to_json() + "\n")
    stdout.write(table if args.output == "csv" else record.to_json() + "\n")
    return 0, record


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
