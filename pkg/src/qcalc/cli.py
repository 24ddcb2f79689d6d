"""qcalc command line: build test sets, run the verifications, emit reports.

Exit codes: 0 success / verification passed, 1 verification failed,
2 usage or input error.  Reports are JSON with sorted keys; identical
inputs and seeds produce byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import calculus, clifford, geometry, metric, whitney
from .errors import QcalcError
from .fields import CovectorField, ScalarField, load_field
from .geometry import SCHEMA_VERSION, load_sample, path_to_dict, sample_to_dict

TOLERANCE_DEFAULTS = {
    "ftc": 1e-9,        # pass threshold for the path-integral identity
    "loop": 1e-9,       # reconstruction loop-defect warning level
    "remainder": 1e-9,  # slack in the remainder bound
    "whitney": 0.05,    # smallest-bucket threshold for the C1 check
    "monogenic": 1e-12, # Dirac defect tolerance
    "graph": 1e-9,      # graph-derivative residual slack
}


@dataclass
class RunConfig:
    command: str
    options: dict
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    csv: str | None = None

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, TOLERANCE_DEFAULTS[name])


class UsageError(QcalcError):
    pass


def _parse_tolerances(entries: list[str] | None) -> dict:
    out = {}
    for entry in entries or []:
        name, sep, value = entry.partition("=")
        if not sep:
            raise UsageError(f"--tol expects NAME=VALUE, got {entry!r}")
        if name not in TOLERANCE_DEFAULTS:
            known = ", ".join(sorted(TOLERANCE_DEFAULTS))
            raise UsageError(f"unknown tolerance {name!r} (known: {known})")
        try:
            out[name] = float(value)
        except ValueError as exc:
            raise UsageError(f"--tol {name}: {value!r} is not a number") from exc
    return out


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", action="append", metavar="NAME=VAL")
    parser.add_argument("--out", metavar="PATH")
    parser.add_argument("--csv", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="qcalc", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="construct a test set")
    shapes = build.add_subparsers(dest="shape", required=True)
    p = shapes.add_parser("gasket")
    p.add_argument("--level", type=int, required=True)
    _common(p)
    p = shapes.add_parser("carpet")
    p.add_argument("--level", type=int, required=True)
    _common(p)
    p = shapes.add_parser("polyline")
    p.add_argument("--coords", required=True, help="JSON list of points")
    p.add_argument("--closed", action="store_true")
    _common(p)
    p = shapes.add_parser("graph")
    p.add_argument("--slopes", required=True, help="comma separated slopes")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--span", type=float, nargs=2, required=True)
    _common(p)
    p = shapes.add_parser("dumbbell")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--neck", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    _common(p)

    p = sub.add_parser("k-estimate", help="estimate the chord-arc constant")
    p.add_argument("set")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--sample", type=int, metavar="N")
    _common(p)

    p = sub.add_parser("geodesic", help="shortest intrinsic path")
    p.add_argument("set")
    p.add_argument("i", type=int)
    p.add_argument("j", type=int)
    p.add_argument("--path", metavar="PATH", help="write the path JSON here")
    _common(p)

    p = sub.add_parser("ftc", help="path-integral identity residual")
    p.add_argument("set")
    p.add_argument("f")
    p.add_argument("A")
    p.add_argument("--from", dest="src", type=int)
    p.add_argument("--to", dest="dst", type=int)
    p.add_argument("--vertices", help="comma separated vertex chain")
    _common(p)

    p = sub.add_parser("reconstruct", help="integrate a covector field from a basepoint")
    p.add_argument("set")
    p.add_argument("A")
    p.add_argument("--base", type=int, required=True)
    p.add_argument("--value", type=float, default=0.0)
    _common(p)

    p = sub.add_parser("remainder-check", help="first-order remainder bound over all pairs")
    p.add_argument("set")
    p.add_argument("f")
    p.add_argument("A")
    p.add_argument("--k", type=float, required=True)
    _common(p)

    p = sub.add_parser("holder-fit", help="Holder modulus fits")
    p.add_argument("set")
    p.add_argument("f")
    p.add_argument("A")
    p.add_argument("--k", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("whitney", help="Whitney C1 scale-decay check")
    p.add_argument("set")
    p.add_argument("f")
    p.add_argument("A")
    p.add_argument("--buckets", type=int, default=6)
    p.add_argument("--slack", type=float, default=0.1, help="relative decay slack")
    _common(p)

    p = sub.add_parser("flatness", help="local flatness spectrum")
    p.add_argument("set")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--radius", type=float, required=True)
    _common(p)

    cliff = sub.add_parser("clifford", help="monogenic linear-map operations")
    csub = cliff.add_subparsers(dest="cliffcmd", required=True)
    p = csub.add_parser("check")
    p.add_argument("columns", help="JSON file with dim and columns")
    p.add_argument("--side", choices=("left", "right"), default="left")
    _common(p)
    p = csub.add_parser("complete")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--side", choices=("left", "right"), default="left")
    p.add_argument("--partial", required=True, help="JSON file with dim and columns")
    _common(p)
    p = csub.add_parser("dimension")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--side", choices=("left", "right"), default="left")
    _common(p)

    p = sub.add_parser("graph-derivative", help="tangential derivative check on a graph")
    p.add_argument("set")
    p.add_argument("f")
    p.add_argument("A")
    p.add_argument("--cquad", type=float, default=1.0)
    _common(p)

    return top


def _load_json(path: str) -> dict:
    from .errors import FormatError

    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(path, "<json>", f"not valid JSON ({exc})") from exc


def _scalar(path: str, sample) -> ScalarField:
    f = load_field(path, sample)
    if not isinstance(f, ScalarField):
        raise UsageError(f"{path}: expected a scalar field ('values')")
    return f


def _covector(path: str, sample) -> CovectorField:
    A = load_field(path, sample)
    if not isinstance(A, CovectorField):
        raise UsageError(f"{path}: expected a covector field ('covectors')")
    return A


def dispatch(config: RunConfig) -> tuple[int, dict | None]:
    """Run one subcommand; returns (exit status, report document)."""
    cmd = config.command
    opt = config.options

    if cmd == "build":
        shape = opt["shape"]
        if shape == "gasket":
            sample = geometry.build_gasket(opt["level"])
        elif shape == "carpet":
            sample = geometry.build_carpet(opt["level"])
        elif shape == "polyline":
            try:
                coords = json.loads(opt["coords"])
            except json.JSONDecodeError as exc:
                raise UsageError(f"--coords is not valid JSON ({exc})") from exc
            sample = geometry.build_polyline(coords, closed=opt["closed"])
        elif shape == "graph":
            slopes = [float(s) for s in opt["slopes"].split(",") if s.strip()]
            sample = geometry.build_lipschitz_graph(slopes, opt["step"], opt["span"])
        else:
            sample = geometry.build_dumbbell(opt["radius"], opt["neck"], opt["step"])
        return 0, sample_to_dict(sample)

    if cmd == "k-estimate":
        sample = load_sample(opt["set"])
        if opt.get("sample"):
            report = metric.estimate_chord_arc(
                sample, "sampled", seed=config.seed, pair_budget=opt["sample"]
            )
        else:
            report = metric.estimate_chord_arc(sample, "exhaustive")
        return 0, report.as_dict()

    if cmd == "geodesic":
        sample = load_sample(opt["set"])
        path = metric.shortest_path(sample, opt["i"], opt["j"])
        doc = {
            "schema_version": SCHEMA_VERSION,
            "source": opt["i"],
            "target": opt["j"],
            "distance": metric.geodesic_distance(sample, opt["i"], opt["j"]),
            "path_vertices": list(path.vertices),
            "path_length": path.length,
        }
        if opt.get("path"):
            with open(opt["path"], "w") as fh:
                json.dump(path_to_dict(path), fh, sort_keys=True, indent=2)
                fh.write("\n")
        return 0, doc

    if cmd == "ftc":
        sample = load_sample(opt["set"])
        f = _scalar(opt["f"], sample)
        A = _covector(opt["A"], sample)
        if opt.get("vertices"):
            chain = [int(v) for v in opt["vertices"].split(",")]
            path = geometry.PolylinePath.from_vertices(sample, chain)
        elif opt.get("src") is not None and opt.get("dst") is not None:
            path = metric.shortest_path(sample, opt["src"], opt["dst"])
        else:
            raise UsageError("ftc needs either --vertices or both --from and --to")
        residual = calculus.verify_ftc(f, A, path)
        tol = config.tol("ftc")
        doc = {
            "schema_version": SCHEMA_VERSION,
            "path_vertices": list(path.vertices),
            "residual": residual,
            "tol": tol,
            "passed": residual <= tol,
        }
        return (0 if doc["passed"] else 1), doc

    if cmd == "reconstruct":
        sample = load_sample(opt["set"])
        A = _covector(opt["A"], sample)
        rec = calculus.reconstruct(
            sample, A, opt["base"], opt["value"], defect_tol=config.tol("loop")
        )
        doc = {
            "schema_version": SCHEMA_VERSION,
            "basepoint": opt["base"],
            "base_value": opt["value"],
            "field": rec.as_dict(),
            "warning": rec.warning,
        }
        return 0, doc

    if cmd == "remainder-check":
        sample = load_sample(opt["set"])
        f = _scalar(opt["f"], sample)
        A = _covector(opt["A"], sample)
        report = calculus.verify_remainder_bound(
            f, A, sample, k=opt["k"], tol=config.tol("remainder")
        )
        if config.csv:
            with open(config.csv, "w") as fh:
                fh.write(emit_pairs_csv(report))
        return (0 if report.passed else 1), report.as_dict()

    if cmd == "holder-fit":
        sample = load_sample(opt["set"])
        f = _scalar(opt["f"], sample)
        A = _covector(opt["A"], sample)
        fit = calculus.fit_holder_modulus(f, A, sample, k=opt["k"])
        return 0, fit.as_dict()

    if cmd == "whitney":
        sample = load_sample(opt["set"])
        f = _scalar(opt["f"], sample)
        A = _covector(opt["A"], sample)
        report = whitney.check_whitney_c1(
            sample,
            f,
            A,
            scale_buckets=opt["buckets"],
            threshold=config.tol("whitney"),
            decay_tol=opt["slack"],
        )
        return (0 if report.passed else 1), report.as_dict()

    if cmd == "flatness":
        sample = load_sample(opt["set"])
        report = whitney.local_flatness(sample, opt["index"], opt["radius"])
        return 0, report.as_dict()

    if cmd == "clifford":
        sub = opt["cliffcmd"]
        if sub == "check":
            doc = _load_json(opt["columns"])
            L = clifford.map_from_dict(doc, source=opt["columns"])
            tol = config.tol("monogenic")
            check = (
                clifford.is_left_monogenic(L, tol)
                if opt["side"] == "left"
                else clifford.is_right_monogenic(L, tol)
            )
            return (0 if check.passed else 1), check.as_dict()
        if sub == "complete":
            doc = _load_json(opt["partial"])
            dim = opt["dim"]
            if doc.get("dim") != dim:
                raise UsageError(
                    f"--dim {dim} does not match the file's dim {doc.get('dim')!r}"
                )
            cols = [
                clifford.Multivector(dim, np.asarray(c, dtype=float))
                for c in doc.get("columns", [])
            ]
            completed = clifford.complete_from_hyperplane(cols, side=opt["side"])
            out = completed.as_dict()
            out["schema_version"] = SCHEMA_VERSION
            return 0, out
        if sub == "dimension":
            n = opt["dim"]
            value = clifford.monogenic_space_dimension(n, side=opt["side"])
            return 0, {
                "schema_version": SCHEMA_VERSION,
                "n": n,
                "side": opt["side"],
                "dimension": value,
                "closed_form": (n - 1) * 2 ** n,
            }

    if cmd == "graph-derivative":
        sample = load_sample(opt["set"])
        f = _scalar(opt["f"], sample)
        deriv = _scalar(opt["A"], sample)
        report = clifford.tangential_derivative_on_graph(
            f, deriv, c_quad=opt["cquad"], tol=config.tol("graph")
        )
        return (0 if report.passed else 1), report.as_dict()

    raise UsageError(f"unknown command {cmd!r}")


def emit_pairs_csv(report: calculus.RemainderBoundReport) -> str:
    """CSV of (dist, remainder, bound) rows, one per unordered vertex pair.

    Each row shows the direction of the pair with the larger remainder-bound
    slack; rows are sorted by distance, then pair indices, so output is
    stable across runs.
    """
    lines = ["dist,remainder,bound"]
    if report.pair_dist is not None and len(report.pair_dist):
        order = np.lexsort(
            (report.pair_index[:, 1], report.pair_index[:, 0], report.pair_dist)
        )
        for idx in order:
            lines.append(
                f"{float(report.pair_dist[idx])!r},{float(report.pair_remainder[idx])!r},"
                f"{float(report.pair_bound[idx])!r}"
            )
    return "\n".join(lines) + "\n"


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    opt = vars(args).copy()
    command = opt.pop("command")
    seed = opt.pop("seed", 0)
    tol_entries = opt.pop("tol", None)
    out = opt.pop("out", None)
    csv = opt.pop("csv", None)
    return RunConfig(
        command=command,
        options=opt,
        seed=seed,
        tolerances=_parse_tolerances(tol_entries),
        out=out,
        csv=csv,
    )


def _write_report(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        config = _config_from_args(args)
        if config.csv and config.command != "remainder-check":
            raise UsageError("--csv is only supported for remainder-check")
        status, doc = dispatch(config)
    except UsageError as exc:
        print(f"qcalc: {exc}", file=sys.stderr)
        return 2
    except QcalcError as exc:
        print(f"qcalc: {exc}", file=sys.stderr)
        return 2
    if doc is not None:
        _write_report(doc, config.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
