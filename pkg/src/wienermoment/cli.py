"""Command-line front end.

    wienermoment gen gaussian --n 4 --c 1 --degree 4 --out inst.json
    wienermoment check inst.json
    wienermoment solve inst.json --factorize --quantize

Exit codes: 0 success, 1 failed check / no representing measure, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .certify import SizeLimit, basis_monomials, qv_scan, schmuedgen_check
from .factorize import BandViolation, pushforward
from .functional import (
    AtomFunctional,
    AtomicPathMeasure,
    DegreeExceeded,
    DegreeTooLarge,
    GaussianFunctional,
    MomentFunctional,
    TableFunctional,
    mc_build,
    table_from,
)
from .lattice import LatticeSpec, quantization_error, quantize_measure
from .polyalg import (
    IncompatibleGrid,
    Polynomial,
    PolynomialParseError,
    TimeGrid,
    UnknownTime,
    monomial_to_json,
    poly_from_json,
    poly_to_json,
)
from .represent import BandSpec, EmptyFeasibleSet, band_path_values, solve

DEVIATIONS = [
    {"id": "qv-normalization",
     "text": "QV defect is |n*ell(g^2 D_k^2) - c*ell(g^2)|: the factor n multiplies the "
             "increment moment instead of the whole difference."},
    {"id": "xi-scale",
     "text": "Per-step scale is xi_k = sqrt(n)*|D_k| in [sqrt(c0), sqrt(c1)], and paths are "
             "rebuilt as w_k = sum_j xi_j*(B_j - B_{j-1}) rather than xi_k*B_k."},
    {"id": "transport-scale",
     "text": "Moment transport takes the path scale as an explicit argument; quadratic "
             "variation c corresponds to path scale sqrt(c), not c."},
]

DEFAULT_TOL = {"psd": 1e-8, "residual": 1e-6, "margin": 1e-9}


class InputError(ValueError):
    pass


@dataclass
class Instance:
    grid_n: int
    degree: int
    c: float
    c0: float
    c1: float
    functional: dict
    constraints: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOL))
    lattice: dict | None = None
    band: dict | None = None
    qv: dict | None = None
    seed: int = 0
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def load(cls, path) -> "Instance":
        path = Path(path)
        obj = _read_json(path)
        if not isinstance(obj, dict):
            raise InputError("instance must be a JSON object")
        try:
            inst = cls(
                grid_n=int(obj["grid_n"]),
                degree=int(obj["degree"]),
                c=float(obj["c"]),
                c0=float(obj["c0"]),
                c1=float(obj["c1"]),
                functional=dict(obj["functional"]),
                constraints=list(obj.get("constraints", [])),
                tolerances={**DEFAULT_TOL, **obj.get("tolerances", {})},
                lattice=obj.get("lattice"),
                band=obj.get("band"),
                qv=obj.get("qv"),
                seed=int(obj.get("seed", 0)),
                base_dir=path.parent,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("malformed instance: %s" % exc) from exc
        inst.validate()
        return inst

    def validate(self):
        if not 0 < self.c0 < self.c < self.c1:
            raise InputError("need 0 < c0 < c < c1")
        if self.degree < 1 or self.grid_n < 1:
            raise InputError("degree and grid_n must be >= 1")
        self.polys()
        if self.functional.get("kind") == "montecarlo":
            if int(self.functional.get("samples", 0)) < 1:
                raise InputError("montecarlo functional needs samples >= 1")
        else:
            self.build_functional()

    def polys(self) -> list[Polynomial]:
        try:
            return [poly_from_json(p) for p in self.constraints]
        except PolynomialParseError as exc:
            raise InputError("bad constraint: %s" % exc) from exc

    def to_json(self) -> dict:
        return {
            "grid_n": self.grid_n, "degree": self.degree, "c": self.c, "c0": self.c0,
            "c1": self.c1, "functional": self.functional, "constraints": self.constraints,
            "tolerances": self.tolerances, "lattice": self.lattice, "band": self.band,
            "qv": self.qv, "seed": self.seed,
        }

    def build_functional(self, threads: int = 1) -> MomentFunctional:
        spec = self.functional
        kind = spec.get("kind")
        try:
            if kind == "gaussian":
                return GaussianFunctional(TimeGrid(self.grid_n), float(spec.get("c", self.c)))
            if kind == "table":
                obj = self._payload(spec)
                ell = TableFunctional.from_json(obj)
            elif kind == "atoms":
                ell = AtomFunctional(self.measure(spec))
            elif kind == "montecarlo":
                return mc_build(TimeGrid(self.grid_n), int(spec["samples"]), self.seed,
                                float(spec.get("c", self.c)), threads=threads)
            else:
                raise InputError("unknown functional kind %r" % kind)
        except (KeyError, TypeError, PolynomialParseError) as exc:
            raise InputError("malformed functional: %s" % exc) from exc
        if ell.grid.n != self.grid_n:
            raise InputError("functional grid %d != instance grid %d" % (ell.grid.n, self.grid_n))
        return ell

    def measure(self, spec=None) -> AtomicPathMeasure:
        spec = spec if spec is not None else self.functional
        if spec.get("kind") != "atoms":
            raise InputError("instance functional is not an atomic measure")
        return AtomicPathMeasure.from_json(self._payload(spec))

    def _payload(self, spec: dict) -> dict:
        if "file" in spec:
            return _read_json(self.base_dir / spec["file"])
        return spec

    def band_spec(self) -> BandSpec:
        mags = tuple((self.band or {}).get("magnitudes") or ())
        return BandSpec(self.grid_n, self.c0, self.c1, mags, self.c)

    def qv_settings(self, ell: MomentFunctional):
        cfg = self.qv or {}
        if "n_list" in cfg:
            n_list = [int(n) for n in cfg["n_list"]]
        elif isinstance(ell, GaussianFunctional):
            n_list = [self.grid_n, 2 * self.grid_n, 4 * self.grid_n]
        else:
            n_list = [n for n in range(1, self.grid_n + 1) if self.grid_n % n == 0]
        test_g = [poly_from_json(g) for g in cfg.get("test_g", [])] or [Polynomial.const(1.0)]
        return n_list, test_g, float(cfg.get("threshold", 0.3))


def _read_json(path: Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError("file not found: %s" % path) from exc
    except json.JSONDecodeError as exc:
        raise InputError("invalid JSON in %s: %s" % (path, exc)) from exc


def atomic_write(path: Path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=".%s." % path.name)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- report plumbing ---------------------------------------------------------

def _header(args, command: str, inst: Instance | None) -> dict:
    head = {"tool": "wienermoment", "version": __version__, "command": command}
    if inst is not None:
        head["instance"] = inst.to_json()
    if getattr(args, "paper_deviations", False):
        head["deviations"] = DEVIATIONS
    return head


def _emit(args, report: dict, csv_rows: list | None = None):
    text = _dump(report)
    csv_text = None
    if getattr(args, "csv", False) and csv_rows:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(csv_rows)
        csv_text = buf.getvalue()
    if args.out:
        if csv_text is not None:
            atomic_write(Path(args.out).with_suffix(".csv"), csv_text)
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
        if csv_text is not None:
            sys.stderr.write(csv_text)


def _load(args) -> Instance:
    inst = Instance.load(args.instance)
    if getattr(args, "seed", None) is not None:
        inst.seed = args.seed
    if getattr(args, "tol_psd", None) is not None:
        inst.tolerances["psd"] = args.tol_psd
    if getattr(args, "tol_residual", None) is not None:
        inst.tolerances["residual"] = args.tol_residual
    return inst


def _qv_report(inst: Instance, ell: MomentFunctional):
    n_list, test_g, threshold = inst.qv_settings(ell)
    return qv_scan(ell, inst.c, n_list, test_g, threshold)


def _qv_csv(qv) -> list:
    return [["n", "defect", "estimated_c"]] + [[r.n, r.defect, r.estimated_c] for r in qv.rows]


# -- subcommands -------------------------------------------------------------

def cmd_gen(args) -> int:
    c = args.c
    c0 = args.c0 if args.c0 is not None else 0.9 * c
    c1 = args.c1 if args.c1 is not None else 1.1 * c
    constraints = []
    for text in args.constraint or []:
        try:
            constraints.append(poly_from_json(json.loads(text)))
        except (json.JSONDecodeError, PolynomialParseError) as exc:
            raise InputError("bad --constraint: %s" % exc) from exc
    grid = TimeGrid(args.n)
    extra = {}
    if args.kind == "gaussian":
        tdeg = args.table_degree or 2 * args.degree + sum(f.degree for f in constraints)
        functional = {"kind": "table", **table_from(GaussianFunctional(grid, c), tdeg).to_json()}
    elif args.kind == "uniform-band-atoms":
        band = BandSpec(args.n, c0, c1, (math.sqrt(c / args.n),), c)
        values = band_path_values(band)
        mu = AtomicPathMeasure.from_arrays(values, [1.0 / len(values)] * len(values))
        extra["band"] = {"magnitudes": list(band.magnitudes)}
        if args.out:
            mpath = Path(args.out).with_suffix(".measure.json")
            atomic_write(mpath, _dump(mu.to_json()))
            functional = {"kind": "atoms", "file": mpath.name}
        else:
            functional = {"kind": "atoms", **mu.to_json()}
    else:
        if not args.path:
            raise InputError("table-from-file needs a path")
        table = TableFunctional.from_json(_read_json(Path(args.path)))
        grid = table.grid
        functional = {"kind": "table", **table.to_json()}
    inst = Instance(grid_n=grid.n, degree=args.degree, c=c, c0=c0, c1=c1,
                    functional=functional, constraints=[poly_to_json(f) for f in constraints],
                    seed=args.seed or 0, **extra)
    if args.out:
        inst.base_dir = Path(args.out).parent
    inst.validate()
    text = _dump(inst.to_json())
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check(args) -> int:
    inst = _load(args)
    ell = inst.build_functional(args.threads)
    cert = schmuedgen_check(ell, inst.polys(), inst.degree, inst.tolerances["psd"])
    qv = _qv_report(inst, ell)
    report = _header(args, "check", inst)
    report["certificate"] = cert.to_json()
    report["qv"] = qv.to_json()
    report["pass"] = cert.passed and qv.passed
    _emit(args, report, _qv_csv(qv))
    return 0 if report["pass"] else 1


def cmd_qv(args) -> int:
    inst = _load(args)
    ell = inst.build_functional(args.threads)
    qv = _qv_report(inst, ell)
    report = _header(args, "qv", inst)
    report["qv"] = qv.to_json()
    _emit(args, report, _qv_csv(qv))
    return 0 if qv.passed else 1


def _quantize_block(inst: Instance, mu: AtomicPathMeasure, K=None, h=None):
    spec_obj = dict(inst.lattice or {})
    if K is not None:
        spec_obj["K"] = K
    if h is not None:
        spec_obj["h"] = h
    if "K" not in spec_obj or "h" not in spec_obj:
        raise InputError("quantize needs a lattice spec (K and h)")
    spec = LatticeSpec.from_json(spec_obj)
    q = quantize_measure(mu, spec)
    errors = [{"mono": monomial_to_json(m),
               "error": quantization_error(mu, Polynomial.from_monomial(m), spec)}
              for m in basis_monomials(mu.grid, inst.degree)]
    return {"lattice": spec.to_json(), "measure": q.to_json(), "errors": errors}


def _error_csv(block) -> list:
    return [["mono", "error"]] + [[json.dumps(e["mono"]), e["error"]] for e in block["errors"]]


def cmd_solve(args) -> int:
    inst = _load(args)
    ell = inst.build_functional(args.threads)
    constraints = inst.polys()
    report = _header(args, "solve", inst)
    if not args.force:
        cert = schmuedgen_check(ell, constraints, inst.degree, inst.tolerances["psd"])
        qv = _qv_report(inst, ell)
        if not (cert.passed and qv.passed):
            report.update(status="check_failed", certificate=cert.to_json(), qv=qv.to_json())
            _emit(args, report)
            return 1
    try:
        result = solve(ell, inst.band_spec(), constraints, inst.degree,
                       tol=inst.tolerances["residual"], margin_tol=inst.tolerances["margin"])
    except EmptyFeasibleSet as exc:
        report.update(status="EmptyFeasibleSet", message=str(exc))
        _emit(args, report)
        return 1
    report["represent"] = result.to_json()
    report["status"] = result.status
    rows = None
    if result.status == "solved":
        if args.factorize:
            report["walk_measure"] = pushforward(result.measure, inst.band_spec()).to_json()
        if args.quantize:
            block = _quantize_block(inst, result.measure)
            report["quantized"] = block
            rows = _error_csv(block)
    _emit(args, report, rows)
    return 0 if result.status == "solved" else 1


def _measure_arg(args, inst: Instance) -> AtomicPathMeasure:
    if args.measure:
        return AtomicPathMeasure.from_json(_read_json(Path(args.measure)))
    return inst.measure()


def cmd_factorize(args) -> int:
    inst = _load(args)
    mu = _measure_arg(args, inst)
    report = _header(args, "factorize", inst)
    report["walk_measure"] = pushforward(mu, inst.band_spec()).to_json()
    _emit(args, report)
    return 0


def cmd_quantize(args) -> int:
    inst = _load(args)
    mu = _measure_arg(args, inst)
    block = _quantize_block(inst, mu, args.K, args.h)
    report = _header(args, "quantize", inst)
    report["quantized"] = block
    _emit(args, report, _error_csv(block))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here (atomically)")
    common.add_argument("--csv", action="store_true", help="also emit a CSV table")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol-psd", type=float)
    common.add_argument("--tol-residual", type=float)
    common.add_argument("--force", action="store_true")
    common.add_argument("--paper-deviations", action="store_true",
                        help="list the documented formula deviations in the report header")
    common.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="wienermoment", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="write an instance file")
    gen.add_argument("kind", choices=["gaussian", "uniform-band-atoms", "table-from-file"])
    gen.add_argument("path", nargs="?", help="moment table JSON for table-from-file")
    gen.add_argument("--n", type=int, default=2)
    gen.add_argument("--c", type=float, default=1.0)
    gen.add_argument("--c0", type=float)
    gen.add_argument("--c1", type=float)
    gen.add_argument("--degree", type=int, default=2)
    gen.add_argument("--table-degree", type=int)
    gen.add_argument("--constraint", action="append", help="polynomial JSON; repeatable")
    gen.set_defaults(func=cmd_gen)

    for name, func, helptext in [("check", cmd_check, "positivity certificate and QV scan"),
                                 ("qv", cmd_qv, "quadratic-variation scan only"),
                                 ("solve", cmd_solve, "construct a representing measure")]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("instance")
        p.set_defaults(func=func)
        if name == "solve":
            p.add_argument("--factorize", action="store_true")
            p.add_argument("--quantize", action="store_true")

    fac = sub.add_parser("factorize", parents=[common], help="scale/sign-walk pushforward")
    fac.add_argument("instance")
    fac.add_argument("--measure", help="atoms JSON (default: the instance's atomic functional)")
    fac.set_defaults(func=cmd_factorize)

    qz = sub.add_parser("quantize", parents=[common], help="lattice pushforward and error table")
    qz.add_argument("instance")
    qz.add_argument("--measure")
    qz.add_argument("--K", type=float)
    qz.add_argument("--h", type=float)
    qz.set_defaults(func=cmd_quantize)
    return parser


INPUT_ERRORS = (InputError, PolynomialParseError, DegreeExceeded, DegreeTooLarge,
                IncompatibleGrid, UnknownTime, SizeLimit, BandViolation, ValueError,
                KeyError, TypeError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
