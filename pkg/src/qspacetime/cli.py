"""Command-line front end.

Exit codes: 0 success, 1 model-level failure, 2 usage or parse failure.

Model files are JSON objects with ``"schema_version": "1"`` and a ``kind``:

``harmonic``
    ``alpha`` (3 complex numbers), optional ``wire_dim`` (default 2),
    ``e3_dim`` (default 1) and ``psi`` (complex vector on ``x, y, e3``).
``clean_general``
    ``labels`` (list of ``[name, dim]``), ``amplitudes`` and ``branches``
    (each ``{"relation": "A->B" | "A<-B" | "A-B", "vector": [...]}``).
``partial_swap``
    ``p``, optional ``wire_dim``, optional ``rho`` (state on ``a1, a1'``)
    and ``channel`` ``{"from": "a2", "to": "a2'", "kraus": [...]}``.
``sectored``
    ``probabilities`` (3x3 exact fractions as strings, or lists of strings
    that are summed) or ``amplitudes`` (3x3 complex), optional ``dims``.

Complex numbers are ``[re, im]`` pairs or plain reals.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import (
    DIRECTIONS,
    CapacityCurve,
    curves_to_csv,
    eps_grid,
    fit_harmonic,
    invert_capacity_curves,
    q_ent,
    q_ent_closed_form,
    read_curves_csv,
)
from .clean_models import (
    CleanBranch,
    HarmonicCleanModel,
    PartialSwapModel,
    build_clean_general,
    build_harmonic_reduced,
    build_partial_swap,
    trace_gravity,
)
from .closeness import NORMALIZATION_NOTE, ClosenessCriterion, are_close
from .errors import DimError, ModelClassError, ModelError
from .process_core import ProcessMatrix, validate_process
from .sectors import SECTORS, SectoredAmplitudes, build_sectored_noninteracting, reduce_sector
from .tendency import TendencyThresholds, classify, leakage_report
from .tensor_core import LabeledVector

SCHEMA_VERSION = "1"
KINDS = ("harmonic", "clean_general", "partial_swap", "sectored")


class ParseError(Exception):
    """Malformed input file; reported with exit code 2."""


# -- model files ---------------------------------------------------------------

def _complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ParseError(f"{where}: expected a number or [re, im], got {value!r}")


def _complex_list(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ParseError(f"{where}: expected a non-empty list")
    return np.array([_complex(v, f"{where}[{k}]") for k, v in enumerate(value)])


def _complex_matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ParseError(f"{where}: expected a list of rows")
    rows = [_complex_list(r, f"{where}[{k}]") for k, r in enumerate(value)]
    if len({len(r) for r in rows}) != 1:
        raise ParseError(f"{where}: rows have different lengths")
    return np.array(rows)


def _fraction(value, where: str) -> Fraction:
    if isinstance(value, list):
        if not value:
            raise ParseError(f"{where}: empty list of fractions")
        return sum((_fraction(v, f"{where}[{k}]") for k, v in enumerate(value)), Fraction(0))
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ParseError(f"{where}: expected an exact fraction string such as \"1/3\", got {value!r}")


def _int(data: dict, key: str, default: int) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParseError(f"{key}: expected a positive integer, got {value!r}")
    return value


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a real number, got {value!r}")
    return float(value)


def _require(data: dict, key: str):
    if key not in data:
        raise ParseError(f"missing field {key!r}")
    return data[key]


def load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


class Model:
    """A parsed model file and its processes."""

    def __init__(self, kind: str, obj, process: ProcessMatrix):
        self.kind = kind
        self.obj = obj
        self.process = process

    @property
    def bipartite(self) -> ProcessMatrix:
        if self.kind == "clean_general":
            return trace_gravity(self.process)
        return self.process


def parse_model(data: dict, source: str = "model") -> Model:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"{source}: schema_version must be \"{SCHEMA_VERSION}\", got {version!r}")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ParseError(f"{source}: kind must be one of {', '.join(KINDS)}, got {kind!r}")
    try:
        return _PARSERS[kind](data)
    except ParseError as exc:
        raise ParseError(f"{source}: {exc}") from None


def _parse_harmonic(data: dict) -> Model:
    alpha = _complex_list(_require(data, "alpha"), "alpha")
    d = _int(data, "wire_dim", 2)
    e3 = _int(data, "e3_dim", 1)
    psi = None
    if "psi" in data:
        vec = _complex_list(data["psi"], "psi")
        psi = LabeledVector([("x", d), ("y", d), ("e3", e3)], vec) if vec.size == d * d * e3 else vec
        if not isinstance(psi, LabeledVector):
            raise ParseError(f"psi: expected {d * d * e3} entries, got {vec.size}")
    model = HarmonicCleanModel(alpha, d, e3, psi)
    return Model("harmonic", model, build_harmonic_reduced(model))


def _parse_clean_general(data: dict) -> Model:
    labels_raw = _require(data, "labels")
    if not isinstance(labels_raw, list):
        raise ParseError("labels: expected a list of [name, dim]")
    labels = []
    for k, lab in enumerate(labels_raw):
        if not (isinstance(lab, list) and len(lab) == 2 and isinstance(lab[0], str) and isinstance(lab[1], int)):
            raise ParseError(f"labels[{k}]: expected [name, dim], got {lab!r}")
        labels.append((lab[0], lab[1]))
    amps = _complex_list(_require(data, "amplitudes"), "amplitudes")
    branches_raw = _require(data, "branches")
    if not isinstance(branches_raw, list):
        raise ParseError("branches: expected a list")
    branches = []
    for k, b in enumerate(branches_raw):
        if not isinstance(b, dict):
            raise ParseError(f"branches[{k}]: expected an object")
        vec = _complex_list(_require(b, "vector"), f"branches[{k}].vector")
        try:
            branches.append(CleanBranch(LabeledVector(labels, vec), _require(b, "relation")))
        except ValueError as exc:
            if isinstance(exc, ModelError):
                raise
            raise ParseError(f"branches[{k}]: {exc}") from None
    return Model("clean_general", None, build_clean_general(amps, branches))


def _parse_partial_swap(data: dict) -> Model:
    p = _real(_require(data, "p"), "p")
    d = _int(data, "wire_dim", 2)
    rho = _complex_matrix(data["rho"], "rho") if "rho" in data else None
    channel = _require(data, "channel")
    if not isinstance(channel, dict):
        raise ParseError("channel: expected an object")
    if channel.get("from") != "a2" or channel.get("to") != "a2'":
        raise ParseError("channel: the wiring must be declared as \"from\": \"a2\", \"to\": \"a2'\"")
    kraus = None
    if "kraus" in channel:
        if not isinstance(channel["kraus"], list) or not channel["kraus"]:
            raise ParseError("channel.kraus: expected a non-empty list of matrices")
        kraus = tuple(_complex_matrix(k, f"channel.kraus[{i}]") for i, k in enumerate(channel["kraus"]))
    if not 0 <= p <= 1:
        raise ModelError(f"swap weight p must lie in [0, 1], got {p!r}")
    model = PartialSwapModel(p, d, rho, kraus)
    return Model("partial_swap", model, build_partial_swap(model))


def _parse_sectored(data: dict) -> Model:
    dims_raw = data.get("dims", [2, 2])
    if not (isinstance(dims_raw, list) and len(dims_raw) == 2 and all(isinstance(x, int) and x >= 1 for x in dims_raw)):
        raise ParseError(f"dims: expected [massless_dim, massive_dim], got {dims_raw!r}")
    if ("probabilities" in data) == ("amplitudes" in data):
        raise ParseError("give exactly one of probabilities or amplitudes")
    if "probabilities" in data:
        raw = data["probabilities"]
        if not (isinstance(raw, list) and len(raw) == 3 and all(isinstance(r, list) and len(r) == 3 for r in raw)):
            raise ParseError("probabilities: expected a 3x3 array")
        probs = [[_fraction(v, f"probabilities[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(raw)]
        amps = SectoredAmplitudes.from_probabilities(probs)
    else:
        mat = _complex_matrix(data["amplitudes"], "amplitudes")
        if mat.shape != (3, 3):
            raise ParseError(f"amplitudes: expected a 3x3 array, got {mat.shape}")
        amps = SectoredAmplitudes(mat)
    return Model("sectored", amps, build_sectored_noninteracting(amps, dims=tuple(dims_raw)))


_PARSERS = {
    "harmonic": _parse_harmonic,
    "clean_general": _parse_clean_general,
    "partial_swap": _parse_partial_swap,
    "sectored": _parse_sectored,
}


def load_model(path: str) -> Model:
    return parse_model(load_json(path), path)


# -- commands ------------------------------------------------------------------

def _bool(x: bool) -> str:
    return "true" if x else "false"


def _emit(lines) -> None:
    sys.stdout.write("".join(line + "\n" for line in lines))


def cmd_validate(args) -> int:
    model = load_model(args.file)
    report = validate_process(model.process)
    _emit([f"kind: {model.kind}"] + report.lines())
    return 0 if report.valid else 1


def _parse_grid(text: str) -> list[Fraction]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"--eps-grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (Fraction(p.strip()) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"--eps-grid has a malformed number: {text!r}") from None
    if not (0 <= start <= stop <= 1) or step <= 0:
        raise ParseError("--eps-grid needs 0 <= start <= stop <= 1 and step > 0")
    return eps_grid(start, stop, step)


def _capacity_process(model: Model, sector: str | None) -> ProcessMatrix:
    if model.kind == "sectored":
        if sector is None:
            raise ParseError("sectored models need --sector massless or --sector massive")
        return reduce_sector(model.process, sector)
    if sector is not None:
        raise ParseError("--sector applies to sectored models only")
    return model.bipartite


def cmd_capacity(args) -> int:
    model = load_model(args.file)
    grid = _parse_grid(args.eps_grid)
    directions = DIRECTIONS if args.direction == "both" else (args.direction,)
    w = _capacity_process(model, args.sector)
    curves = []
    if model.kind == "harmonic":
        m = model.obj
        for k, direction in enumerate(directions):
            p = float(m.p[DIRECTIONS.index(direction)])
            curves.append(CapacityCurve(direction, tuple((float(e), q_ent_closed_form(p, e, m.wire_dim)) for e in grid)))
    else:
        try:
            fit_harmonic(w)
        except ModelClassError as exc:
            if not args.oracle:
                raise ModelClassError(
                    f"{exc}; no closed form applies. Pass --oracle to use the probe-fidelity staircase"
                ) from None
        for direction in directions:
            curves.append(
                CapacityCurve(direction, tuple((float(e), q_ent(w, direction, e, oracle=args.oracle).bits) for e in grid))
            )
    text = curves_to_csv(curves)
    if args.out:
        Path(args.out).write_text(text)
        _emit([f"wrote {sum(len(c.points) for c in curves)} rows to {args.out}"])
    else:
        sys.stdout.write(text)
    return 0


def _sectored(model: Model, command: str) -> None:
    if model.kind != "sectored":
        raise ModelClassError(f"{command} needs a sectored model, got kind {model.kind!r}")


def cmd_typicality(args) -> int:
    model = load_model(args.file)
    _sectored(model, "typicality")
    verdict = classify(model.obj, args.condition, TendencyThresholds(args.theta, args.kappa))
    _emit(verdict.lines())
    return 0


def load_criterion(path: str | None) -> ClosenessCriterion:
    if path is None:
        return ClosenessCriterion()
    data = load_json(path)
    kwargs = {}
    for key in ("eps_forward", "eps_backward"):
        if key in data:
            if not isinstance(data[key], list):
                raise ParseError(f"{path}: {key} must be a list of numbers")
            kwargs[key] = tuple(_real(v, f"{key}[{k}]") for k, v in enumerate(data[key]))
    for key in ("d_forward", "d_backward"):
        if key in data:
            raw = data[key]
            if isinstance(raw, dict):
                try:
                    kwargs[key] = {float(k): _real(v, f"{key}.{k}") for k, v in raw.items()}
                except ValueError:
                    raise ParseError(f"{path}: {key} keys must be numbers") from None
            else:
                kwargs[key] = _real(raw, key)
    unknown = set(data) - {"eps_forward", "eps_backward", "d_forward", "d_backward"}
    if unknown:
        raise ParseError(f"{path}: unknown criterion fields {sorted(unknown)}")
    return ClosenessCriterion(**kwargs)


def cmd_compare(args) -> int:
    a, b = load_model(args.file_a), load_model(args.file_b)
    criterion = load_criterion(args.criterion)
    if args.sector is not None and not (a.kind == b.kind == "sectored"):
        raise ParseError("--sector applies to sectored models only")
    try:
        report = are_close(a.bipartite, b.bipartite, criterion, sector=args.sector)
    except DimError as exc:
        _emit([f"error: {exc}", "close: false"])
        return 1
    _emit(report.lines())
    return 0 if report.close else 1


def cmd_invert(args) -> int:
    curves = {}
    for path, direction in ((args.csv_forward, "forward"), (args.csv_backward, "backward")):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"{path}: {exc.strerror}") from None
        found = read_curves_csv(text)
        if direction not in found:
            raise ModelError(f"{path}: no {direction} rows")
        curves[direction] = found[direction]
    result = invert_capacity_curves(curves["forward"], curves["backward"])
    _emit(result.lines())
    return 0


def cmd_leakage(args) -> int:
    model = load_model(args.file)
    _sectored(model, "leakage")
    _emit(leakage_report(model.process, args.eps).lines())
    return 0


# -- entry point ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qspacetime", description="Process-matrix models of quantum causal structure.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check positivity, trace and signalling of a model")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("capacity", help="one-shot entanglement capacity curve as CSV")
    p.add_argument("file")
    p.add_argument("--direction", choices=("forward", "backward", "both"), default="both")
    p.add_argument("--eps-grid", default="0:0.75:0.05", metavar="START:STOP:STEP")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.add_argument("--oracle", action="store_true", help="allow the probe-fidelity staircase for non-harmonic models")
    p.add_argument("--sector", choices=SECTORS, help="sector of a sectored model")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("typicality", help="tendency-postulate verdict for a sectored model")
    p.add_argument("file")
    p.add_argument("--condition", choices=("V", "VS", "S", "VorS"), default="V")
    p.add_argument("--theta", type=float, default=TendencyThresholds().theta_connect)
    p.add_argument("--kappa", type=float, default=TendencyThresholds().kappa_comparable)
    p.set_defaults(func=cmd_typicality)

    p = sub.add_parser("compare", help="capacity-based closeness of two models")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--criterion", help="JSON file with eps_forward, eps_backward, d_forward, d_backward")
    p.add_argument("--sector", choices=SECTORS)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("invert", help="recover |alpha| and dimensions from capacity curves")
    p.add_argument("csv_forward")
    p.add_argument("csv_backward")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("leakage", help="per-sector capacities and the superluminal verdict")
    p.add_argument("file")
    p.add_argument("--eps", type=float, default=0.1)
    p.set_defaults(func=cmd_leakage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return 2
    except ModelError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        if isinstance(exc, DimError) and args.command == "compare":
            sys.stderr.write(f"note: {NORMALIZATION_NOTE}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
