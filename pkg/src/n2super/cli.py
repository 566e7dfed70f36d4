"""Command-line entry point: JSON in, JSON out.

Exit codes: 0 success, 1 malformed input or flags, 2 domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable

from .derivations import BasisDerivation
from .errors import SuperAlgebraError
from .grassmann import GrassmannElement, gr_inv, gr_mul
from .moduli import (
    DEFAULT_WEIGHT,
    ESequences,
    ModuliData,
    SphereData,
    act_permutation,
    act_transpose_last,
    compose_infinity,
    compose_zero,
    e_hat,
    e_inverse,
    e_map,
    e_tilde,
    invert_data,
    sew,
)
from .nonhomo import HOMOGENEOUS, NonhomoPoint, NonhomoTriple, nh_check, nh_verify_table, to_homo, to_nonhomo
from .nsalgebra import ns_verify_representation
from .projective import (
    OspMatrix,
    ProjectiveParams,
    three_factor_closed_form,
    three_factor_compare,
    three_factor_default,
    three_factor_params,
    osp_check,
    osp_correspondence,
    pp_compose,
    pp_to_map,
)
from .superconformal import sc_check
from .superseries import AT_INFINITY, AT_ZERO, DEFAULT_ORDER, NumPoint, SuperPoint, ss_compose

MAX_GENS = 16


class InputError(Exception):
    """Malformed input; reported with exit code 1."""


def _field(data, key: str):
    if not isinstance(data, dict) or key not in data:
        raise InputError(f"input needs a {key!r} field")
    return data[key]


def _point_json(p: SuperPoint) -> dict:
    return {"frame": HOMOGENEOUS, **p.to_json()}


def _homogeneous(data) -> dict:
    if isinstance(data, dict) and data.get("frame", HOMOGENEOUS) != HOMOGENEOUS:
        raise InputError("expected a homogeneous-frame triple")
    return data


# ---------------------------------------------------------------------------
# subcommands: each takes (parsed JSON or None, args) and returns a JSON-ready value


def cmd_gr_mul(data, args):
    a = GrassmannElement.from_json(_field(data, "a"), args.gens)
    b = GrassmannElement.from_json(_field(data, "b"), args.gens)
    return {"result": gr_mul(a, b).to_json()}


def cmd_gr_inv(data, args):
    return {"result": gr_inv(GrassmannElement.from_json(_field(data, "a"), args.gens)).to_json()}


def cmd_ss_compose(data, args):
    outer = SuperPoint.from_json(_homogeneous(_field(data, "outer")), args.gens)
    inner = SuperPoint.from_json(_homogeneous(_field(data, "inner")), args.gens)
    return _point_json(ss_compose(outer, inner, args.order))


def cmd_sc_check(data, args):
    return sc_check(SuperPoint.from_json(_homogeneous(data), args.gens)).to_json()


def _moduli(data, args) -> ModuliData:
    return ModuliData.from_json(data, args.gens)


def cmd_e_map(data, args):
    return e_map(_moduli(data, args), args.weight).to_json()


def cmd_e_inv(data, args):
    return e_inverse(ESequences.from_json(data, args.gens), args.gens).to_json()


def cmd_e_tilde(data, args):
    return _point_json(e_tilde(_moduli(data, args), args.order))


def cmd_e_hat(data, args):
    return _point_json(e_hat(_moduli(data, args), args.order))


def _pair(data, args, cls):
    return cls.from_json(_field(data, "first"), args.gens), cls.from_json(_field(data, "second"), args.gens)


def cmd_compose_zero(data, args):
    return compose_zero(*_pair(data, args, ModuliData)).to_json()


def cmd_compose_inf(data, args):
    return compose_infinity(*_pair(data, args, ModuliData)).to_json()


def cmd_invert(data, args):
    return invert_data(_moduli(data, args)).to_json()


def cmd_sew(data, args):
    q1 = SphereData.from_json(_field(data, "q1"), args.gens)
    q2 = SphereData.from_json(_field(data, "q2"), args.gens)
    k = _field(data, "k")
    if not isinstance(k, int):
        raise InputError("k must be an integer")
    return sew(q1, k, q2).to_json()


def cmd_perm(data, args):
    sigma = _field(data, "sigma")
    if not isinstance(sigma, list) or not all(isinstance(v, int) for v in sigma):
        raise InputError("sigma must be a list of integers")
    return act_permutation(sigma, SphereData.from_json(_field(data, "sphere"), args.gens)).to_json()


def cmd_transpose_last(data, args):
    return act_transpose_last(SphereData.from_json(data, args.gens)).to_json()


def cmd_pp_map(data, args):
    kind = {None: AT_ZERO, "zero": AT_ZERO, "infinity": AT_INFINITY}.get(args.mode)
    if kind is None:
        raise InputError("pp-map --mode is 'zero' or 'infinity'")
    return _point_json(pp_to_map(ProjectiveParams.from_json(data, args.gens), args.order, kind))


def cmd_pp_compose(data, args):
    return pp_compose(*_pair(data, args, ProjectiveParams), args.order).to_json()


def cmd_pp_example71(data, args):
    if data is None:
        values = three_factor_default(args.gens)
    else:
        values = tuple(GrassmannElement.from_json(_field(data, k), args.gens) for k in ("A1", "Am1", "Mp", "Mm"))
    mode = args.mode or "compare"
    if mode == "compare":
        report = three_factor_compare(*values, order=args.order if args.order_given else 6)
        return {"equal": report.pop("equal"), "checks": report}
    if mode == "params":
        return three_factor_params(*values).to_json()
    if mode == "closed":
        return _point_json(three_factor_closed_form(*values).series(AT_ZERO, args.order))
    raise InputError("pp-example71 --mode is 'compare', 'params' or 'closed'")


def cmd_osp_check(data, args):
    if isinstance(data, dict) and "generator" in data:
        gen = data["generator"]
        if not isinstance(gen, dict):
            raise InputError("generator must be an object with family and j")
        try:
            m = osp_correspondence(BasisDerivation(gen["family"], gen["j"]), args.gens)
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad generator {gen!r}") from exc
    else:
        m = OspMatrix.from_json(data, args.gens)
    mode = args.mode or "algebra"
    if mode not in ("algebra", "group"):
        raise InputError("osp-check --mode is 'algebra' or 'group'")
    return osp_check(m, group_element=mode == "group").to_json()


def cmd_verify_ns(data, args):
    window = 4 if args.window is None else args.window
    report = ns_verify_representation(window)
    out = {"pass": report.passed, "pairs_checked": report.pairs_checked}
    if report.mismatches:
        out["mismatches"] = report.to_json()["mismatches"]
    return out


def cmd_verify_ns_nonhomo(data, args):
    window = 3 if args.window is None else args.window
    report = nh_verify_table(window)
    out = {"pass": report.passed, "pairs_checked": report.pairs_checked}
    if report.mismatches:
        out["mismatches"] = report.to_json()["mismatches"]
    return out


def cmd_to_nonhomo(data, args):
    reverse = args.mode == "reverse"
    if args.mode not in (None, "forward", "reverse"):
        raise InputError("to-nonhomo --mode is 'forward' or 'reverse'")
    if reverse:
        if isinstance(data, dict) and "point" in data:
            return {"frame": HOMOGENEOUS, "point": to_homo(NonhomoPoint.from_json(data, args.gens)).to_json()}
        return _point_json(to_homo(NonhomoTriple.from_json(data, args.gens)))
    if isinstance(data, list):
        return to_nonhomo(NumPoint.from_json(data, args.gens)).to_json()
    if isinstance(data, dict) and "point" in data:
        return to_nonhomo(NumPoint.from_json(_homogeneous(data)["point"], args.gens)).to_json()
    return to_nonhomo(SuperPoint.from_json(_homogeneous(data), args.gens)).to_json()


def cmd_nh_check(data, args):
    return nh_check(NonhomoTriple.from_json(data, args.gens)).to_json()


COMMANDS: dict[str, tuple[Callable, bool]] = {
    # name: (handler, needs input)
    "gr-mul": (cmd_gr_mul, True),
    "gr-inv": (cmd_gr_inv, True),
    "ss-compose": (cmd_ss_compose, True),
    "sc-check": (cmd_sc_check, True),
    "e-map": (cmd_e_map, True),
    "e-inv": (cmd_e_inv, True),
    "e-tilde": (cmd_e_tilde, True),
    "e-hat": (cmd_e_hat, True),
    "compose-zero": (cmd_compose_zero, True),
    "compose-inf": (cmd_compose_inf, True),
    "invert": (cmd_invert, True),
    "sew": (cmd_sew, True),
    "perm": (cmd_perm, True),
    "transpose-last": (cmd_transpose_last, True),
    "pp-map": (cmd_pp_map, True),
    "pp-compose": (cmd_pp_compose, True),
    "pp-example71": (cmd_pp_example71, False),
    "osp-check": (cmd_osp_check, True),
    "verify-ns": (cmd_verify_ns, False),
    "verify-ns-nonhomo": (cmd_verify_ns_nonhomo, False),
    "to-nonhomo": (cmd_to_nonhomo, True),
    "nh-check": (cmd_nh_check, True),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="n2super", description="Exact N=2 superconformal calculus with JSON I/O.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--gens", type=int, default=4, help="number of Grassmann generators L (default 4)")
    parser.add_argument("--order", type=int, default=None, help=f"series truncation N (default {DEFAULT_ORDER})")
    parser.add_argument("--weight", type=int, default=None, help=f"moduli weight W (default {DEFAULT_WEIGHT})")
    parser.add_argument("--window", type=int, default=None, help="index window for the verification suites")
    parser.add_argument("--mode", default=None, help="subcommand-specific mode")
    parser.add_argument("--in", dest="infile", default=None, help="input JSON file ('-' for stdin)")
    parser.add_argument("--json", dest="inline", default=None, help="inline input JSON")
    parser.add_argument("--out", dest="outfile", default=None, help="write the result here instead of stdout")
    return parser


def _validate(args) -> None:
    if not 0 <= args.gens <= MAX_GENS:
        raise InputError(f"--gens must lie in 0..{MAX_GENS}")
    args.order_given = args.order is not None
    if args.order is None:
        args.order = DEFAULT_ORDER
    if args.order < 0:
        raise InputError("--order must be nonnegative")
    if args.weight is None:
        args.weight = DEFAULT_WEIGHT
    if args.weight < 0:
        raise InputError("--weight must be nonnegative")
    if args.window is not None and args.window < 0:
        raise InputError("--window must be nonnegative")
    if args.infile is not None and args.inline is not None:
        raise InputError("give either --in or --json, not both")


def _read_input(args, required: bool):
    if args.inline is not None:
        text = args.inline
    elif args.infile == "-":
        text = sys.stdin.read()
    elif args.infile is not None:
        try:
            text = Path(args.infile).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.infile}: {exc.strerror}") from exc
    elif required:
        raise InputError("this subcommand needs input via --in or --json")
    else:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def _emit(payload, outfile: str | None, stream) -> None:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    if outfile is None:
        print(text, file=stream)
    else:
        Path(outfile).write_text(text + "\n")


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        handler, needs_input = COMMANDS[args.command]
        data = _read_input(args, needs_input)
    except InputError as exc:
        _emit({"error": "MalformedInput", "detail": str(exc)}, None, stdout)
        return 1
    try:
        result = handler(data, args)
    except SuperAlgebraError as exc:
        _emit({"error": exc.name, "detail": str(exc)}, None, stdout)
        return 2
    except (InputError, ValueError, KeyError, TypeError, IndexError) as exc:
        _emit({"error": "MalformedInput", "detail": str(exc)}, None, stdout)
        return 1
    try:
        _emit(result, args.outfile, stdout)
    except OSError as exc:
        _emit({"error": "MalformedInput", "detail": f"cannot write {args.outfile}: {exc.strerror}"}, None, stdout)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
