"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 invariant or precondition violation,
4 numeric inconsistency, 5 inadmissible HTO, 6 truncation too short,
7 no decision procedure, 8 dense size cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis, synthesis
from .channels import KrausChannel, minimal_kraus
from .errors import (
    ConsistencyError,
    ContractError,
    FormatError,
    InadmissibleHTO,
    InvariantError,
    NumericError,
    ResourceError,
    ShapeError,
    TruncationError,
    UnsupportedDecision,
)
from .formats import (
    decode_channel,
    decode_hermitian,
    decode_matrix,
    decode_realization,
    decode_state,
    dumps,
    encode_channel,
    encode_matrix,
    encode_realization,
    encode_report,
    load_json,
    write_atomic,
)
from .operators import HermitianOperator, Units, j_function
from .realizations import compute_hto
from .sampling import random_hermitian

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_NUMERIC = 0, 2, 3, 4
EXIT_INADMISSIBLE, EXIT_TRUNCATION, EXIT_UNSUPPORTED, EXIT_RESOURCE = 5, 6, 7, 8

DEFAULT_TOLS = {
    "lep": analysis.LEP_TOL,
    "delta": synthesis.DELTA_TOL,
    "boundary": analysis.BOUNDARY_TOL,
}


@dataclass
class RunConfig:
    command: str
    beta: float = 1.0
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    out: str | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ContractError(f"--beta must be positive, got {self.beta}")
        for name, val in self.tolerances.items():
            if not 0 < val <= DEFAULT_TOLS[name]:
                raise ContractError(
                    f"--tol-{name} {val!r} may only tighten the default {DEFAULT_TOLS[name]!r}")


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def _q(path) -> HermitianOperator:
    return decode_hermitian(load_json(path))


def _channel(path) -> KrausChannel:
    return minimal_kraus(decode_channel(load_json(path)))


# Subcommands


def cmd_hto_compute(args, cfg: RunConfig) -> dict:
    r = decode_realization(load_json(args.realization))
    rep = compute_hto(r)
    lep = analysis.check_lep(rep.channel, rep.hto, r.beta, args.starts, cfg.seed, cfg.tolerances["lep"])
    out = encode_report(rep)
    out["lep_min_slack"] = lep.min_slack
    return out


def _chain_report(chain) -> dict:
    return {"chain": chain.descriptor(), "achieved_q": encode_matrix(chain.achieved_q),
            "delta_target": chain.target_delta, "j_value": chain.j_value}


def cmd_erasure_synth(args, cfg: RunConfig) -> dict:
    q = _q(args.q)
    psi0 = None
    if args.pure:
        psi0 = decode_matrix(load_json(args.pure))
        if psi0.ndim == 2:
            w, v = np.linalg.eigh(psi0)
            if abs(w[-1] - 1) > 1e-10:
                raise ContractError("--pure state is not pure")
            psi0 = v[:, -1]
    chain = synthesis.synthesize_landauer(q, cfg.beta, psi0, args.length, args.tail_bound,
                                          closure=args.closure, delta_tol=cfg.tolerances["delta"])
    return _chain_report(chain)


def cmd_complete_erasure_synth(args, cfg: RunConfig) -> dict:
    chain = synthesis.synthesize_complete_erasure(
        _q(args.q), cfg.beta, decode_state(load_json(args.rho0)), args.M, args.N,
        args.tail_bound, delta_tol=cfg.tolerances["delta"])
    return _chain_report(chain)


def cmd_swap_case(args, cfg: RunConfig) -> dict:
    rho0 = decode_state(load_json(args.rho0))
    w = np.eye(rho0.dim) if args.w is None else decode_matrix(load_json(args.w))
    r = synthesis.swap_equality_case(rho0, w, cfg.beta)
    rep = compute_hto(r)
    return {"realization": encode_realization(r), "report": encode_report(rep)}


def cmd_decide(args, cfg: RunConfig) -> dict:
    needed = {"lep": ["channel"], "complete": ["rho0"], "extremal": ["channel"]}[args.kind]
    missing = [f"--{n}" for n in needed if getattr(args, n) is None]
    if missing:
        raise ContractError(f"decide {args.kind} needs {', '.join(missing)}")
    if args.kind == "lep":
        lep = analysis.check_lep(_channel(args.channel), _q(args.q), cfg.beta, args.starts, cfg.seed,
                                 cfg.tolerances["lep"])
        return {"verdict": lep.verdict, "min_slack": lep.min_slack, "argmin": encode_matrix(lep.argmin)}
    if args.kind == "complete":
        v = analysis.decide_complete_erasure_hto(_q(args.q), cfg.beta, decode_state(load_json(args.rho0)),
                                                 cfg.tolerances["boundary"])
    else:
        v = analysis.decide_extremal_hto(_q(args.q), _channel(args.channel), cfg.beta)
    return {"verdict": v.verdict, "certificate": v.certificate}


def cmd_extract_q(args, cfg: RunConfig) -> dict:
    hm = analysis.extract_heat_matrix(_q(args.q), _channel(args.channel))
    return {"q": encode_matrix(hm.q), "n": hm.n, "residual": hm.residual, "unique": hm.unique}


def cmd_widen_q(args, cfg: RunConfig) -> dict:
    q = analysis.HeatTransferMatrix(decode_matrix(load_json(args.qmat)), 0.0)
    s = decode_matrix(load_json(args.s))
    widened, cert = analysis.widen_heat_matrix(q, s, cfg.beta)
    verdict = analysis.decide_by_certificate(widened, cert, cfg.beta)
    return {"q_widened": encode_matrix(widened.q), "verdict": verdict.verdict,
            "certificate": {"t": cert.t, "weights": cert.weights, "trace_exps": cert.trace_exps,
                            "components": [encode_matrix(c) for c in cert.components]}}


def study_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=analysis.STUDY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def cmd_study_et(args, cfg: RunConfig) -> str:
    x = np.array([[0, 1], [0, 0]], dtype=complex) if args.x is None else decode_matrix(load_json(args.x))
    grid = [float(t) for t in args.t_grid.split(",") if t.strip()]
    return study_csv(analysis.et_family_study(x, grid, cfg.beta, args.starts, cfg.seed))


def cmd_oracle_check(args, cfg: RunConfig) -> dict:
    if args.q:
        q = _q(args.q)
    else:
        # random admissible q with J(beta q) = 3
        h = random_hermitian(args.dim, cfg.seed)
        j = j_function(HermitianOperator(cfg.beta * h, Units.DIMENSIONLESS))
        q = HermitianOperator(h + (3.0 - j) / cfg.beta * np.eye(args.dim))
    if args.rho0:
        chain = synthesis.synthesize_complete_erasure(q, cfg.beta, decode_state(load_json(args.rho0)),
                                                      args.M, args.length, args.tail_bound)
    else:
        chain = synthesis.synthesize_landauer(q, cfg.beta, None, args.length, args.tail_bound,
                                              closure=args.closure)
    rep = synthesis.dense_oracle_check(chain, seed=cfg.seed)
    out = {"passed": rep.passed, "heat_deviation": rep.heat_deviation, "hto_deviation": rep.hto_deviation,
           "channel_distance": rep.channel_distance, "channel_bound": rep.channel_bound,
           "joint_dim": rep.joint_dim, "chain": chain.descriptor()}
    if not rep.passed:
        raise ConsistencyError("dense oracle disagrees with structured accounting: " + dumps(out))
    return out


# Parser


def _add_global_options(p: argparse.ArgumentParser) -> None:
    suppress = p.argument_default is argparse.SUPPRESS
    default = lambda v: argparse.SUPPRESS if suppress else v
    p.add_argument("--beta", type=float, default=default(1.0), help="inverse temperature (default 1)")
    p.add_argument("--seed", type=int, default=default(0))
    p.add_argument("--out", default=default(None), help="output path (default stdout); written atomically")
    for name, val in DEFAULT_TOLS.items():
        p.add_argument(f"--tol-{name}", type=float, default=default(val), help=f"default {val:g}; may only tighten")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qheat", description="Heat transfer operators of quantum operations.")
    _add_global_options(p)
    # the same options after the subcommand; SUPPRESS keeps the top-level values unless given again
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    _add_global_options(common)
    sub = p.add_subparsers(dest="command", required=True)
    command = lambda name, **kw: sub.add_parser(name, parents=[common], **kw)

    s = command("hto-compute", help="HTO, channel and LEP slack of a realization bundle")
    s.add_argument("realization")
    s.add_argument("--starts", type=int, default=32)
    s.set_defaults(func=cmd_hto_compute)

    s = command("erasure-synth", help="chain realization of a Landauer erasure")
    s.add_argument("q")
    s.add_argument("--pure", help="target pure state (vector or projector file); default |0>")
    s.add_argument("--length", "-N", type=int, default=30)
    s.add_argument("--tail-bound", type=float, default=synthesis.DEFAULT_TAIL)
    s.add_argument("--closure", choices=["cyclic", "open"], default="cyclic")
    s.set_defaults(func=cmd_erasure_synth)

    s = command("complete-erasure-synth", help="two-chain realization of erasure to rho0")
    s.add_argument("q")
    s.add_argument("rho0")
    s.add_argument("-M", type=int, default=20)
    s.add_argument("-N", type=int, default=20)
    s.add_argument("--tail-bound", type=float, default=synthesis.DEFAULT_TAIL)
    s.set_defaults(func=cmd_complete_erasure_synth)

    s = command("swap-case", help="swap realization for the boundary case")
    s.add_argument("rho0")
    s.add_argument("--w", help="unitary applied before the swap")
    s.set_defaults(func=cmd_swap_case)

    s = command("decide", help="admissibility decisions")
    s.add_argument("kind", choices=["lep", "complete", "extremal"])
    s.add_argument("--q", required=True)
    s.add_argument("--channel")
    s.add_argument("--rho0")
    s.add_argument("--starts", type=int, default=32)
    s.set_defaults(func=cmd_decide)

    s = command("extract-q", help="heat transfer matrix of Q for a channel")
    s.add_argument("--q", required=True)
    s.add_argument("--channel", required=True)
    s.set_defaults(func=cmd_extract_q)

    s = command("widen-q", help="widen an admissible heat matrix by s > 0")
    s.add_argument("--qmat", required=True)
    s.add_argument("--s", required=True)
    s.set_defaults(func=cmd_widen_q)

    s = command("study-et", help="entropy-drop versus extremal-floor table for E_t")
    s.add_argument("--x", help="operator X (default |0><1|)")
    s.add_argument("--t-grid", default="0.5,0.1,0.01")
    s.add_argument("--starts", type=int, default=32)
    s.set_defaults(func=cmd_study_et)

    s = command("oracle-check", help="structured versus dense accounting on a small chain")
    s.add_argument("--q")
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--rho0")
    s.add_argument("--length", "-N", type=int, default=3)
    s.add_argument("-M", type=int, default=2)
    s.add_argument("--tail-bound", type=float, default=1e-3)
    s.add_argument("--closure", choices=["cyclic", "open"], default="cyclic")
    s.set_defaults(func=cmd_oracle_check)
    return p


def _exit_code(exc: Exception) -> int:
    # order matters: subclasses first
    for kinds, code in (
        ((FormatError,), EXIT_PARSE),
        ((TruncationError,), EXIT_TRUNCATION),
        ((InadmissibleHTO,), EXIT_INADMISSIBLE),
        ((UnsupportedDecision,), EXIT_UNSUPPORTED),
        ((ResourceError,), EXIT_RESOURCE),
        ((ConsistencyError, NumericError), EXIT_NUMERIC),
        ((InvariantError, ShapeError, ContractError), EXIT_INVARIANT),
    ):
        if isinstance(exc, kinds):
            return code
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        cfg = RunConfig(args.command, args.beta, args.seed,
                        {k: getattr(args, f"tol_{k}") for k in DEFAULT_TOLS}, args.out)
        result = args.func(args, cfg)
        _emit(cfg, result if isinstance(result, str) else dumps(result))
    except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
        code = _exit_code(exc)
        msg = f"qheat {args.command}: {type(exc).__name__}: {exc}"
        if getattr(exc, "j_value", None) is not None:
            msg += f" [J = {exc.j_value!r}]"
        if getattr(exc, "suggested_length", None) is not None:
            msg += f" [try chain length >= {exc.suggested_length}]"
        print(msg, file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
