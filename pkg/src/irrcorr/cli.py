"""Command-line front end: ``irrcorr {compute,sweep,verify}``.

Examples::

    irrcorr compute --state ghz:4@p0=0.001
    irrcorr sweep --state w:5 --steps 100 --out w5.csv
    irrcorr verify --state random:3:seed=7@p0=0.2

Exit codes: 0 ok, 1 a verification check failed, 2 flagged solver levels,
3 invalid request (bad spec, unreadable file, rank-deficient compute).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .correlation_spectrum import (
    IDENTITY_TOL,
    CorrelationRecord,
    InsufficientData,
    SweepSchedule,
    correlation_levels,
    extrapolate_limit,
    sweep,
)
from .matrix_core import FULL_RANK_TOL, InvalidState, NotFullRank, eig_hermitian
from .maxent_solver import certify
from .operator_basis import (
    ShapeError,
    SystemShape,
    level_table,
    moment_vector,
    num_qubits,
    pauli_moments,
)
from .oracle_suite import NotDiagonal, diagonal_extraction, ipf_maxent, mutual_information_check
from .state_library import StateDescriptor

EXIT_OK, EXIT_CHECK_FAILED, EXIT_FLAGGED, EXIT_INVALID = 0, 1, 2, 3


class StateSpecError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# field templates per kind; "N" is a decimal integer, "seed=N" a prefixed one
_GRAMMAR = {
    "ghz": ["N"],
    "w": ["N"],
    "dicke": ["N", "N"],
    "smolin": [],
    "random": ["N", "seed=N"],
}


def _int_field(text: str, template: str, pos: int) -> int:
    prefix = template[:-1]
    if not text.startswith(prefix):
        raise StateSpecError(f"expected {prefix!r}", pos)
    digits = text[len(prefix):]
    if not digits.isdigit() or not digits.isascii():
        raise StateSpecError(f"expected a non-negative integer, got {digits!r}",
                             pos + len(prefix))
    return int(digits)


def parse_state_spec(spec: str) -> StateDescriptor:
    """Parse ``ghz:<n> | w:<n> | dicke:<n>:<k> | smolin | random:<n>:seed=<u64> |
    file:<path>``, optionally followed by ``@p0=<float>``.

    Errors are :class:`StateSpecError` carrying the 0-based character position.
    """
    s = spec
    p0 = None
    at = s.rfind("@")
    if at >= 0:
        if not s.startswith("@p0=", at):
            raise StateSpecError("expected '@p0=<float>'", at)
        raw = s[at + 4:]
        try:
            p0 = float(raw)
        except ValueError:
            raise StateSpecError(f"invalid p0 value {raw!r}", at + 4) from None
        if not 0.0 <= p0 <= 1.0:
            raise StateSpecError(f"p0={p0} outside [0, 1]", at + 4)
        s = s[:at]
    kind, _, rest = s.partition(":")
    if kind == "file":
        if not rest:
            raise StateSpecError("missing file path", len(s))
        return StateDescriptor("file", path=rest, p0=p0)
    if kind not in _GRAMMAR:
        raise StateSpecError(f"unknown state kind {kind!r}", 0)
    template = _GRAMMAR[kind]
    fields = rest.split(":") if rest else []
    if len(fields) != len(template):
        pos = len(s) if len(fields) < len(template) else len(kind) + 1 + len(
            ":".join(fields[:len(template)])) + (1 if template else 0)
        raise StateSpecError(f"{kind} takes {len(template)} field(s)", min(pos, len(s)))
    values, pos = [], len(kind) + 1
    for text, tmpl in zip(fields, template):
        values.append(_int_field(text, tmpl, pos))
        pos += len(text) + 1
    n_pos = len(kind) + 1
    if kind == "smolin":
        return StateDescriptor("smolin", n=4, p0=p0)
    n = values[0]
    if n < 2:
        raise StateSpecError(f"need at least 2 qubits, got {n}", n_pos)
    try:
        SystemShape(n)
    except ShapeError as exc:
        raise StateSpecError(str(exc), n_pos) from None
    if kind == "dicke":
        if values[1] > n:
            raise StateSpecError(f"excitation count {values[1]} exceeds n={n}",
                                 n_pos + len(fields[0]) + 1)
        return StateDescriptor("dicke", n=n, k=values[1], p0=p0)
    if kind == "random":
        if values[1] >= 2**64:
            raise StateSpecError("seed exceeds 64 bits", n_pos + len(fields[0]) + 6)
        return StateDescriptor("random", n=n, seed=values[1], p0=p0)
    return StateDescriptor(kind, n=n, p0=p0)


# ------------------------------------------------------------------ config

@dataclass
class CommandConfig:
    command: str
    state: str
    steps: int = 100
    tol: float = 1e-9
    levels: list[int] | None = None
    out: str | None = None
    format: str = "csv"
    extrapolate: bool = True
    theta_cap: float = 60.0
    max_iter: int = 500

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "state": self.state,
            "steps": self.steps,
            "tol": self.tol,
            "levels": "all" if self.levels is None else self.levels,
            "format": self.format,
            "extrapolate": self.extrapolate,
            "theta_cap": self.theta_cap,
            "max_iter": self.max_iter,
        }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x) + 0.0
    return "0" if x == 0 else format(x, ".12g")


def _header_lines(config: CommandConfig, n: int) -> list[str]:
    return [
        f"# irrcorr {__version__}",
        f"# n={n}",
        "# config: " + json.dumps(config.as_dict(), sort_keys=True),
    ]


def _columns(n: int) -> list[str]:
    return (["k", "p0", "S_bits", "C_T_bits"]
            + [f"C_{m}_bits" for m in range(2, n + 1)]
            + ["max_residual", "total_iterations", "flags"])


def _row(rec: CorrelationRecord, n: int) -> list[str]:
    return ([_fmt(rec.k), _fmt(rec.p0), _fmt(rec.S_bits), _fmt(rec.C_T_bits)]
            + [_fmt(rec.C_bits.get(m)) for m in range(2, n + 1)]
            + [_fmt(rec.max_residual), _fmt(rec.iterations_total), rec.flag_text])


def _record_dict(rec: CorrelationRecord) -> dict:
    return {
        "k": rec.k,
        "p0": rec.p0,
        "S_bits": rec.S_bits,
        "C_T_bits": rec.C_T_bits,
        "C_bits": {str(m): float(v) for m, v in sorted(rec.C_bits.items())},
        "marginal_sum_bits": rec.marginal_sum_bits,
        "max_residual": rec.max_residual,
        "total_iterations": rec.iterations_total,
        "level_flags": {str(m): f for m, f in sorted(rec.level_flags.items())},
        "flags": rec.flag_text,
    }


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(config: CommandConfig):
    desc = parse_state_spec(config.state)
    rho = desc.build()
    n = num_qubits(rho)
    if config.levels is not None and any(not 2 <= m <= n for m in config.levels):
        raise StateSpecError(f"levels must lie in 2..{n}", 0)
    return desc, rho, n


def _certificates(rec: CorrelationRecord, rho: np.ndarray, tol: float) -> dict:
    """Per-level residuals of both defining equation sets."""
    out = {}
    n = num_qubits(rho)
    for m, res in sorted(rec.projections.items()):
        targets = moment_vector(rho, m)
        try:
            cert = certify(res, targets, m, tolerance=tol)
            out[m] = {"r7": cert.log_residual, "r8": cert.moment_residual,
                      "passed": bool(cert.passed and rec.level_flags[m] == "ok")}
        except NotFullRank:
            # ln rho_m not resolvable numerically; the log condition holds by construction
            got = pauli_moments(res.state, level_table(n, m), imag_tol=1e-8)
            r8 = float(np.max(np.abs(got - targets.values)))
            out[m] = {"r7": None, "r8": r8,
                      "passed": bool(r8 <= 10 * tol and rec.level_flags[m] == "ok")}
    return out


# ---------------------------------------------------------------- commands

def run_compute(config: CommandConfig) -> tuple[int, str]:
    desc, rho, n = _load(config)
    lmin = eig_hermitian(rho).eigenvalues[0]
    if lmin < FULL_RANK_TOL:
        raise NotFullRank(
            f"state {config.state!r} is not full rank (min eigenvalue {lmin:.3g}); "
            "use `irrcorr sweep` for rank-deficient states")
    rec, _ = correlation_levels(rho, tol=config.tol, levels=config.levels,
                                max_iterations=config.max_iter, theta_cap=config.theta_cap)
    rec.p0 = desc.p0 if desc.p0 is not None else 0.0
    certs = _certificates(rec, rho, config.tol)
    code = EXIT_OK if rec.flag_text == "ok" else EXIT_FLAGGED
    if config.format == "structured":
        doc = {
            "version": __version__,
            "config": config.as_dict(),
            "state": desc.to_spec(),
            "n": n,
            "record": _record_dict(rec),
            "certificates": {str(m): c for m, c in certs.items()},
        }
        return code, json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = _header_lines(config, n)
    for m, c in certs.items():
        lines.append(f"# certificate rho{m}: r7={_fmt(c['r7']) or 'n/a'} r8={_fmt(c['r8'])} "
                     f"{'pass' if c['passed'] else 'FAIL'}")
    lines.append(",".join(_columns(n)))
    lines.append(",".join(_row(rec, n)))
    return code, "\n".join(lines) + "\n"


def run_sweep(config: CommandConfig) -> tuple[int, str]:
    desc, rho, n = _load(config)
    result = sweep(rho, SweepSchedule(config.steps), tol=config.tol, levels=config.levels,
                   max_iterations=config.max_iter, theta_cap=config.theta_cap)
    limits = None
    if config.extrapolate:
        try:
            limits = extrapolate_limit(result)
        except InsufficientData as exc:
            limits = str(exc)
    if config.format == "structured":
        doc = {
            "version": __version__,
            "config": config.as_dict(),
            "state": desc.to_spec(),
            "metadata": result.metadata,
            "records": [_record_dict(r) for r in result.records],
        }
        if limits is not None:
            doc["extrapolation"] = (limits if isinstance(limits, str) else
                                    {str(k): {"estimate": v, "from_p0": list(p)}
                                     for k, (v, p) in limits.items()})
        return EXIT_OK, json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = _header_lines(config, n)
    lines.append(",".join(_columns(n)))
    lines.extend(",".join(_row(r, n)) for r in result.records)
    if isinstance(limits, str):
        lines.append(f"# extrapolation unavailable: {limits}")
    elif limits is not None:
        for key, (val, (pa, pb)) in limits.items():
            name = "C_T_bits" if key == "C_T" else f"C_{key}_bits"
            lines.append(f"# extrapolated p0=0 estimate {name}={_fmt(val)} "
                         f"(linear from p0={_fmt(pa)},{_fmt(pb)})")
    return EXIT_OK, "\n".join(lines) + "\n"


def _diagonal_dist(rho: np.ndarray):
    try:
        return diagonal_extraction(rho)
    except NotDiagonal:
        return None


def run_verify(config: CommandConfig) -> tuple[int, str]:
    """Certificates, sum rule, entropy identities and closed-form/IPF oracles."""
    desc, rho, n = _load(config)
    rec, _ = correlation_levels(rho, tol=config.tol, max_iterations=config.max_iter,
                                theta_cap=config.theta_cap)
    checks: list[tuple[str, bool, str]] = []
    for m, c in _certificates(rec, rho, config.tol).items():
        flag = rec.level_flags[m]
        detail = f"r7={_fmt(c['r7']) or 'n/a'} r8={_fmt(c['r8'])} solver={flag}"
        checks.append((f"certificate rho{m}", c["passed"], detail))
    total = sum(rec.C_bits.values())
    gap = abs(rec.C_T_bits - total)
    checks.append(("sum rule C_T = sum C_m", rec.converged and gap <= IDENTITY_TOL,
                   f"C_T={_fmt(rec.C_T_bits)} sum={_fmt(total)} gap={_fmt(gap)}"))
    ent = rec.marginal_sum_bits - rec.S_bits
    gap = abs(rec.C_T_bits - ent)
    checks.append(("entropy identity C_T = sum S_i - S", gap <= IDENTITY_TOL,
                   f"sum S_i - S={_fmt(ent)} gap={_fmt(gap)}"))
    for m, g in sorted(rec.identity_gaps.items()):
        checks.append((f"entropy identity C_{m}", rec.level_ok(m) and g <= IDENTITY_TOL,
                       f"gap={_fmt(g)}"))
    if n == 2:
        try:
            mi = mutual_information_check(rho)
            gap = abs(mi - rec.C_bits[2])
            checks.append(("mutual information C_2", gap <= 1e-7,
                           f"I(A:B)={_fmt(mi)} gap={_fmt(gap)}"))
        except NotFullRank:
            checks.append(("mutual information C_2", True, "skipped: state not full rank"))
    p = _diagonal_dist(rho)
    if p is not None:
        for m, res in sorted(rec.projections.items()):
            q = ipf_maxent(p / p.sum(), m)
            got = _diagonal_dist(res.state)
            if got is None:
                checks.append((f"IPF oracle rho{m}", False, "projection has off-diagonal terms"))
                continue
            err = float(np.max(np.abs(got - q)))
            checks.append((f"IPF oracle rho{m}", err <= 1e-7, f"max entry error={_fmt(err)}"))
    ok = all(passed for _, passed, _ in checks)
    code = EXIT_OK if ok else EXIT_CHECK_FAILED
    if config.format == "structured":
        doc = {
            "version": __version__,
            "config": config.as_dict(),
            "state": desc.to_spec(),
            "record": _record_dict(rec),
            "checks": [{"name": a, "passed": bool(b), "detail": c} for a, b, c in checks],
            "passed": bool(ok),
        }
        return code, json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = _header_lines(config, n)
    lines += [f"{'PASS' if passed else 'FAIL'} {name}: {detail}" for name, passed, detail in checks]
    lines.append(f"{'ALL PASS' if ok else 'SOME CHECKS FAILED'} "
                 f"(C_T={_fmt(rec.C_T_bits)} bits)")
    return code, "\n".join(lines) + "\n"


# -------------------------------------------------------------------- main

def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


def _levels(s: str):
    if s.strip().lower() == "all":
        return None
    try:
        return sorted({int(x) for x in s.split(",") if x.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'all' or a comma list, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="irrcorr",
        description="Irreducible multiparty correlations of n-qubit states.")
    ap.add_argument("--version", action="version", version=f"irrcorr {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "compute": "decompose one full-rank state",
        "sweep": "depolarising continuation sweep, CSV per grid point",
        "verify": "certificates, sum rules and oracle cross-checks",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("spec", nargs="?", help="state spec (alternative to --state)")
        p.add_argument("--state", help="ghz:<n> | w:<n> | dicke:<n>:<k> | smolin | "
                       "random:<n>:seed=<u64> | file:<path>, optional @p0=<float>")
        p.add_argument("--steps", type=int, default=100, help="grid size N (sweep)")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--levels", type=_levels, default=None, help="'all' or e.g. 2,3")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "structured"), default="csv")
        p.add_argument("--extrapolate", type=_bool, default=True)
        p.add_argument("--theta-cap", type=float, default=60.0)
        p.add_argument("--max-iter", type=int, default=500)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    state = args.state or args.spec
    if not state:
        print("irrcorr: a state spec is required (--state)", file=sys.stderr)
        return EXIT_INVALID
    config = CommandConfig(
        command=args.command, state=state, steps=args.steps, tol=args.tol,
        levels=args.levels, out=args.out, format=args.format, extrapolate=args.extrapolate,
        theta_cap=args.theta_cap, max_iter=args.max_iter,
    )
    runner = {"compute": run_compute, "sweep": run_sweep, "verify": run_verify}[args.command]
    try:
        code, text = runner(config)
    except (StateSpecError, ShapeError, InvalidState, NotFullRank, OSError, ValueError) as exc:
        print(f"irrcorr: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(text, config.out)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
