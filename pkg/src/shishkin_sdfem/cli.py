"""Convergence studies from the command line.

A study runs the streamline-diffusion solver on a manufactured benchmark for
every ``(eps, N)`` pair and collects interpolation errors, energy errors,
nodal errors and, when a probe point is given, the discrete Green's function
quantities.  Settings come from an optional ``key=value`` file, overridden by
flags::

    shishkin-study --epsilon 1e-6 --n-list 24,48,96 --green-node 0.5,0.5

Config keys: ``epsilon``, ``n_list``, ``b``, ``c``, ``beta``, ``rho``,
``c_star``, ``quad_order``, ``benchmark``, ``green_node`` (``x,y`` or
``none``), ``green_k``, ``green_K``, ``out``, ``format``.  Lists are
comma-separated; ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .fem import LayerAdaptedRule, SolverError, assemble, interpolate, make_stabilization, solve
from .green import GreenConfig, error_split_terms, node_nearest, solve_green
from .mesh import InvalidConfigError, MeshConfig, build_mesh
from .norms import energy_norm, fit_rate, interp_error_table, nodal_max_error
from .problem import BENCHMARKS, CoefficientSet, make_benchmark

__all__ = [
    "StudySpec",
    "StudyRow",
    "ConvergenceTable",
    "run_study",
    "emit",
    "check_table",
    "parse_config",
    "main",
    "METRICS",
]

log = logging.getLogger(__name__)

METRICS = (
    "interp_inf_omega_s",
    "interp_inf_rest",
    "energy_uI_U",
    "nodal_inf_s1",
    "green_energy_sq",
    "term1_eps_delta",
    "term2_BeG",
)
HEADER = ("eps", "N") + METRICS + tuple(f"rate_{m}" for m in METRICS)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


@dataclass(frozen=True)
class StudySpec:
    """Everything that determines a study's output."""

    epsilons: tuple[float, ...] = (1e-6,)
    n_list: tuple[int, ...] = (24, 48, 96)
    b: float = 1.0
    c: float = 1.0
    beta: float | None = None
    rho: float = 2.5
    c_star: float = 1.0
    quad_order: int = 3
    benchmark: str = "plain"
    green_node: tuple[float, float] | None = (0.5, 0.5)
    green_k: float = 2.0
    green_K: float = 2.0
    out: str | None = None
    format: str = "csv"

    def validate(self) -> None:
        if not self.epsilons:
            raise InvalidConfigError("epsilon list is empty")
        if not self.n_list:
            raise InvalidConfigError("N list is empty")
        for N in self.n_list:
            MeshConfig(N, 0.5, rho=self.rho)
        for eps in self.epsilons:
            CoefficientSet(eps, self.b, self.c, self.beta)
        if self.benchmark not in BENCHMARKS:
            raise InvalidConfigError(f"unknown benchmark {self.benchmark!r}")
        if self.format not in ("csv", "markdown"):
            raise InvalidConfigError(f"unknown format {self.format!r}")
        if self.quad_order < 2:
            raise InvalidConfigError("quad_order must be at least 2")
        if self.green_node is not None:
            x, y = self.green_node
            if not (0 < x < 1 and 0 < y < 1):
                raise InvalidConfigError(f"green_node {self.green_node} must lie inside the unit square")
            GreenConfig((1, 1), self.green_k, self.green_K)


@dataclass(frozen=True)
class StudyRow:
    eps: float
    N: int
    values: dict
    identity_defect: float | None = None


@dataclass
class ConvergenceTable:
    spec: StudySpec
    rows: list[StudyRow] = field(default_factory=list)

    def epsilons(self) -> list[float]:
        return sorted({r.eps for r in self.rows}, reverse=True)

    def rows_for(self, eps: float) -> list[StudyRow]:
        return sorted((r for r in self.rows if r.eps == eps), key=lambda r: r.N)

    def rates(self, eps: float, ln_power: float = 0) -> dict:
        """Least-squares rate of every metric across the rows sharing ``eps``."""
        rows = self.rows_for(eps)
        out = {}
        for m in METRICS:
            pairs = [(r.N, abs(r.values[m])) for r in rows if r.values.get(m) is not None]
            if len(pairs) >= 2 and all(v > 0 and math.isfinite(v) for _, v in pairs):
                out[m] = fit_rate(pairs, ln_power)
            else:
                out[m] = None
        return out


def run_case(spec: StudySpec, eps: float, N: int) -> StudyRow:
    mesh = build_mesh(MeshConfig(N, eps, beta=spec.beta or spec.b, rho=spec.rho))
    coeffs = CoefficientSet(eps, spec.b, spec.c, spec.beta)
    problem = make_benchmark(coeffs, spec.benchmark)
    stab = make_stabilization(mesh, coeffs, spec.c_star)
    rule = LayerAdaptedRule(spec.quad_order)
    system = assemble(mesh, coeffs, stab, problem.f, "sdfem", rule)
    U = solve(system)
    uI = interpolate(mesh, problem.u)
    on_s, rest = interp_error_table(problem, mesh)
    values = {
        "interp_inf_omega_s": on_s.value,
        "interp_inf_rest": rest.value,
        "energy_uI_U": energy_norm(mesh, coeffs, stab, uI - U),
        "nodal_inf_s1": nodal_max_error(mesh, U, problem.u),
        "green_energy_sq": None,
        "term1_eps_delta": None,
        "term2_BeG": None,
    }
    defect = None
    if spec.green_node is not None:
        node = node_nearest(mesh, *spec.green_node)
        gfield = solve_green(mesh, coeffs, stab, GreenConfig(node, spec.green_k, spec.green_K), system)
        split = error_split_terms(problem, mesh, coeffs, stab, U, gfield, rule)
        values["green_energy_sq"] = gfield.energy_sq()
        values["term1_eps_delta"] = split.term1
        values["term2_BeG"] = split.term2
        defect = split.defect
    return StudyRow(eps=eps, N=N, values=values, identity_defect=defect)


def run_study(spec: StudySpec) -> ConvergenceTable:
    """Run every ``(eps, N)`` case; rows come out ordered by eps (descending) then N."""
    spec.validate()
    table = ConvergenceTable(spec)
    for eps in sorted(set(spec.epsilons), reverse=True):
        for N in sorted(set(spec.n_list)):
            log.info("case eps=%g N=%d", eps, N)
            try:
                table.rows.append(run_case(spec, eps, N))
            except (SolverError, InvalidConfigError, ValueError) as exc:
                raise type(exc)(f"eps={eps:g}, N={N}: {exc}") from exc
    return table


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{value:.10g}"


def _records(table: ConvergenceTable) -> list[list[str]]:
    records = []
    for eps in table.epsilons():
        rows = table.rows_for(eps)
        prev = None
        for row in rows:
            local = {}
            for m in METRICS:
                a = prev.values.get(m) if prev else None
                b = row.values.get(m)
                if a and b and a * b > 0:
                    local[m] = math.log(abs(a / b)) / math.log(row.N / prev.N)
                else:
                    local[m] = None
            records.append([_fmt(eps), _fmt(row.N)] + [_fmt(row.values.get(m)) for m in METRICS]
                           + [_fmt(local[m]) for m in METRICS])
            prev = row
        rates = table.rates(eps)
        records.append([_fmt(eps), "rate"] + [""] * len(METRICS) + [_fmt(rates[m]) for m in METRICS])
    return records


def emit(table: ConvergenceTable, format: str = "csv") -> str:
    """Render the table.

    Data rows carry the measured values and, in the ``rate_*`` columns, the
    rate against the previous ``N`` of the same eps.  Each eps block ends with
    a row whose ``N`` is ``rate`` holding the least-squares rates.
    """
    if not table.rows:
        raise ValueError("cannot emit an empty table")
    records = _records(table)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(records)
        return buf.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(HEADER) + " |", "|" + "---|" * len(HEADER)]
        lines += ["| " + " | ".join(r) + " |" for r in records]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}; use 'csv' or 'markdown'")


def check_table(table: ConvergenceTable) -> list[str]:
    """Failures of the standard convergence checks (empty list when all pass).

    Per eps with at least two N: the energy error decreases; the rate of the
    interpolation error on Omega_s is at least 1.75, and off Omega_s at least
    1.75 after dividing by ln^2 N; the nodal error on Omega_s and Omega_1 has
    rate at least 1.75 after dividing by ln^3 N.  With a probe the two error
    terms add up to the nodal error within 1e-8.
    """
    failures = []
    for eps in table.epsilons():
        rows = table.rows_for(eps)
        for row in rows:
            if row.identity_defect is not None and row.identity_defect > 1e-8:
                failures.append(f"eps={eps:g} N={row.N}: error identity defect {row.identity_defect:.2e}")
        if len(rows) < 2:
            continue
        energy = [r.values["energy_uI_U"] for r in rows]
        if any(b >= a for a, b in zip(energy, energy[1:])):
            failures.append(f"eps={eps:g}: energy error not decreasing")
        for metric, power in (("interp_inf_omega_s", 0), ("interp_inf_rest", 2), ("nodal_inf_s1", 3)):
            rate = table.rates(eps, power)[metric]
            if rate is None or rate < 1.75:
                failures.append(f"eps={eps:g}: {metric} rate {rate} below 1.75 (ln power {power})")
    return failures


# --- configuration ------------------------------------------------------------

_FLOAT_KEYS = {"b", "c", "beta", "rho", "c_star", "green_k", "green_K"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "epsilon":
        return "epsilons", tuple(float(v) for v in raw.split(",") if v.strip())
    if key == "n_list":
        return "n_list", tuple(int(v) for v in raw.split(",") if v.strip())
    if key == "quad_order":
        return key, int(raw)
    if key in _FLOAT_KEYS:
        return key, float(raw)
    if key == "green_node":
        if raw.lower() == "none":
            return key, None
        x, y = (float(v) for v in raw.split(","))
        return key, (x, y)
    if key in ("benchmark", "format", "out"):
        return key, raw
    raise InvalidConfigError(f"unknown config key {key!r}")


def parse_config(text: str) -> dict:
    """``key=value`` lines into :class:`StudySpec` field overrides."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        try:
            name, value = _parse_value(key.strip(), raw)
        except ValueError as exc:
            raise InvalidConfigError(f"line {lineno}: {exc}") from exc
        out[name] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shishkin-study", description="SDFEM convergence study on a Shishkin mesh")
    p.add_argument("config", nargs="?", help="key=value config file")
    p.add_argument("--epsilon", help="comma-separated eps values")
    p.add_argument("--n-list", help="comma-separated N values (multiples of 6)")
    p.add_argument("--c-star", help="stabilisation constant")
    p.add_argument("--quad-order", help="Gauss points per direction for loads and errors")
    p.add_argument("--green-node", help="probe point x,y (snapped to the nearest node) or 'none'")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--format", help="csv or markdown")
    p.add_argument("--check", action="store_true", help="exit with status 4 if the convergence checks fail")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def spec_from_args(args: argparse.Namespace) -> StudySpec:
    overrides = {}
    if args.config:
        try:
            overrides.update(parse_config(Path(args.config).read_text()))
        except OSError as exc:
            raise InvalidConfigError(f"cannot read config file: {exc}") from exc
    for flag in ("epsilon", "n_list", "c_star", "quad_order", "green_node", "out", "format"):
        raw = getattr(args, flag)
        if raw is not None:
            try:
                name, value = _parse_value(flag, raw)
            except ValueError as exc:
                raise InvalidConfigError(f"--{flag.replace('_', '-')}: {exc}") from exc
            overrides[name] = value
    spec = replace(StudySpec(), **overrides)
    spec.validate()
    return spec


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = spec_from_args(args)
        table = run_study(spec)
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = emit(table, spec.format)
    if spec.out:
        Path(spec.out).write_text(text, newline="")
    else:
        sys.stdout.write(text)
    if args.check:
        failures = check_table(table)
        for line in failures:
            print(f"check failed: {line}", file=sys.stderr)
        if failures:
            return EXIT_CHECK
    return EXIT_OK
