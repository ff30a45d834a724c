"""CPLEX-style LP text format writer and reader.

The writer is the escape hatch to external solvers for instances beyond
the built-in solver's desk scale; the reader exists so round trips can be
verified. Coefficients are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import io
import re

import numpy as np

from .problem import MilpProblem

MAX_NAME_LEN = 255
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\[\]]*$")
_TERMS_PER_LINE = 8

_REL_TO_LP = {"<=": "<=", ">=": ">=", "=": "="}


def _check_name(name: str) -> str:
    if len(name) > MAX_NAME_LEN:
        raise ValueError(f"name longer than {MAX_NAME_LEN} chars: {name[:40]}...")
    if not _NAME_RE.match(name):
        raise ValueError(f"name not LP-safe: {name!r}")
    return name


def _num(x: float) -> str:
    return f"{x:.17g}"


def _write_terms(out, names, idx, coefs):
    parts = []
    for pos, (j, c) in enumerate(zip(idx, coefs)):
        sign = "-" if c < 0 else "+"
        if pos == 0:
            lead = "-" if c < 0 else ""
            parts.append(f"{lead}{_num(abs(c))} {names[j]}")
        else:
            parts.append(f"{sign} {_num(abs(c))} {names[j]}")
    for i in range(0, len(parts), _TERMS_PER_LINE):
        out.write(" " + " ".join(parts[i:i + _TERMS_PER_LINE]) + "\n")
    if not parts:
        out.write(" 0 " + names[0] + "\n") if names else out.write("\n")


def write_lp(problem: MilpProblem, out) -> None:
    """Stream the problem to a text file object."""
    names = [_check_name(n) for n in problem.var_names]
    out.write(f"\\ {problem.name or 'flexpool model'}\n")
    out.write("Minimize\n" if problem.sense == "min" else "Maximize\n")
    obj_items = sorted(problem.objective.items())
    out.write(" obj:")
    if obj_items:
        out.write("\n")
        _write_terms(out, names, [j for j, _ in obj_items], [v for _, v in obj_items])
    else:
        out.write("\n")
    out.write("Subject To\n")
    for i in range(problem.n_constraints):
        out.write(f" {_check_name(problem.row_names[i])}:\n")
        _write_terms(out, names, problem.rows[i], problem.coefs[i])
        out.write(f" {_REL_TO_LP[problem.relations[i]]} {_num(problem.rhs[i])}\n")
    out.write("Bounds\n")
    binaries = []
    for j, name in enumerate(names):
        if problem.is_integer[j]:
            binaries.append(name)
            continue
        lo, hi = problem.lb[j], problem.ub[j]
        lo_s = "-inf" if lo == -np.inf else _num(lo)
        hi_s = "+inf" if hi == np.inf else _num(hi)
        out.write(f" {lo_s} <= {name} <= {hi_s}\n")
    if binaries:
        out.write("Binaries\n")
        for i in range(0, len(binaries), _TERMS_PER_LINE):
            out.write(" " + " ".join(binaries[i:i + _TERMS_PER_LINE]) + "\n")
    out.write("End\n")


def export_lp(problem: MilpProblem, destination) -> None:
    """Write the LP text file to a path or file object."""
    if hasattr(destination, "write"):
        write_lp(problem, destination)
    else:
        with open(destination, "w") as fh:
            write_lp(problem, fh)


def format_lp(problem: MilpProblem) -> str:
    buf = io.StringIO()
    write_lp(problem, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_SECTION_ALIASES = {
    "minimize": "objective_min", "min": "objective_min",
    "maximize": "objective_max", "max": "objective_max",
    "subject to": "constraints", "such that": "constraints",
    "s.t.": "constraints", "st": "constraints",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "binaries", "binary": "binaries", "bin": "binaries",
    "generals": "generals", "general": "generals", "gen": "generals",
    "end": "end",
}

_TOKEN_RE = re.compile(
    r"(?P<rel><=|>=|=)|(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf(?:inity)?\b)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_.\[\]]*)|(?P<sign>[+-])|(?P<colon>:)"
)


def _tokenize(line: str):
    pos = 0
    while pos < len(line):
        ch = line[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(line, pos)
        if not m:
            raise ValueError(f"cannot tokenize LP text at: {line[pos:pos + 20]!r}")
        yield m.lastgroup, m.group()
        pos = m.end()


def _parse_value(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "infinity", "+inf", "+infinity"):
        return np.inf
    if low in ("-inf", "-infinity"):
        return -np.inf
    return float(tok)


class _LpReader:
    """Token-stream assembler for the subset of LP files the writer emits."""

    def __init__(self):
        self.sense = "min"
        self.var_order: list[str] = []
        self.var_set: dict[str, int] = {}
        self.objective: dict[str, float] = {}
        self.constraints: list[tuple[str, dict, str, float]] = []
        self.bounds: dict[str, tuple[float, float]] = {}
        self.binaries: set[str] = set()

    def var(self, name: str) -> str:
        if name not in self.var_set:
            self.var_set[name] = len(self.var_order)
            self.var_order.append(name)
        return name

    def to_problem(self) -> MilpProblem:
        problem = MilpProblem(sense=self.sense)
        for name in self.var_order:
            if name in self.binaries:
                problem.add_variable(name, 0.0, 1.0, integer=True)
            else:
                lo, hi = self.bounds.get(name, (0.0, np.inf))
                problem.add_variable(name, lo, hi)
        name_to_idx = {n: j for j, n in enumerate(self.var_order)}
        for cname, terms, rel, rhs in self.constraints:
            idx = np.asarray([name_to_idx[n] for n in terms], dtype=np.int64)
            problem.add_constraint(idx, np.asarray(list(terms.values())), rel, rhs, cname)
        problem.set_objective({name_to_idx[n]: v for n, v in self.objective.items()})
        return problem


def _parse_expression(tokens):
    """Consume [name:] sign/coef/name terms; returns (label, terms, rel, rhs)."""
    label = None
    terms: dict[str, float] = {}
    rel = None
    rhs = None
    sign = 1.0
    coef = None
    i = 0
    while i < len(tokens):
        kind, tok = tokens[i]
        if kind == "colon":
            # the previous name was a label, not a variable
            if terms or coef is not None or label is not None:
                raise ValueError("misplaced ':' in LP expression")
            i += 1
            continue
        if kind == "name" and i + 1 < len(tokens) and tokens[i + 1][0] == "colon":
            label = tok
            i += 2
            continue
        if kind == "sign":
            sign *= -1.0 if tok == "-" else 1.0
            i += 1
            continue
        if kind == "num":
            value = _parse_value(tok)
            if rel is not None:
                rhs = sign * value
                sign = 1.0
                i += 1
                continue
            coef = (coef if coef is not None else 1.0) * sign * value
            sign = 1.0
            i += 1
            continue
        if kind == "name":
            c = sign * (coef if coef is not None else 1.0)
            terms[tok] = terms.get(tok, 0.0) + c
            coef = None
            sign = 1.0
            i += 1
            continue
        if kind == "rel":
            rel = tok
            i += 1
            continue
        raise ValueError(f"unexpected token {tok!r} in LP expression")
    return label, terms, rel, rhs


def parse_lp(text: str) -> MilpProblem:
    """Parse LP text produced by :func:`write_lp` (and close dialects)."""
    reader = _LpReader()
    section = None
    pending: list = []

    def flush_constraint():
        if not pending:
            return
        label, terms, rel, rhs = _parse_expression(pending)
        pending.clear()
        if rel is None:
            raise ValueError("constraint without a relation")
        for n in terms:
            reader.var(n)
        reader.constraints.append(
            (label or f"c{len(reader.constraints)}", terms, rel, float(rhs))
        )

    def flush_objective():
        if not pending:
            return
        _, terms, rel, _ = _parse_expression(pending)
        pending.clear()
        if rel is not None:
            raise ValueError("objective cannot contain a relation")
        for n in terms:
            reader.var(n)
        reader.objective = terms

    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTION_ALIASES:
            if section == "constraints":
                flush_constraint()
            elif section == "objective":
                flush_objective()
            new_section = _SECTION_ALIASES[key]
            if new_section == "objective_min":
                reader.sense, section = "min", "objective"
            elif new_section == "objective_max":
                reader.sense, section = "max", "objective"
            else:
                section = new_section
            if section == "end":
                break
            continue
        tokens = list(_tokenize(line))
        if section == "objective":
            pending.extend(tokens)
        elif section == "constraints":
            pending.extend(tokens)
            if any(k == "rel" for k, _ in tokens):
                # rhs arrives on the same line as the relation
                flush_constraint()
        elif section == "bounds":
            _parse_bound_line(tokens, reader)
        elif section == "binaries":
            for kind, tok in tokens:
                if kind == "name":
                    reader.var(tok)
                    reader.binaries.add(tok)
        elif section == "generals":
            raise ValueError("general integers are not supported, binaries only")
        else:
            raise ValueError(f"content before a section header: {line!r}")

    if section == "objective":
        flush_objective()
    elif section == "constraints":
        flush_constraint()
    return reader.to_problem()


def _parse_bound_line(tokens, reader: _LpReader) -> None:
    kinds = [k for k, _ in tokens]
    vals = [t for _, t in tokens]
    # forms: "lo <= x <= hi", "x <= hi", "x >= lo", "x = v", "x free"
    if kinds == ["num", "rel", "name", "rel", "num"] and vals[1] == "<=" and vals[3] == "<=":
        name = reader.var(vals[2])
        reader.bounds[name] = (_parse_value(vals[0]), _parse_value(vals[4]))
        return
    if kinds == ["name", "rel", "num"]:
        name = reader.var(vals[0])
        lo, hi = reader.bounds.get(name, (0.0, np.inf))
        if vals[1] == "<=":
            reader.bounds[name] = (lo, _parse_value(vals[2]))
        elif vals[1] == ">=":
            reader.bounds[name] = (_parse_value(vals[2]), hi)
        else:
            v = _parse_value(vals[2])
            reader.bounds[name] = (v, v)
        return
    if kinds == ["name", "name"] and vals[1].lower() == "free":
        name = reader.var(vals[0])
        reader.bounds[name] = (-np.inf, np.inf)
        return
    raise ValueError(f"unrecognized bounds line: {' '.join(vals)!r}")


def problems_structurally_equal(a: MilpProblem, b: MilpProblem, tol: float = 0.0) -> bool:
    """Name-keyed structural comparison used by round-trip tests."""
    if a.sense != b.sense or a.n_vars != b.n_vars or a.n_constraints != b.n_constraints:
        return False

    def close(x, y):
        if np.isinf(x) or np.isinf(y):
            return x == y
        return abs(x - y) <= tol

    bmap = {n: j for j, n in enumerate(b.var_names)}
    for j, name in enumerate(a.var_names):
        if name not in bmap:
            return False
        jb = bmap[name]
        if a.is_integer[j] != b.is_integer[jb]:
            return False
        if not (close(a.lb[j], b.lb[jb]) and close(a.ub[j], b.ub[jb])):
            return False

    def objective_by_name(p):
        return {p.var_names[j]: v for j, v in p.objective.items() if v != 0.0}

    obj_a, obj_b = objective_by_name(a), objective_by_name(b)
    if set(obj_a) != set(obj_b):
        return False
    if any(not close(obj_a[n], obj_b[n]) for n in obj_a):
        return False

    def rows_by_name(p):
        out = {}
        for i in range(p.n_constraints):
            terms = {}
            for j, c in zip(p.rows[i], p.coefs[i]):
                terms[p.var_names[j]] = terms.get(p.var_names[j], 0.0) + c
            out[p.row_names[i]] = (terms, p.relations[i], p.rhs[i])
        return out

    rows_a, rows_b = rows_by_name(a), rows_by_name(b)
    if set(rows_a) != set(rows_b):
        return False
    for name, (terms, rel, rhs) in rows_a.items():
        terms_b, rel_b, rhs_b = rows_b[name]
        if rel != rel_b or not close(rhs, rhs_b):
            return False
        if set(terms) != set(terms_b):
            return False
        if any(not close(terms[n], terms_b[n]) for n in terms):
            return False
    return True
