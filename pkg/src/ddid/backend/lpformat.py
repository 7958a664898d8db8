"""Writer and reader for the CPLEX-style LP text format, plus a reader for
CBC solution files.

Names that are not safe in LP files are mangled to ``_h<hex>`` where the hex
digits encode the UTF-8 bytes of the original name; :func:`demangle` reverses
the map. The objective constant, which several engines drop on read, is kept
in a structured comment line.
"""
from __future__ import annotations

import logging
import math
import re
from typing import Iterable, Optional

from .model import BINARY, CONTINUOUS, MilpModel, MilpSolution

logger = logging.getLogger(__name__)

_SAFE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_RESERVED = {
    "min", "minimize", "minimum", "max", "maximize", "maximum", "st", "s.t.", "subject", "to",
    "such", "that", "bound", "bounds", "bin", "binary", "binaries", "gen", "general",
    "generals", "integer", "integers", "int", "end", "free", "inf", "infinity", "semi",
    "semis", "semi-continuous", "sos", "sos1", "sos2", "obj",
}
_CONST_TAG = "\\ objective_constant:"
_TERMS_PER_LINE = 6
_MAX_NAME = 255


def mangle(name: str) -> str:
    if (_SAFE.match(name) and name.lower() not in _RESERVED and not name.startswith("_h")
            and not re.match(r"^[eE]", name) and len(name) <= _MAX_NAME):
        return name
    out = "_h" + name.encode("utf-8").hex()
    if len(out) > _MAX_NAME:
        raise ValueError(f"name too long for LP format after mangling: {name[:40]}...")
    return out


def demangle(name: str) -> str:
    if name.startswith("_h"):
        try:
            return bytes.fromhex(name[2:]).decode("utf-8")
        except ValueError:
            return name
    return name


def _num(x: float) -> str:
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return repr(float(x))


def _terms(coeffs: dict) -> list:
    out = []
    for v, c in coeffs.items():
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {_num(abs(c))} {mangle(v)}")
    return out


def _wrap(head: str, terms: list, tail: str = "") -> list:
    lines = []
    for i in range(0, max(len(terms), 1), _TERMS_PER_LINE):
        chunk = " ".join(terms[i:i + _TERMS_PER_LINE])
        lines.append((head if i == 0 else "   ") + chunk)
    if tail:
        lines[-1] += " " + tail
    return lines


def emit_model_file(model: MilpModel) -> str:
    """Serialise ``model`` to LP text."""
    model.validate()
    lines = [f"\\ model {model.name}"]
    obj = model.objective
    if obj.constant != 0.0:
        lines.append(f"{_CONST_TAG} {_num(obj.constant)}")
    lines.append("Minimize" if obj.sense == "min" else "Maximize")
    terms = _terms(obj.coeffs)
    if not terms and model.variables:
        terms = [f"+ 0.0 {mangle(next(iter(model.variables)))}"]
    lines += _wrap(" obj: ", terms)
    lines.append("Subject To")
    for c in model.constraints:
        terms = _terms(c.coeffs)
        if not terms:
            # keep variable-free rows (and their infeasibility) with a zero term
            terms = [f"+ 0.0 {mangle(next(iter(model.variables)))}"]
        lines += _wrap(f" {mangle(c.name)}: ", terms, f"{c.sense} {_num(c.rhs)}")
    lines.append("Bounds")
    for v in model.variables.values():
        n = mangle(v.name)
        if v.kind == BINARY and v.lo == 0.0 and v.hi == 1.0:
            continue
        if v.lo == -math.inf and v.hi == math.inf:
            lines.append(f" {n} free")
        elif v.lo == v.hi:
            lines.append(f" {n} = {_num(v.lo)}")
        elif v.hi == math.inf:
            lines.append(f" {n} >= {_num(v.lo)}")
        else:
            lines.append(f" {_num(v.lo)} <= {n} <= {_num(v.hi)}")
    bins = [mangle(v.name) for v in model.variables.values() if v.kind == BINARY]
    if bins:
        lines.append("Binaries")
        for i in range(0, len(bins), 10):
            lines.append(" " + " ".join(bins[i:i + 10]))
    lines.append("End")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Reader (covers the dialect emitted above)
# ---------------------------------------------------------------------------

_SECTION = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "subject to": "con", "such that": "con", "st": "con", "s.t.": "con",
    "bounds": "bnd", "bound": "bnd",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|<=|>=|=<|=>|=|<|>|[+-]|[^\s+\-<>=]+)")


def _parse_float(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def _is_num(tok: str) -> bool:
    try:
        _parse_float(tok)
        return True
    except ValueError:
        return False


def _parse_expr(tokens: list) -> tuple:
    """Linear expression tokens -> (coeffs, constant)."""
    coeffs: dict = {}
    const = 0.0
    sign, coef = 1.0, None
    for tok in tokens:
        if tok == "+":
            continue
        if tok == "-":
            sign = -sign
            continue
        if _is_num(tok) and coef is None:
            coef = _parse_float(tok)
            continue
        if _is_num(tok):
            raise ValueError(f"unexpected number {tok!r}")
        name = demangle(tok)
        coeffs[name] = coeffs.get(name, 0.0) + sign * (1.0 if coef is None else coef)
        sign, coef = 1.0, None
    if coef is not None:
        const += sign * coef
    return coeffs, const


def parse_model_file(text: str) -> MilpModel:
    model = MilpModel("parsed")
    section = None
    const = 0.0
    sense = "min"
    stmts: dict = {"obj": [], "con": [], "bnd": [], "bin": [], "gen": []}
    current: list = []

    def flush():
        if current and section in ("obj", "con"):
            stmts[section].append(" ".join(current))
        current.clear()

    for raw in text.splitlines():
        if raw.startswith(_CONST_TAG):
            const = float(raw[len(_CONST_TAG):])
            continue
        m = re.match(r"^\\ model (.*)$", raw)
        if m:
            model.name = m.group(1).strip()
            continue
        line = raw.split("\\", 1)[0]
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTION:
            flush()
            section = _SECTION[key]
            if section == "obj":
                sense = "max" if key.startswith("max") else "min"
            continue
        if section in ("obj", "con"):
            if not line[0].isspace() or re.match(r"^\s*[^\s:+\-]+\s*:", line):
                flush()
            current.append(line.strip())
        elif section in ("bnd", "bin", "gen"):
            stmts[section].append(line.strip())
    flush()

    bin_names = {demangle(t) for l in stmts["bin"] for t in l.split()}
    declared: dict = {}

    def declare(n):
        if n not in declared:
            declared[n] = [0.0, math.inf]

    obj_coeffs: dict = {}
    for s in stmts["obj"]:
        body = s.split(":", 1)[1] if ":" in s else s
        c, k = _parse_expr(_TOKEN.findall(body))
        obj_coeffs.update(c)
        const += k
        for n in c:
            declare(n)
    cons = []
    for s in stmts["con"]:
        name, body = (s.split(":", 1) if ":" in s else (None, s))
        toks = _TOKEN.findall(body)
        idx = next(i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "=<", "=>", "<", ">"))
        op = {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(toks[idx], toks[idx])
        c, k = _parse_expr(toks[:idx])
        rhs = _parse_float("".join(toks[idx + 1:]))
        for n in c:
            declare(n)
        cons.append((None if name is None else demangle(name.strip()), c, op, rhs - k))
    for s in stmts["bnd"]:
        toks = s.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            n = demangle(toks[0])
            declare(n)
            declared[n] = [-math.inf, math.inf]
        elif len(toks) == 5:
            n = demangle(toks[2])
            declare(n)
            declared[n] = [_parse_float(toks[0]), _parse_float(toks[4])]
        elif len(toks) == 3:
            if _is_num(toks[0]):
                n, op, val = demangle(toks[2]), toks[1], _parse_float(toks[0])
                op = {"<=": ">=", ">=": "<="}.get(op, op)
            else:
                n, op, val = demangle(toks[0]), toks[1], _parse_float(toks[2])
            declare(n)
            if op == "=":
                declared[n] = [val, val]
            elif op in ("<=", "=<"):
                declared[n][1] = val
            else:
                declared[n][0] = val
        else:
            raise ValueError(f"cannot parse bound line {s!r}")
    for n in bin_names:
        declare(n)
    for n, (lo, hi) in declared.items():
        if n in bin_names:
            model.add_var(n, BINARY, max(lo, 0.0), min(hi, 1.0))
        else:
            model.add_var(n, CONTINUOUS, lo, hi)
    for name, c, op, rhs in cons:
        model.add_constraint(c, op, rhs, name)
    model.set_objective(obj_coeffs, sense, const)
    return model


# ---------------------------------------------------------------------------
# CBC solution files
# ---------------------------------------------------------------------------

def _status_from_header(header: str) -> str:
    h = header.strip().lower()
    if h.startswith("optimal"):
        return "optimal"
    if "infeasible" in h:
        return "infeasible"
    if "unbounded" in h:
        return "unbounded"
    if h.startswith("stopped"):
        return "feasible-at-limit"
    return "error"


def parse_solution_file(text: str, names: Optional[Iterable[str]] = None,
                        n_rows: int = 0) -> MilpSolution:
    """Parse a CBC ``-solu`` file.

    ``n_rows`` leading row records are skipped (present when the engine ran
    with full printing). Variables listed in ``names`` but absent from the
    file default to 0 with a warning. The objective stored here is the
    engine's header value; callers recompute it from the values.
    """
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        raise ValueError("empty solution file")
    status = _status_from_header(lines[0])
    m = re.search(r"objective value\s+(\S+)", lines[0])
    obj = float(m.group(1)) if m else math.nan
    values: dict = {}
    for l in lines[1 + n_rows:]:
        toks = l.replace("**", " ").split()
        if len(toks) < 3:
            raise ValueError(f"unparseable solution line {l!r}")
        try:
            values[demangle(toks[1])] = float(toks[2])
        except ValueError as exc:
            raise ValueError(f"unparseable solution line {l!r}") from exc
    if names is not None:
        missing = [n for n in names if n not in values]
        if missing:
            logger.warning("%d variable(s) missing from solution file, defaulting to 0: %s",
                           len(missing), ", ".join(missing[:5]))
            for n in missing:
                values[n] = 0.0
    return MilpSolution(status=status, objective=obj, values=values)
