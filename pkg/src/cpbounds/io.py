"""Model export, exact packing values, bound tables and plots.

LP files follow the CPLEX LP subset (objective, ``Subject To``, ``Bounds``,
``End``).  Coefficients are written as decimals for other tools, and every
row and bound is repeated in a ``\\ exact:`` comment carrying the rationals,
which is what :func:`read_lp` reconstructs from.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation, localcontext
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .certificates import UNAVAILABLE, closed_form_bound
from .errors import IoFailure, MismatchDetected, MonotonicityViolation, ParseError, Unavailable
from .exact import Constraint, LinearModel, LinExpr, SdpModel, VarDecl, parse_var
from .relaxations import Relaxation, as_relaxation

CSV_HEADER = ("n", "relaxation", "bound", "bound_decimal", "exact_gamma", "ratio")


# ---------------------------------------------------------------- decimals

def to_decimal(value, digits: int = 12) -> Decimal:
    """Round a rational to ``digits`` significant digits, half to even."""
    q = Fraction(value)
    if q == 0:
        return Decimal(0)
    with localcontext() as ctx:
        ctx.prec = digits + 30
        d = Decimal(q.numerator) / Decimal(q.denominator)
        exponent = d.adjusted() - digits + 1
        return d.quantize(Decimal(1).scaleb(exponent), rounding=ROUND_HALF_EVEN)


def format_decimal(value, digits: int = 12) -> str:
    """Plain decimal string at ``digits`` significant digits, no exponent."""
    d = to_decimal(value, digits)
    text = format(d, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"


def _ratio(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _write(text: str, destination) -> str:
    if destination is None:
        return text
    try:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            Path(destination).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc
    return text


def _read(source) -> str:
    """Text from a file object, a path, or the text itself (multi-line or CSV)."""
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, str) and ("\n" in source or "," in source):
        return source
    try:
        return Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {source}: {exc}") from exc


# --------------------------------------------------------------------- LP

_SENSE_LP = {"<=": "<=", ">=": ">=", "=": "="}


def _lp_expr(expr: LinExpr, digits: int = 17) -> str:
    parts = []
    for v, c in expr.terms.items():
        mag = format_decimal(abs(c), digits)
        sign = "-" if c < 0 else "+"
        term = v.name if abs(c) == 1 else f"{mag} {v.name}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0 " + "gamma"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[1:]


def _exact_terms(expr: LinExpr) -> str:
    return " ".join(f"{v.name}={_ratio(c)}" for v, c in expr.terms.items())


def export_lp(model: LinearModel, destination=None) -> str:
    """Render ``model`` as LP text; writes to ``destination`` when given."""
    lines = [
        f"\\ model: n={model.n} name={model.name}",
        f"\\ exact objective: {_exact_terms(model.objective)} const={_ratio(model.objective.constant)}",
        "Maximize",
        f" obj: {_lp_expr(model.objective)}",
        "Subject To",
    ]
    for con in model.constraints:
        lines.append(f" {con.tag}: {_lp_expr(con.expr)} {_SENSE_LP[con.sense]} "
                     f"{format_decimal(con.rhs, 17)}")
        lines.append(f"\\ exact: {con.tag} {con.sense} {_ratio(con.rhs)} : {_exact_terms(con.expr)}")
    lines.append("Bounds")
    for v, lo, hi in model.variables:
        if lo is None and hi is None:
            lines.append(f" {v.name} free")
        else:
            lo_txt = "-inf" if lo is None else format_decimal(lo, 17)
            hi_txt = "+inf" if hi is None else format_decimal(hi, 17)
            lines.append(f" {lo_txt} <= {v.name} <= {hi_txt}")
        lo_ex = "-inf" if lo is None else _ratio(lo)
        hi_ex = "+inf" if hi is None else _ratio(hi)
        lines.append(f"\\ exact bound: {v.name} {lo_ex} {hi_ex}")
    lines.append("End")
    return _write("\n".join(lines) + "\n", destination)


def _parse_lp_expr(text: str) -> LinExpr:
    terms: dict = {}
    tokens = re.findall(r"[+-]|[^\s+-]+(?:[eE][+-]\d+)?", text)
    sign, coef = 1, None
    for tok in tokens:
        if tok in "+-":
            sign = -1 if tok == "-" else 1
            continue
        try:
            coef = Fraction(tok)
            continue
        except ValueError:
            pass
        v = parse_var(tok)
        terms[v] = terms.get(v, Fraction(0)) + sign * (coef if coef is not None else 1)
        sign, coef = 1, None
    return LinExpr(terms)


def _parse_exact_terms(text: str) -> LinExpr:
    terms = {}
    for item in text.split():
        name, _, value = item.partition("=")
        terms[parse_var(name)] = Fraction(value)
    return LinExpr(terms)


def _parse_bound(text: str):
    if text in ("-inf", "+inf", "inf"):
        return None
    return Fraction(text)


def _close(a: Fraction, b: Fraction) -> bool:
    return abs(a - b) <= Fraction(1, 10**15) * max(1, abs(a))


def _agrees(exact: Constraint, body: Constraint) -> bool:
    """Same row up to the rounding of the decimal rendering."""
    if exact.sense != body.sense or not _close(exact.rhs, body.rhs):
        return False
    names = set(exact.expr.terms) | set(body.expr.terms)
    return all(_close(exact.expr.coef(v), body.expr.coef(v)) for v in names)


def read_lp(source) -> LinearModel:
    """Parse LP text produced by :func:`export_lp`.

    Rows and bounds come from the exact comments when present, otherwise from
    the decimal body.  Both must name the same rows and variables.
    """
    text = _read(source)
    name, n = None, 0
    objective = None
    body_rows: list[Constraint] = []
    exact_rows: list[Constraint] = []
    body_bounds: dict = {}
    exact_bounds: dict = {}
    section = None
    try:
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("\\"):
                comment = line[1:].strip()
                if comment.startswith("model:"):
                    m = re.match(r"model:\s*n=(\d+)\s+name=(.*)$", comment)
                    n, name = int(m.group(1)), m.group(2).strip()
                elif comment.startswith("exact objective:"):
                    body, _, const = comment[len("exact objective:"):].rpartition("const=")
                    objective = _parse_exact_terms(body) + Fraction(const)
                elif comment.startswith("exact bound:"):
                    vname, lo, hi = comment[len("exact bound:"):].split()
                    exact_bounds[parse_var(vname)] = (_parse_bound(lo), _parse_bound(hi))
                elif comment.startswith("exact:"):
                    head, _, terms = comment[len("exact:"):].partition(" : ")
                    tag, sense, rhs = head.split()
                    exact_rows.append(Constraint(_parse_exact_terms(terms), sense, Fraction(rhs), tag))
                continue
            lowered = line.lower()
            if lowered in ("maximize", "maximise", "max"):
                section = "obj"
                continue
            if lowered in ("subject to", "st", "s.t."):
                section = "rows"
                continue
            if lowered == "bounds":
                section = "bounds"
                continue
            if lowered == "end":
                section = None
                continue
            if section == "obj":
                if objective is None:
                    objective = _parse_lp_expr(line.split(":", 1)[-1])
            elif section == "rows":
                tag, _, rest = line.partition(":")
                m = re.match(r"(.*?)(<=|>=|=)\s*(\S+)$", rest)
                if m is None:
                    raise ParseError(f"malformed row: {line}")
                body_rows.append(Constraint(_parse_lp_expr(m.group(1)), m.group(2),
                                            Fraction(m.group(3)), tag.strip()))
            elif section == "bounds":
                parts = line.split()
                if len(parts) == 2 and parts[1] == "free":
                    body_bounds[parse_var(parts[0])] = (None, None)
                elif len(parts) == 5 and parts[1] == parts[3] == "<=":
                    body_bounds[parse_var(parts[2])] = (_parse_bound(parts[0]), _parse_bound(parts[4]))
                else:
                    raise ParseError(f"malformed bound: {line}")
            else:
                raise ParseError(f"unexpected line outside any section: {line}")
    except ParseError:
        raise
    except (ValueError, KeyError, AttributeError, ZeroDivisionError) as exc:
        raise ParseError(f"cannot parse LP text: {exc}") from exc

    rows = body_rows
    if exact_rows:
        if [r.tag for r in exact_rows] != [r.tag for r in body_rows]:
            raise ParseError("exact comments do not match the LP rows")
        for exact_row, body_row in zip(exact_rows, body_rows):
            if not _agrees(exact_row, body_row):
                raise ParseError(f"row {exact_row.tag} disagrees with its exact comment")
        rows = exact_rows
    bounds = body_bounds
    if exact_bounds:
        if set(exact_bounds) != set(body_bounds):
            raise ParseError("exact bound comments do not match the Bounds section")
        bounds = exact_bounds
    if objective is None:
        raise ParseError("missing objective")
    decls = [VarDecl(v, *bounds[v]) for v in sorted(bounds)]
    if not n:
        n = max((v.i for v in bounds), default=0)
    try:
        return LinearModel(n, tuple(decls), tuple(rows), objective, name or "")
    except Exception as exc:
        raise ParseError(f"LP text does not describe a valid model: {exc}") from exc


def round_trip(model: LinearModel) -> LinearModel:
    return read_lp(export_lp(model))


# ------------------------------------------------------------------ SDPA

def export_sdpa(model: SdpModel, destination=None) -> str:
    """Sparse SDPA (.dat-s) text for ``model``.

    SDPA minimizes c.x subject to sum_k F_k x_k - F_0 >= 0 (PSD).  The
    objective is negated, block 1 is diagonal and holds every linear row and
    finite variable bound as ``a.x - b >= 0``, and each bordered matrix is one
    dense block.  Comment lines starting with ``*`` record every nonzero entry
    as an exact rational.
    """
    base = model.base
    variables = list(base.var_ids)
    index = {v: k + 1 for k, v in enumerate(variables)}
    diag: list[tuple[LinExpr, Fraction, str]] = []
    for con in base.constraints:
        if con.sense in (">=", "="):
            diag.append((con.expr, con.rhs, con.tag))
        if con.sense in ("<=", "="):
            diag.append((-con.expr, -con.rhs, con.tag))
    for v, lo, hi in base.variables:
        if lo is not None:
            diag.append((LinExpr({v: 1}), lo, f"lb_{v.name}"))
        if hi is not None:
            diag.append((LinExpr({v: -1}), -hi, f"ub_{v.name}"))

    entries: list[tuple[int, int, int, int, Fraction]] = []
    for row, (expr, rhs, _tag) in enumerate(diag, 1):
        if rhs != 0:
            entries.append((0, 1, row, row, rhs))
        for v, c in expr.terms.items():
            entries.append((index[v], 1, row, row, c))
    for blk_no, blk in enumerate(model.psd_blocks, 2):
        entries.append((0, blk_no, 1, 1, Fraction(-1)))
        for a in range(blk.size):
            for b in range(a, blk.size):
                if a == 0 and b == 0:
                    continue
                v = blk.vector[b - 1] if a == 0 else blk.matrix[a - 1][b - 1]
                entries.append((index[v], blk_no, a + 1, b + 1, Fraction(1)))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    cost = [-base.objective.coef(v) for v in variables]

    lines = [f"* model: {getattr(model, 'name', '')} n={model.n}",
             f"* variables: {' '.join(v.name for v in variables)}",
             f"* lp rows: {' '.join(tag for _e, _r, tag in diag)}"]
    lines += [f"* exact c {k} = {_ratio(c)}" for k, c in enumerate(cost, 1) if c]
    lines += [f"* exact F {m} {b} {i} {j} = {_ratio(val)}" for m, b, i, j, val in entries]
    lines.append(str(len(variables)))
    lines.append(str(1 + len(model.psd_blocks)))
    lines.append(" ".join([f"-{len(diag)}"] + [str(blk.size) for blk in model.psd_blocks]))
    lines.append(" ".join(format_decimal(c, 17) for c in cost))
    lines += [f"{m} {b} {i} {j} {format_decimal(val, 17)}" for m, b, i, j, val in entries]
    return _write("\n".join(lines) + "\n", destination)


@dataclass(frozen=True)
class SdpaSummary:
    m: int
    block_sizes: tuple[int, ...]
    lp_rows: tuple[str, ...]


def read_sdpa_summary(source) -> SdpaSummary:
    text = _read(source)
    data = [ln for ln in text.splitlines() if ln and ln[0] not in "*\""]
    rows = ()
    for ln in text.splitlines():
        if ln.startswith("* lp rows:"):
            rows = tuple(ln[len("* lp rows:"):].split())
    try:
        return SdpaSummary(int(data[0]), tuple(int(t) for t in data[2].split()), rows)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed SDPA header: {exc}") from exc


# ---------------------------------------------------------- exact values

@dataclass(frozen=True)
class ExactValuesTable:
    """Best known gamma per n, sorted by n and nonincreasing."""

    rows: dict[int, Decimal]
    provenance: dict[int, str]

    def __contains__(self, n) -> bool:
        return n in self.rows

    def __getitem__(self, n: int) -> Decimal:
        return self.rows[n]

    def get(self, n: int) -> Decimal | None:
        return self.rows.get(n)

    def gamma(self, n: int) -> Fraction:
        return Fraction(self.rows[n])

    def __len__(self):
        return len(self.rows)


def load_exact_values(source) -> ExactValuesTable:
    """Parse an ``n,gamma_exact[,provenance]`` CSV (path, file or text)."""
    text = _read(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty exact-values file") from None
    if header[:2] != ["n", "gamma_exact"]:
        raise ParseError(f"expected header 'n,gamma_exact', got {','.join(header)}")
    rows: dict[int, Decimal] = {}
    prov: dict[int, str] = {}
    for lineno, rec in enumerate(reader, 2):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            n = int(rec[0])
            gamma = Decimal(rec[1].strip())
        except (ValueError, IndexError, InvalidOperation) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if n < 2:
            raise ParseError(f"line {lineno}: n must be at least 2")
        if not gamma.is_finite() or gamma <= 0:
            raise ParseError(f"line {lineno}: gamma must be positive")
        if n in rows:
            raise ParseError(f"line {lineno}: duplicate n={n}")
        rows[n] = gamma
        if len(rec) > 2 and len(header) > 2:
            prov[n] = rec[2].strip()
    ordered = dict(sorted(rows.items()))
    ns = list(ordered)
    for a, b in zip(ns, ns[1:]):
        if ordered[b] > ordered[a]:
            raise MonotonicityViolation(f"gamma increases from n={a} to n={b}")
    return ExactValuesTable(ordered, dict(sorted(prov.items())))


def bundled_exact_values() -> ExactValuesTable:
    ref = resources.files("cpbounds").joinpath("data/exact_values.csv")
    return load_exact_values(ref.read_text(encoding="utf-8"))


# ------------------------------------------------------------ bound table

@dataclass(frozen=True)
class BoundRow:
    n: int
    relaxation: Relaxation
    bound: Fraction
    bound_decimal: str
    exact_gamma: Decimal | None = None
    ratio: str | None = None

    @property
    def ratio_exact(self) -> Fraction | None:
        if self.exact_gamma is None:
            return None
        return self.bound / Fraction(self.exact_gamma)

    def csv_fields(self) -> list[str]:
        return [str(self.n), self.relaxation.value, _ratio(self.bound), self.bound_decimal,
                "" if self.exact_gamma is None else str(self.exact_gamma),
                self.ratio or ""]


def _parse_range(n_range) -> list[int]:
    if isinstance(n_range, str):
        m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", n_range)
        if m is None:
            raise ParseError(f"expected A..B, got {n_range!r}")
        return list(range(int(m.group(1)), int(m.group(2)) + 1))
    return list(n_range)


def bound_table(n_range, relaxations: Sequence, exact: ExactValuesTable | None = None,
                method: str = "closed_form", precision: int = 12,
                strategy: str | None = None) -> list[BoundRow]:
    """One row per (n, relaxation), ordered by n then by the given kinds.

    With ``method="solve"`` every LP is solved exactly and compared with the
    closed form when one exists; a difference raises MismatchDetected.
    """
    if method not in ("closed_form", "solve"):
        raise ValueError(f"unknown method {method!r}")
    kinds = [as_relaxation(r) for r in relaxations]
    rows = []
    for n in _parse_range(n_range):
        for kind in kinds:
            if method == "closed_form":
                bound = closed_form_bound(kind, n)
                if bound is UNAVAILABLE:
                    raise Unavailable(f"{kind} has no closed form")
            else:
                from .solver import solve_relaxation

                result = solve_relaxation(kind, n, strategy)
                bound = result.value
                expected = closed_form_bound(kind, n)
                if expected is not UNAVAILABLE and bound != expected:
                    raise MismatchDetected(
                        f"{kind} at n={n}: LP value {bound} differs from closed form {expected}")
            gamma = exact.get(n) if exact is not None else None
            ratio = None
            if gamma is not None:
                ratio = format_decimal(bound / Fraction(gamma), precision)
            rows.append(BoundRow(n, kind, bound, format_decimal(bound, precision), gamma, ratio))
    return rows


def table_csv(rows: Iterable[BoundRow], destination=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    return _write(buf.getvalue(), destination)


# ------------------------------------------------------------------ plot

def emit_plot(rows: Sequence[BoundRow], destination=None, title: str | None = None) -> bytes:
    """Line chart of bound versus n, one series per relaxation plus exact.

    Output bytes depend only on ``rows``: the SVG id salt is fixed and no
    date is embedded.
    """
    if not rows:
        raise ValueError("cannot plot an empty table")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[str, list[tuple[int, float]]] = {}
    exact: dict[int, float] = {}
    for row in rows:
        series.setdefault(row.relaxation.value, []).append((row.n, float(row.bound)))
        if row.exact_gamma is not None:
            exact[row.n] = float(row.exact_gamma)
    with matplotlib.rc_context({"svg.hashsalt": "cpbounds", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name, pts in series.items():
            pts.sort()
            line, = ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=name)
            line.set_gid(f"series-{name}")
        if exact:
            ns = sorted(exact)
            line, = ax.plot(ns, [exact[n] for n in ns], marker=".", color="black", label="exact")
            line.set_gid("series-exact")
        ax.set_xlabel("n")
        ax.set_ylabel("squared distance bound")
        if title:
            ax.set_title(title)
        ax.legend()
        ax.grid(True, alpha=0.3)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    data = buf.getvalue()
    if destination is not None:
        try:
            if hasattr(destination, "write"):
                destination.write(data)
            else:
                Path(destination).write_bytes(data)
        except OSError as exc:
            raise IoFailure(f"cannot write {destination}: {exc}") from exc
    return data


def plot_series(svg: bytes) -> list[str]:
    """Series names in an SVG written by :func:`emit_plot`, in drawing order."""
    return [m.decode() for m in re.findall(rb'<g id="series-([^"]+)"', svg)]
