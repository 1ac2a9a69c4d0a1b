"""Readers and writers for `.bnet` networks, `.prob` MAP problems and CSV reports.

Network grammar, whitespace-insensitive, `#` starts a comment::

    network NAME
    var NAME { STATE, STATE, ... }
    cpt NAME [| PARENT ...] { ROW ; ROW ; ... }

Rows list p(child | parent configuration); configurations are enumerated with the
last parent varying fastest.
"""

import csv
import io
import math
import re
from typing import Iterable, NamedTuple

from pydantic import ValidationError

import config
from errors import ParseError, ProblemError, StructureError
from models import (
    Assignment,
    BayesianNetwork,
    Cpt,
    MapProblem,
    ReportRow,
    TraceRow,
    Variable,
)

_TOKEN = re.compile(
    r"""
    (?P<space>[ \t\r\f\v]+)
    | (?P<newline>\n)
    | (?P<comment>\#[^\n]*)
    | (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_\-]*)
    | (?P<punct>[{}|,;=])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str, keep_newlines: bool = False) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, position = 1, 0, 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        column = position - line_start + 1
        if match is None:
            raise ParseError(line, column, f"unexpected character {text[position]!r}")
        kind = match.lastgroup
        if kind == "newline":
            if keep_newlines:
                tokens.append(Token("newline", "\n", line, column))
            line += 1
            line_start = match.end()
        elif kind not in ("space", "comment"):
            tokens.append(Token(kind, match.group(), line, column))
        position = match.end()
    tokens.append(Token("eof", "", line, position - line_start + 1))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.index = 0

    def peek(self) -> Token:
        return self.tokens[self.index]

    def next(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != "eof":
            self.index += 1
        return token

    def expect(self, kind: str, text: str | None = None) -> Token:
        token = self.next()
        if token.kind != kind or (text is not None and token.text != text):
            wanted = repr(text) if text is not None else kind
            found = repr(token.text) if token.text else "end of input"
            raise ParseError(token.line, token.column, f"expected {wanted}, found {found}")
        return token

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        token = self.peek()
        if token.kind == kind and (text is None or token.text == text):
            return self.next()
        return None


class _VarDecl(NamedTuple):
    name: Token
    states: list[str]


class _CptDecl(NamedTuple):
    child: Token
    parents: list[Token]
    opening: Token
    rows: list[list[Token]]


def _parse_var(cursor: _Cursor) -> _VarDecl:
    name = cursor.expect("ident")
    cursor.expect("punct", "{")
    states = [cursor.expect("ident").text]
    while cursor.accept("punct", ","):
        states.append(cursor.expect("ident").text)
    cursor.expect("punct", "}")
    return _VarDecl(name, states)


def _parse_cpt(cursor: _Cursor) -> _CptDecl:
    child = cursor.expect("ident")
    parents: list[Token] = []
    if cursor.accept("punct", "|"):
        parents.append(cursor.expect("ident"))
        while cursor.peek().kind == "ident":
            parents.append(cursor.next())
    opening = cursor.expect("punct", "{")
    rows = [[cursor.expect("number")]]
    while True:
        if cursor.peek().kind == "number":
            rows[-1].append(cursor.next())
        elif cursor.accept("punct", ";"):
            rows.append([cursor.expect("number")])
        else:
            cursor.expect("punct", "}")
            return _CptDecl(child, parents, opening, rows)


def _number(token: Token) -> float:
    value = float(token.text)
    if not math.isfinite(value):
        raise ParseError(token.line, token.column, f"{token.text} is not a finite number")
    if not 0.0 <= value <= 1.0:
        raise ParseError(token.line, token.column, f"probability {token.text} outside [0, 1]")
    return value


def _build_cpt(decl: _CptDecl, variables: dict[str, tuple[int, _VarDecl]]) -> Cpt:
    child_name = decl.child.text
    if child_name not in variables:
        raise ParseError(decl.child.line, decl.child.column, f"cpt for unknown variable {child_name}")
    child, child_decl = variables[child_name]
    rows_expected = 1
    parents = []
    for token in decl.parents:
        if token.text not in variables:
            raise ParseError(token.line, token.column, f"unknown parent variable {token.text}")
        parent, parent_decl = variables[token.text]
        if parent in parents or parent == child:
            raise ParseError(token.line, token.column, f"invalid parent {token.text} of {child_name}")
        parents.append(parent)
        rows_expected *= len(parent_decl.states)
    if len(decl.rows) != rows_expected:
        raise ParseError(
            decl.opening.line,
            decl.opening.column,
            f"cpt of {child_name} has {len(decl.rows)} rows, expected {rows_expected}",
        )
    table = []
    for row in decl.rows:
        first = row[0]
        if len(row) != len(child_decl.states):
            raise ParseError(
                first.line,
                first.column,
                f"row has {len(row)} entries, {child_name} has {len(child_decl.states)} states",
            )
        values = tuple(_number(token) for token in row)
        total = math.fsum(values)
        if abs(total - 1.0) > config.ROW_TOLERANCE:
            raise ParseError(first.line, first.column, f"row sums to {total:.10g}")
        table.append(values)
    return Cpt(child=child, parents=tuple(parents), table=tuple(table))


def parse_network(text: str) -> BayesianNetwork:
    """Parse and validate a network; every failure surfaces as a ParseError."""
    cursor = _Cursor(tokenize(text))
    cursor.expect("ident", "network")
    name = cursor.expect("ident").text

    variables: dict[str, tuple[int, _VarDecl]] = {}
    cpts: dict[str, _CptDecl] = {}
    while (token := cursor.next()).kind != "eof":
        if token.kind == "ident" and token.text == "var":
            decl = _parse_var(cursor)
            if decl.name.text in variables:
                raise ParseError(decl.name.line, decl.name.column, f"variable {decl.name.text} declared twice")
            if len(set(decl.states)) != len(decl.states):
                raise ParseError(decl.name.line, decl.name.column, f"variable {decl.name.text} repeats a state")
            variables[decl.name.text] = (len(variables), decl)
        elif token.kind == "ident" and token.text == "cpt":
            decl = _parse_cpt(cursor)
            if decl.child.text in cpts:
                raise ParseError(decl.child.line, decl.child.column, f"second cpt for {decl.child.text}")
            cpts[decl.child.text] = decl
        else:
            raise ParseError(token.line, token.column, f"expected 'var' or 'cpt', found {token.text!r}")

    built = {child: _build_cpt(decl, variables) for child, decl in cpts.items()}
    for var_name, (_, decl) in variables.items():
        if var_name not in built:
            raise ParseError(decl.name.line, decl.name.column, f"variable {var_name} has no cpt")

    try:
        return BayesianNetwork(
            name=name,
            variables=tuple(
                Variable(id=index, name=var_name, states=tuple(decl.states))
                for var_name, (index, decl) in variables.items()
            ),
            cpts=tuple(sorted(built.values(), key=lambda cpt: cpt.child)),
        )
    except StructureError as ex:
        where = cpts.get(ex.variable).child if ex.variable in cpts else Token("", "", 1, 1)
        raise ParseError(where.line, where.column, str(ex))
    except ValidationError as ex:
        raise ParseError(1, 1, f"invalid network: {ex.errors()[0]['msg']}")


def _format_probability(value: float) -> str:
    return repr(float(value))


def serialize_network(net: BayesianNetwork) -> str:
    lines = [f"network {net.name}", ""]
    for variable in net.variables:
        lines.append(f"var {variable.name} {{ {', '.join(variable.states)} }}")
    for variable in net.variables:
        cpt = net.cpt(variable.id)
        head = f"cpt {variable.name}"
        if cpt.parents:
            head += " | " + " ".join(net.variables[p].name for p in cpt.parents)
        rows = [" ".join(_format_probability(p) for p in row) for row in cpt.table]
        lines.append("")
        lines.append(head + " {")
        lines.append(";\n".join(f"    {row}" for row in rows))
        lines.append("}")
    return "\n".join(lines) + "\n"


def _statement_tokens(cursor: _Cursor) -> list[Token]:
    tokens = []
    while cursor.peek().kind not in ("newline", "eof"):
        tokens.append(cursor.next())
    return tokens


def parse_problem(text: str, net: BayesianNetwork) -> MapProblem:
    cursor = _Cursor(tokenize(text, keep_newlines=True))
    seen: dict[str, Token] = {}
    map_vars: list[int] = []
    evidence: dict[int, int] = {}
    evidence_tokens: dict[int, Token] = {}

    def variable_of(token: Token) -> int:
        if token.kind != "ident":
            raise ParseError(token.line, token.column, f"expected a variable name, found {token.text!r}")
        try:
            return net.variable_id(token.text)
        except ProblemError as ex:
            raise ParseError(token.line, token.column, str(ex))

    while (keyword := cursor.next()).kind != "eof":
        if keyword.kind == "newline":
            continue
        if keyword.kind != "ident" or keyword.text not in ("map", "evidence"):
            raise ParseError(keyword.line, keyword.column, f"expected 'map' or 'evidence', found {keyword.text!r}")
        if keyword.text in seen:
            raise ParseError(keyword.line, keyword.column, f"second '{keyword.text}' line")
        seen[keyword.text] = keyword
        tokens = _statement_tokens(cursor)

        if keyword.text == "map":
            if not tokens:
                raise ParseError(keyword.line, keyword.column, "at least one MAP variable required")
            for token in tokens:
                variable = variable_of(token)
                if variable in map_vars:
                    raise ParseError(token.line, token.column, f"{token.text} listed twice")
                map_vars.append(variable)
            continue

        if len(tokens) % 3 != 0:
            last = tokens[-1]
            raise ParseError(last.line, last.column, "evidence entries look like NAME=STATE")
        for name, equals, state in zip(tokens[::3], tokens[1::3], tokens[2::3]):
            variable = variable_of(name)
            if equals.kind != "punct" or equals.text != "=":
                raise ParseError(equals.line, equals.column, f"expected '=', found {equals.text!r}")
            if state.kind != "ident":
                raise ParseError(state.line, state.column, f"expected a state name, found {state.text!r}")
            if variable in evidence:
                raise ParseError(name.line, name.column, f"{name.text} observed twice")
            try:
                evidence[variable] = net.variables[variable].state_index(state.text)
            except ProblemError as ex:
                raise ParseError(state.line, state.column, str(ex))
            evidence_tokens[variable] = name

    end = cursor.peek()
    for keyword in ("map", "evidence"):
        if keyword not in seen:
            raise ParseError(end.line, end.column, f"missing '{keyword}' line")
    for variable in map_vars:
        if variable in evidence:
            token = evidence_tokens[variable]
            raise ParseError(
                token.line, token.column, f"{token.text} is both a MAP and an evidence variable"
            )
    return MapProblem(map_vars=tuple(map_vars), evidence=Assignment.of(evidence))


def serialize_problem(problem: MapProblem, net: BayesianNetwork) -> str:
    names = " ".join(net.variables[v].name for v in problem.map_vars)
    observed = problem.evidence.describe(net)
    return f"map {names}\nevidence {observed}".rstrip() + "\n"


def _write_csv(columns: Iterable[str], records: Iterable[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buffer.getvalue()


def _exact(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def write_report(rows: Iterable[ReportRow]) -> str:
    """CSV with one header line and one line per row; probabilities at 17 significant digits."""
    records = []
    for row in rows:
        record = row.model_dump()
        record.update(
            algorithm=row.algorithm.value,
            log10_prob=_exact(row.log10_prob),
            prob=_exact(row.prob),
            wall_ms=f"{row.wall_ms:.3f}",
            matches_oracle="" if row.matches_oracle is None else int(row.matches_oracle),
        )
        records.append(record)
    return _write_csv(config.REPORT_COLUMNS, records)


def read_report(text: str) -> list[ReportRow]:
    rows = []
    for record in csv.DictReader(io.StringIO(text)):
        matches = record.pop("matches_oracle")
        for column in ("log10_prob", "prob"):
            if record[column] == "":
                record[column] = None
        rows.append(
            ReportRow(**record, matches_oracle=None if matches == "" else matches == "1")
        )
    return rows


def write_trace(rows: Iterable[TraceRow]) -> str:
    records = []
    for row in rows:
        record = row.model_dump()
        for column in ("temperature", "current_logp", "best_logp", "specific_heat"):
            record[column] = _exact(record[column])
        record["reheated"] = int(row.reheated)
        records.append(record)
    return _write_csv(config.TRACE_COLUMNS, records)
