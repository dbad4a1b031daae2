"""Reading and writing network files.

The canonical format is JSON::

    {"name": "...",
     "variables": [{"name": "A", "states": ["a0", "a1"]}, ...],
     "cpts": [{"child": "A", "parents": [], "table": [0.3, 0.7]}, ...]}

with each table flattened row-major over ``parents + [child]``. A read-only
importer covers the subset of BIF 0.15 used by the public benchmark
repositories.
"""

from __future__ import annotations

import json
import re
import warnings
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import NetworkError, NormalizationWarning
from .factor import Factor
from .network import ROW_TOLERANCE, BayesianNetwork, Evidence, Variable

RENORMALIZE_LIMIT = 1e-6


def _normalized_rows(table: np.ndarray, label: str) -> np.ndarray:
    sums = table.sum(axis=-1, keepdims=True)
    drift = np.abs(sums - 1.0)
    worst = float(drift.max()) if drift.size else 0.0
    if worst > RENORMALIZE_LIMIT:
        raise NetworkError(
            f"CPT rows of {label!r} are not normalized (max deviation {worst:.3g})"
        )
    if worst > ROW_TOLERANCE:
        warnings.warn(
            f"renormalizing CPT rows of {label!r} (max deviation {worst:.3g})",
            NormalizationWarning,
            stacklevel=3,
        )
        return table / sums
    return table


def build_network(
    name: str,
    variables: list[tuple[str, list[str]]],
    cpts: Mapping[str, tuple[list[str], list[float]]],
) -> BayesianNetwork:
    """Assemble and validate a network from name-keyed parts."""
    ids = {}
    vs = []
    for i, (vname, states) in enumerate(variables):
        if vname in ids:
            raise NetworkError(f"variable {vname!r} declared twice")
        ids[vname] = i
        vs.append(Variable(i, vname, tuple(states)))
    parents = []
    factors = []
    for vname, _ in variables:
        if vname not in cpts:
            raise NetworkError(f"no CPT given for variable {vname!r}")
        pnames, values = cpts[vname]
        for p in pnames:
            if p not in ids:
                raise NetworkError(f"CPT of {vname!r} references unknown parent {p!r}")
        ps = tuple(ids[p] for p in pnames)
        x = ids[vname]
        cards = [vs[p].card for p in ps] + [vs[x].card]
        values = np.asarray(values, dtype=np.float64)
        if values.size != int(np.prod(cards)):
            raise NetworkError(
                f"CPT of {vname!r} has {values.size} entries, expected {int(np.prod(cards))}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise NetworkError(f"CPT of {vname!r} has negative or non-finite entries")
        table = _normalized_rows(values.reshape(cards), vname)
        parents.append(ps)
        factors.append(Factor(ps + (x,), table))
    extra = set(cpts) - set(ids)
    if extra:
        raise NetworkError(f"CPT given for undeclared variable {sorted(extra)[0]!r}")
    return BayesianNetwork(tuple(vs), tuple(parents), tuple(factors), name)


def parse_network(text: str, format: str = "json") -> BayesianNetwork:
    if format == "bif":
        return parse_bif(text)
    if format != "json":
        raise ValueError(f"unknown network format {format!r}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise NetworkError("network file must hold a JSON object")
    try:
        variables = [(str(v["name"]), [str(s) for s in v["states"]]) for v in doc["variables"]]
        cpts = {}
        for entry in doc["cpts"]:
            child = str(entry["child"])
            if child in cpts:
                raise NetworkError(f"two CPTs given for {child!r}")
            cpts[child] = ([str(p) for p in entry.get("parents", [])], list(entry["table"]))
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network document: missing or bad field {exc}") from exc
    return build_network(str(doc.get("name", "network")), variables, cpts)


def network_to_dict(net: BayesianNetwork) -> dict:
    return {
        "name": net.name,
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "cpts": [
            {
                "child": net.variables[x].name,
                "parents": [net.variables[p].name for p in net.parents[x]],
                "table": net.cpts[x].flat(),
            }
            for x in range(net.n)
        ],
    }


def serialize_network(net: BayesianNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=1)


def load_network(path: str | Path) -> BayesianNetwork:
    path = Path(path)
    fmt = "bif" if path.suffix.lower() == ".bif" else "json"
    return parse_network(path.read_text(), format=fmt)


def save_network(net: BayesianNetwork, path: str | Path) -> None:
    Path(path).write_text(serialize_network(net) + "\n")


def load_evidence(path: str | Path, net: BayesianNetwork) -> Evidence:
    """Read a JSON object mapping variable names to state labels or indices."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise NetworkError("evidence file must hold a JSON object")
    return net.evidence(doc)


def evidence_to_dict(net: BayesianNetwork, e: Evidence) -> dict[str, str]:
    return {net.variables[v].name: net.variables[v].states[s] for v, s in e.items()}


# BIF -------------------------------------------------------------------------

_BIF_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<word>[A-Za-z0-9_.\-+]+)
  | (?P<string>"[^"]*")
  | (?P<punct>[{}()\[\];,|=])
    """,
    re.VERBOSE | re.DOTALL,
)


def _bif_tokens(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _BIF_TOKEN.match(text, pos)
        if m is None:
            line = text.count("\n", 0, pos) + 1
            raise NetworkError(f"BIF syntax error at line {line}: unexpected {text[pos]!r}")
        if m.lastgroup != "ws":
            tok = m.group()
            if m.lastgroup == "string":
                tok = tok[1:-1]
            tokens.append((tok, pos))
        pos = m.end()
    return tokens


class _BifParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _bif_tokens(text)
        self.i = 0

    def line(self) -> int:
        pos = self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)
        return self.text.count("\n", 0, pos) + 1

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def next(self) -> str:
        if self.i >= len(self.tokens):
            raise NetworkError("BIF syntax error: unexpected end of file")
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        line = self.line()
        got = self.next()
        if got != tok:
            raise NetworkError(f"BIF syntax error at line {line}: expected {tok!r}, got {got!r}")

    def skip_block(self) -> None:
        depth = 0
        while True:
            tok = self.next()
            if tok == "{":
                depth += 1
            elif tok == "}":
                depth -= 1
                if depth == 0:
                    return

    def skip_property(self) -> None:
        while self.next() != ";":
            pass

    def parse(self) -> BayesianNetwork:
        name = "network"
        variables: list[tuple[str, list[str]]] = []
        cards: dict[str, int] = {}
        cpts: dict[str, tuple[list[str], list[float]]] = {}
        while self.peek() is not None:
            line = self.line()
            kw = self.next()
            if kw == "network":
                name = self.next()
                self.skip_block()
            elif kw == "variable":
                vname, states = self.variable()
                variables.append((vname, states))
                cards[vname] = len(states)
            elif kw == "probability":
                child, parents, values = self.probability(cards, variables)
                cpts[child] = (parents, values)
            else:
                raise NetworkError(f"unsupported BIF construct {kw!r} at line {line}")
        return build_network(name, variables, cpts)

    def variable(self) -> tuple[str, list[str]]:
        vname = self.next()
        self.expect("{")
        states = None
        while self.peek() != "}":
            line = self.line()
            kw = self.next()
            if kw == "type":
                kind = self.next()
                if kind != "discrete":
                    raise NetworkError(f"unsupported BIF construct 'type {kind}' at line {line}")
                self.expect("[")
                count = int(self.next())
                self.expect("]")
                self.expect("{")
                states = []
                while self.peek() != "}":
                    tok = self.next()
                    if tok != ",":
                        states.append(tok)
                self.expect("}")
                self.expect(";")
                if len(states) != count:
                    raise NetworkError(
                        f"variable {vname!r} declares {count} states but lists {len(states)}"
                    )
            elif kw == "property":
                self.skip_property()
            else:
                raise NetworkError(f"unsupported BIF construct {kw!r} at line {line}")
        self.expect("}")
        if states is None:
            raise NetworkError(f"variable {vname!r} has no type declaration")
        return vname, states

    def probability(self, cards, variables):
        self.expect("(")
        names = []
        while self.peek() != ")":
            tok = self.next()
            if tok not in (",", "|"):
                names.append(tok)
        self.expect(")")
        child, parents = names[0], names[1:]
        for v in names:
            if v not in cards:
                raise NetworkError(f"probability block references unknown variable {v!r}")
        state_index = {n: {s: i for i, s in enumerate(st)} for n, st in variables}
        pcards = [cards[p] for p in parents]
        rows = np.full(pcards + [cards[child]], np.nan)
        self.expect("{")
        while self.peek() != "}":
            line = self.line()
            tok = self.peek()
            if tok == "table":
                self.next()
                if parents:
                    raise NetworkError(
                        f"unsupported BIF construct 'table' with parents at line {line}"
                    )
                rows[...] = self.numbers(cards[child])
            elif tok == "(":
                self.next()
                labels = []
                while self.peek() != ")":
                    t = self.next()
                    if t != ",":
                        labels.append(t)
                self.expect(")")
                if len(labels) != len(parents):
                    raise NetworkError(f"BIF row at line {line} has wrong parent arity")
                try:
                    idx = tuple(state_index[p][s] for p, s in zip(parents, labels))
                except KeyError as exc:
                    raise NetworkError(f"unknown state {exc} in BIF row at line {line}") from None
                rows[idx] = self.numbers(cards[child])
            elif tok in ("default", "property"):
                raise NetworkError(f"unsupported BIF construct {tok!r} at line {line}")
            else:
                raise NetworkError(f"unsupported BIF construct {tok!r} at line {line}")
        self.expect("}")
        if np.isnan(rows).any():
            raise NetworkError(f"probability block for {child!r} leaves rows unspecified")
        return child, parents, rows.reshape(-1).tolist()

    def numbers(self, count: int) -> list[float]:
        out = []
        while True:
            tok = self.next()
            if tok == ";":
                break
            if tok == ",":
                continue
            try:
                out.append(float(tok))
            except ValueError:
                raise NetworkError(f"expected a number in BIF table, got {tok!r}") from None
        if len(out) != count:
            raise NetworkError(f"BIF row has {len(out)} entries, expected {count}")
        return out


def parse_bif(text: str) -> BayesianNetwork:
    return _BifParser(text).parse()
