"""Plain-text problem formats.

Edge list::

    p <n> <m>
    <u> <v> [w]        # m lines, 0-indexed, w defaults to 1

Ising (``ising n``) and QUBO (``qubo n``) files share one layout: ``i j value``
lines for pair terms, ``i value`` lines for linear terms, and an optional
``offset value`` line. Blank lines and ``#`` comments are ignored. Floats are
written with ``repr`` so a parse/serialize round trip is lossless.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from cimsim.ising import Graph, IsingModel, QuboModel


class FormatError(ValueError):
    pass


def _lines(text: str) -> list[list[str]]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line.split())
    return out


def _num(tok: str) -> str:
    v = float(tok)
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def dumps_graph(g: Graph) -> str:
    rows = [f"p {g.n} {g.m}"]
    rows += [f"{u} {v} {_num(w)}" for u, v, w in g.edges]
    return "\n".join(rows) + "\n"


def loads_graph(text: str) -> Graph:
    lines = _lines(text)
    if not lines or lines[0][0] != "p" or len(lines[0]) != 3:
        raise FormatError("edge list must start with 'p n m'")
    try:
        n, m = int(lines[0][1]), int(lines[0][2])
        edges = []
        for tok in lines[1:]:
            if len(tok) not in (2, 3):
                raise FormatError(f"bad edge line: {' '.join(tok)}")
            w = float(tok[2]) if len(tok) == 3 else 1.0
            edges.append((int(tok[0]), int(tok[1]), w))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if len(edges) != m:
        raise FormatError(f"header announces {m} edges, found {len(edges)}")
    return Graph(n, tuple(edges))


def _dumps_quadratic(header: str, n: int, pairs: dict, linear, offset: float) -> str:
    rows = [f"{header} {n}"]
    rows += [f"{i} {j} {_num(v)}" for (i, j), v in sorted(pairs.items())]
    if linear is not None:
        rows += [f"{i} {_num(v)}" for i, v in enumerate(linear) if v != 0]
    if offset != 0:
        rows.append(f"offset {_num(offset)}")
    return "\n".join(rows) + "\n"


def _loads_quadratic(text: str, header: str):
    lines = _lines(text)
    if not lines or lines[0][0] != header or len(lines[0]) != 2:
        raise FormatError(f"file must start with '{header} n'")
    try:
        n = int(lines[0][1])
        pairs: dict[tuple[int, int], float] = {}
        linear = np.zeros(n)
        has_linear = False
        offset = 0.0
        for tok in lines[1:]:
            if tok[0] == "offset" and len(tok) == 2:
                offset += float(tok[1])
            elif len(tok) == 3:
                key = (int(tok[0]), int(tok[1]))
                key = key if key[0] < key[1] else key[::-1]
                pairs[key] = pairs.get(key, 0.0) + float(tok[2])
            elif len(tok) == 2:
                i = int(tok[0])
                if not 0 <= i < n:
                    raise FormatError(f"linear index {i} outside [0, {n})")
                linear[i] += float(tok[1])
                has_linear = True
            else:
                raise FormatError(f"bad line: {' '.join(tok)}")
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return n, pairs, (linear if has_linear else None), offset


def dumps_ising(m: IsingModel) -> str:
    return _dumps_quadratic("ising", m.n, m.couplings, m.field, m.offset)


def loads_ising(text: str) -> IsingModel:
    n, pairs, h, offset = _loads_quadratic(text, "ising")
    return IsingModel(n, pairs, h, offset)


def dumps_qubo(q: QuboModel) -> str:
    return _dumps_quadratic("qubo", q.n, q.quadratic, q.linear, q.offset)


def loads_qubo(text: str) -> QuboModel:
    n, pairs, lin, offset = _loads_quadratic(text, "qubo")
    return QuboModel(n, lin, pairs, offset)


def load_problem(path) -> Graph | IsingModel | QuboModel:
    """Read any of the three formats, dispatching on the header keyword."""
    text = Path(path).read_text()
    lines = _lines(text)
    if not lines:
        raise FormatError(f"{path}: empty file")
    kind = lines[0][0]
    if kind == "p":
        return loads_graph(text)
    if kind == "ising":
        return loads_ising(text)
    if kind == "qubo":
        return loads_qubo(text)
    raise FormatError(f"{path}: unknown header '{kind}'")
