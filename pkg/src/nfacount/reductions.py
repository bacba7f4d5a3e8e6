"""Compile counting problems into ``(Nfa, length)`` pairs.

Each adapter is witness-bijective: the words of length ``n`` accepted by the
produced automaton correspond one-to-one with the solutions of the source
problem, so counts, samples and enumerations carry over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

from .automata import Nfa, Word, fresh_name, remove_epsilon
from .errors import ContractViolation, ParseError

BITS = ("0", "1")


def _content_lines(text: str, comment: str = "#") -> list[tuple[int, list[str]]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split(comment, 1)[0].split()
        if tokens:
            out.append((lineno, tokens))
    return out


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", lineno) from None


# -- DNF -----------------------------------------------------------------------

Literal = tuple[int, bool]  # (variable, polarity)


@dataclass(frozen=True)
class DnfFormula:
    variable_count: int
    disjuncts: tuple[frozenset[Literal], ...]

    def __post_init__(self) -> None:
        for d in self.disjuncts:
            for var, _ in d:
                if not 1 <= var <= self.variable_count:
                    raise ValueError(f"variable {var} outside [1, {self.variable_count}]")

    @staticmethod
    def satisfiable(disjunct: frozenset[Literal]) -> bool:
        return not any((var, not pol) in disjunct for var, pol in disjunct)

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        """``assignment[j - 1]`` is the value of variable ``j``."""
        return any(all(assignment[v - 1] == pol for v, pol in d) for d in self.disjuncts)


def parse_dnf(text: str) -> DnfFormula:
    """DIMACS-like input: ``p dnf <vars> <disjuncts>``, then 0-terminated literal lists."""
    header: tuple[int, int] | None = None
    disjuncts: list[frozenset[Literal]] = []
    current: list[Literal] = []
    for lineno, tokens in _content_lines(text):
        if tokens[0] == "c":
            continue
        if tokens[0] == "p":
            if header is not None or len(tokens) != 4 or tokens[1] != "dnf":
                raise ParseError("header must be 'p dnf <variables> <disjuncts>'", lineno)
            header = (_int(tokens[2], lineno), _int(tokens[3], lineno))
            continue
        if header is None:
            raise ParseError("literals before the 'p dnf' header", lineno)
        for tok in tokens:
            lit = _int(tok, lineno)
            if lit == 0:
                disjuncts.append(frozenset(current))
                current = []
            elif abs(lit) > header[0]:
                raise ParseError(f"literal {lit} exceeds the variable count {header[0]}", lineno)
            else:
                current.append((abs(lit), lit > 0))
    if header is None:
        raise ParseError("missing 'p dnf' header")
    if current:
        raise ParseError("last disjunct is not 0-terminated")
    if len(disjuncts) != header[1]:
        raise ParseError(f"header announces {header[1]} disjuncts, found {len(disjuncts)}")
    return DnfFormula(header[0], tuple(disjuncts))


def dnf_to_nfa(f: DnfFormula) -> tuple[Nfa, int]:
    """Satisfying assignments as ``n``-bit words (bit ``j`` is variable ``j + 1``).

    A shared start state branches into one chain per satisfiable disjunct; a
    chain position forces the bit of a constrained variable and allows both
    bits otherwise.  Overlapping disjuncts make the result ambiguous.
    """
    n = f.variable_count
    start = "s"
    states = [start]
    transitions: set[tuple[str, str, str]] = set()
    final: set[str] = set()
    for i, d in enumerate(f.disjuncts):
        if not DnfFormula.satisfiable(d):
            continue
        forced = {var: pol for var, pol in d}
        chain = [start] + [f"d{i}_{j}" for j in range(1, n + 1)]
        states.extend(chain[1:])
        for j in range(1, n + 1):
            allowed = ("1",) if forced.get(j) is True else ("0",) if forced.get(j) is False else BITS
            for bit in allowed:
                transitions.add((chain[j - 1], bit, chain[j]))
        final.add(chain[-1])
    return Nfa(tuple(states), BITS, transitions, {start}, final), n


# -- OBDD / nOBDD ----------------------------------------------------------------

TERMINALS = ("T0", "T1")


@dataclass(frozen=True)
class ObddNode:
    """``var`` is ``None`` for an unlabeled (nondeterministic) node."""

    var: int | None
    children: tuple[str, ...]


@dataclass(frozen=True)
class Obdd:
    variable_count: int
    order: tuple[int, ...]
    nodes: Mapping[str, ObddNode]
    root: str

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(1, self.variable_count + 1)):
            raise ParseError("variable order must be a permutation of 1..n")
        known = set(self.nodes) | set(TERMINALS)
        if self.root not in known:
            raise ParseError(f"root {self.root!r} is not a node")
        for name, node in self.nodes.items():
            if name in TERMINALS:
                raise ParseError(f"{name} is reserved for terminals")
            if node.var is not None:
                if not 1 <= node.var <= self.variable_count:
                    raise ParseError(f"node {name!r} tests unknown variable {node.var}")
                if len(node.children) != 2:
                    raise ParseError(f"labeled node {name!r} needs exactly two children")
            for c in node.children:
                if c not in known:
                    raise ParseError(f"node {name!r} points to unknown node {c!r}")
        self._check_acyclic()

    @property
    def deterministic(self) -> bool:
        return all(node.var is not None for node in self.nodes.values())

    @cached_property
    def position(self) -> dict[int, int]:
        return {var: i for i, var in enumerate(self.order)}

    def _check_acyclic(self) -> None:
        colour: dict[str, int] = {}
        for start in self.nodes:
            if start in colour:
                continue
            stack = [(start, iter(self.nodes[start].children))]
            colour[start] = 1
            while stack:
                name, it = stack[-1]
                child = next(it, None)
                if child is None:
                    colour[name] = 2
                    stack.pop()
                elif child in self.nodes:
                    state = colour.get(child)
                    if state == 1:
                        raise ParseError(f"cycle through node {child!r}")
                    if state is None:
                        colour[child] = 1
                        stack.append((child, iter(self.nodes[child].children)))


def parse_obdd(text: str) -> Obdd:
    """Line format::

        vars 3
        order 1 2 3        # optional, defaults to 1..n
        root r
        node r 1 a T0      # labeled: id var lo hi
        node a - b c       # unlabeled: id - child...
    """
    n: int | None = None
    order: tuple[int, ...] | None = None
    root: str | None = None
    nodes: dict[str, ObddNode] = {}
    for lineno, tokens in _content_lines(text):
        key = tokens[0]
        if key == "vars" and len(tokens) == 2:
            n = _int(tokens[1], lineno)
        elif key == "order":
            order = tuple(_int(t, lineno) for t in tokens[1:])
        elif key == "root" and len(tokens) == 2:
            root = tokens[1]
        elif key == "node" and len(tokens) >= 3:
            name = tokens[1]
            if name in nodes:
                raise ParseError(f"duplicate node {name!r}", lineno)
            if tokens[2] == "-":
                if len(tokens) < 4:
                    raise ParseError("unlabeled node needs at least one child", lineno)
                nodes[name] = ObddNode(None, tuple(tokens[3:]))
            else:
                if len(tokens) != 5:
                    raise ParseError("labeled node must be 'node id var lo hi'", lineno)
                nodes[name] = ObddNode(_int(tokens[2], lineno), (tokens[3], tokens[4]))
        else:
            raise ParseError(f"unrecognised line {' '.join(tokens)!r}", lineno)
    if n is None or root is None:
        raise ParseError("missing 'vars' or 'root' line")
    return Obdd(n, order or tuple(range(1, n + 1)), nodes, root)


def obdd_evaluate(d: Obdd, bits: Sequence[bool]) -> bool:
    """Value under ``bits``, given in variable order; for nOBDDs, whether some path reaches T1."""
    value = {var: bits[i] for i, var in enumerate(d.order)}
    memo: dict[str, bool] = {"T0": False, "T1": True}

    def reaches(name: str) -> bool:
        if name not in memo:
            node = d.nodes[name]
            if node.var is None:
                memo[name] = any(reaches(c) for c in node.children)
            else:
                memo[name] = reaches(node.children[int(value[node.var])])
        return memo[name]

    return reaches(d.root)


def obdd_to_nfa(d: Obdd) -> tuple[Nfa, int]:
    """Accepted assignments as ``n``-bit words in variable order.

    States are ``node@i`` with ``i`` the number of bits read.  A node whose
    variable sits later in the order reads free bits until it is reached;
    unlabeled nodes become ε-edges, removed before returning.
    """
    n = d.variable_count
    pos = d.position
    states: list[str] = []
    seen: set[tuple[str, int]] = set()
    transitions: set[tuple[str, str, str]] = set()
    epsilon: set[tuple[str, str]] = set()

    def name(node: str, i: int) -> str:
        return f"{node}@{i}"

    todo = [(d.root, 0)]
    while todo:
        node, i = todo.pop()
        if (node, i) in seen:
            continue
        seen.add((node, i))
        states.append(name(node, i))
        successors: list[tuple[str | None, str, int]] = []
        if node == "T0":
            pass
        elif node == "T1":
            if i < n:
                successors = [(b, node, i + 1) for b in BITS]
        else:
            v = d.nodes[node]
            if v.var is None:
                successors = [(None, c, i) for c in v.children]
            elif i < pos[v.var]:
                successors = [(b, node, i + 1) for b in BITS]
            elif i == pos[v.var]:
                successors = [("0", v.children[0], i + 1), ("1", v.children[1], i + 1)]
            else:
                raise ParseError(f"node {node!r} tests variable {v.var} out of order")
        for bit, child, j in successors:
            if bit is None:
                epsilon.add((name(node, i), name(child, j)))
            else:
                transitions.add((name(node, i), bit, name(child, j)))
            todo.append((child, j))
    final = {name("T1", n)} & set(states)
    states.sort(key=lambda s: (int(s.rsplit("@", 1)[1]), s))
    a = Nfa(tuple(states), BITS, transitions, {name(d.root, 0)}, final, epsilon)
    return remove_epsilon(a), n


# -- regular path queries --------------------------------------------------------


@dataclass(frozen=True)
class LabeledGraph:
    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str, str]]

    def __post_init__(self) -> None:
        known = set(self.vertices)
        for u, _, v in self.edges:
            if u not in known or v not in known:
                raise ParseError(f"edge ({u}, {v}) uses an undeclared vertex")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted({label for _, label, _ in self.edges}))


def parse_graph(text: str) -> LabeledGraph:
    """``vertices v1 v2 ...`` lines and ``edge u label v`` lines."""
    vertices: list[str] = []
    edges: set[tuple[str, str, str]] = set()
    pending: list[tuple[int, tuple[str, str, str]]] = []
    for lineno, tokens in _content_lines(text):
        if tokens[0] == "vertices":
            for v in tokens[1:]:
                if v in vertices:
                    raise ParseError(f"duplicate vertex {v!r}", lineno)
                vertices.append(v)
        elif tokens[0] == "edge" and len(tokens) == 4:
            pending.append((lineno, (tokens[1], tokens[2], tokens[3])))
        else:
            raise ParseError(f"unrecognised line {' '.join(tokens)!r}", lineno)
    known = set(vertices)
    for lineno, (u, label, v) in pending:
        for x in (u, v):
            if x not in known:
                raise ParseError(f"undeclared vertex {x!r}", lineno)
        edges.add((u, label, v))
    return LabeledGraph(tuple(vertices), frozenset(edges))


def path_symbol(label: str, target: str) -> str:
    return f"{label}:{target}"


def rpq_to_nfa(g: LabeledGraph, r: Nfa, u: str, v: str, n: int) -> tuple[Nfa, int]:
    """Paths of length ``n`` from ``u`` to ``v`` whose label word ``r`` accepts.

    Each symbol is ``label:target``, so a word spells out the path it
    witnesses.  States are ``(x,q)`` pairs of a vertex and a query state.
    """
    if r.epsilon:
        raise ContractViolation("query automaton must be ε-free")
    for x in (u, v):
        if x not in g.vertices:
            raise ParseError(f"vertex {x!r} is not in the graph")

    def state(x: str, q: str) -> str:
        return f"({x},{q})"

    by_label: dict[str, list[tuple[str, str]]] = {}
    for p, a, q in r.transitions:
        by_label.setdefault(a, []).append((p, q))
    alphabet = sorted({path_symbol(a, y) for _, a, y in g.edges if a in by_label})
    transitions = {
        (state(x, p), path_symbol(a, y), state(y, q))
        for x, a, y in g.edges
        for p, q in by_label.get(a, ())
    }
    states = tuple(state(x, q) for x in g.vertices for q in r.states)
    a = Nfa(
        states,
        tuple(alphabet),
        transitions,
        {state(u, q) for q in r.initial},
        {state(v, q) for q in r.final},
    )
    return a, n


def decode_path(u: str, word: Word) -> list[tuple[str, str, str]]:
    """Edges of the path from ``u`` spelled by an RPQ word."""
    path = []
    x = u
    for sym in word:
        label, _, y = sym.rpartition(":")
        path.append((x, label, y))
        x = y
    return path


# -- binary encoding of larger alphabets ---------------------------------------


@dataclass(frozen=True)
class Binarized:
    """A binary automaton plus the fixed-width code relating both alphabets."""

    nfa: Nfa
    length: int
    width: int
    codes: Mapping[str, str]

    @cached_property
    def _decode_table(self) -> dict[str, str]:
        return {code: sym for sym, code in self.codes.items()}

    def encode(self, word: Sequence[str]) -> Word:
        return tuple("".join(self.codes[s] for s in word))

    def decode(self, bits: Sequence[str]) -> Word:
        text = "".join(bits)
        if len(text) % self.width:
            raise ValueError("bit string length is not a multiple of the code width")
        chunks = [text[i : i + self.width] for i in range(0, len(text), self.width)]
        try:
            return tuple(self._decode_table[c] for c in chunks)
        except KeyError as exc:
            raise ValueError(f"unused codeword {exc.args[0]!r}") from None


def binarize(a: Nfa, n: int) -> Binarized:
    """Replace each symbol by its ``⌈log2 |Σ|⌉``-bit index (most significant bit first).

    Every source state gets its own prefix tree of intermediate states, so
    distinct runs stay distinct and codewords of unused indices lead nowhere.
    """
    if not a.alphabet:
        raise ContractViolation("alphabet must be non-empty")
    a = remove_epsilon(a)
    width = max(1, math.ceil(math.log2(len(a.alphabet))))
    codes = {s: format(i, f"0{width}b") for i, s in enumerate(a.alphabet)}
    states = list(a.states)
    taken = set(states)
    transitions: set[tuple[str, str, str]] = set()
    trie: dict[tuple[str, str], str] = {}

    def node(p: str, prefix: str) -> str:
        if not prefix:
            return p
        key = (p, prefix)
        if key not in trie:
            fresh = fresh_name(f"{p}~{prefix}", taken)
            taken.add(fresh)
            states.append(fresh)
            trie[key] = fresh
        return trie[key]

    order = a.index
    sym = a.symbol_index
    for p, s, q in sorted(a.transitions, key=lambda t: (order[t[0]], sym[t[1]], order[t[2]])):
        code = codes[s]
        for i in range(width - 1):
            transitions.add((node(p, code[:i]), code[i], node(p, code[: i + 1])))
        transitions.add((node(p, code[:-1]), code[-1], q))
    binary = Nfa(tuple(states), BITS, transitions, a.initial, a.final)
    return Binarized(binary, n * width, width, codes)
