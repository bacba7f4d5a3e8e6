"""Layered DAG obtained by unrolling an NFA ``n`` times.

Vertex ``(q, α)`` stands for state ``q`` after reading ``α`` symbols.  Two
pruning levels are kept as distinct values: *forward-pruned* (every vertex
reachable from layer 0) feeds the approximate counter, *fully-trimmed*
(every vertex also co-reachable to a final vertex at layer ``n``) feeds
exact counting and enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .automata import Nfa, fresh_name, iter_bits, remove_epsilon
from .errors import ContractViolation

FORWARD_PRUNED = "forward-pruned"
FULLY_TRIMMED = "fully-trimmed"
UNPRUNED = "unpruned"

Edge = tuple[int, int, int]  # (source state, symbol, target state), all indices


@dataclass(frozen=True)
class LayeredDag:
    """An unrolled NFA restricted to surviving vertices.

    ``layers[α]`` is the bitmask of surviving states at layer α, and
    ``edges[α]`` the sorted tuple of edges from layer α to layer α + 1.
    """

    nfa: Nfa
    layers: tuple[int, ...]
    edges: tuple[tuple[Edge, ...], ...]
    trim_mode: str = UNPRUNED

    @property
    def n(self) -> int:
        return len(self.layers) - 1

    @property
    def states(self) -> tuple[str, ...]:
        return self.nfa.states

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.nfa.alphabet

    @property
    def initial_layer0(self) -> int:
        return self.layers[0] & self.nfa.initial_mask

    @property
    def final_layern(self) -> int:
        return self.layers[-1] & self.nfa.final_mask

    def is_empty(self) -> bool:
        return not any(self.layers)

    def vertex_count(self) -> int:
        return sum(mask.bit_count() for mask in self.layers)

    def edge_count(self) -> int:
        return sum(len(es) for es in self.edges)

    def vertices(self) -> set[tuple[str, int]]:
        return {
            (self.states[q], alpha)
            for alpha, mask in enumerate(self.layers)
            for q in iter_bits(mask)
        }

    def named_edges(self) -> set[tuple[tuple[str, int], str, tuple[str, int]]]:
        return {
            ((self.states[p], alpha), self.alphabet[s], (self.states[q], alpha + 1))
            for alpha, es in enumerate(self.edges)
            for p, s, q in es
        }

    @cached_property
    def out_edges(self) -> list[dict[int, tuple[tuple[int, int], ...]]]:
        """``out_edges[α][p]``: ``(symbol, target)`` pairs sorted by symbol then target."""
        table: list[dict[int, list[tuple[int, int]]]] = [{} for _ in self.layers]
        for alpha, es in enumerate(self.edges):
            for p, s, q in es:
                table[alpha].setdefault(p, []).append((s, q))
        return [{p: tuple(sorted(v)) for p, v in layer.items()} for layer in table]

    @cached_property
    def predecessors(self) -> list[dict[int, list[int]]]:
        """``predecessors[α][q][s]``: bitmask of layer-(α-1) states with an ``s``-edge into ``q``."""
        sigma = len(self.alphabet)
        table: list[dict[int, list[int]]] = [{} for _ in self.layers]
        for alpha, es in enumerate(self.edges):
            for p, s, q in es:
                row = table[alpha + 1].setdefault(q, [0] * sigma)
                row[s] |= 1 << p
        return table

    def to_dot(self) -> str:
        """Graphviz rendering, vertices labelled ``state@layer``."""
        lines = ["digraph unrolled {", "  rankdir=LR;"]
        for name, alpha in sorted(self.vertices(), key=lambda v: (v[1], self.nfa.index[v[0]])):
            shape = "doublecircle" if alpha == self.n and name in self.nfa.final else "circle"
            lines.append(f'  "{name}@{alpha}" [shape={shape}];')
        for alpha, es in enumerate(self.edges):
            for p, s, q in es:
                lines.append(
                    f'  "{self.states[p]}@{alpha}" -> "{self.states[q]}@{alpha + 1}"'
                    f' [label="{self.alphabet[s]}"];'
                )
        lines.append("}")
        return "\n".join(lines) + "\n"


def _restrict(dag: LayeredDag, layers: list[int], mode: str) -> LayeredDag:
    edges = tuple(
        tuple(
            (p, s, q) for p, s, q in es
            if (layers[alpha] >> p) & 1 and (layers[alpha + 1] >> q) & 1
        )
        for alpha, es in enumerate(dag.edges)
    )
    return LayeredDag(dag.nfa, tuple(layers), edges, mode)


def full_unrolling(a: Nfa, n: int) -> LayeredDag:
    """All ``(n + 1) * |Q|`` vertices and every copied edge, unpruned."""
    if a.epsilon:
        raise ContractViolation("automaton has ε-transitions; call remove_epsilon first")
    if n < 0:
        raise ValueError("length must be non-negative")
    sym = a.symbol_index
    order = a.index
    base = tuple(sorted((order[p], sym[s], order[q]) for p, s, q in a.transitions))
    everything = (1 << len(a.states)) - 1
    return LayeredDag(a, (everything,) * (n + 1), (base,) * n, UNPRUNED)


def prune_forward(dag: LayeredDag) -> LayeredDag:
    """Drop every vertex that no path from ``I^0`` reaches."""
    layers = [dag.layers[0] & dag.nfa.initial_mask]
    for alpha, es in enumerate(dag.edges):
        current = layers[-1]
        nxt = 0
        for p, _, q in es:
            if (current >> p) & 1:
                nxt |= 1 << q
        layers.append(nxt & dag.layers[alpha + 1])
    mode = FULLY_TRIMMED if dag.trim_mode == FULLY_TRIMMED else FORWARD_PRUNED
    return _restrict(dag, layers, mode)


def _prune_backward(dag: LayeredDag) -> list[int]:
    layers = list(dag.layers)
    layers[-1] &= dag.nfa.final_mask
    for alpha in range(dag.n - 1, -1, -1):
        target = layers[alpha + 1]
        alive = 0
        for p, _, q in dag.edges[alpha]:
            if (target >> q) & 1:
                alive |= 1 << p
        layers[alpha] &= alive
    return layers


def build_unrolled(a: Nfa, n: int) -> LayeredDag:
    """Unroll ``a`` into ``n + 1`` layers, keeping only forward-reachable vertices."""
    return prune_forward(full_unrolling(a, n))


def trim(dag: LayeredDag) -> LayeredDag:
    """Keep exactly the vertices lying on some ``I^0 → F^n`` path.

    An empty language yields a dag with no vertices at all.
    """
    forward = prune_forward(dag)
    layers = _prune_backward(forward)
    if not layers[0]:
        layers = [0] * len(layers)
    return _restrict(forward, layers, FULLY_TRIMMED)


def cluster_finals(a: Nfa) -> Nfa:
    """Return an equivalent NFA whose only final state is a fresh ``qF``.

    Old final states get an ε-edge to the new state, then ε-moves are
    removed.  The result is ε-free.
    """
    target = fresh_name("qF", a.states)
    states = a.states + (target,)
    epsilon = set(a.epsilon) | {(f, target) for f in a.final}
    clustered = Nfa(states, a.alphabet, a.transitions, a.initial, {target}, epsilon)
    return remove_epsilon(clustered)


def layered_languages(dag: LayeredDag) -> list[dict[int, set[tuple[str, ...]]]]:
    """``L(q^α)`` for every vertex, by explicit enumeration (small inputs only)."""
    alphabet = dag.alphabet
    langs: list[dict[int, set[tuple[str, ...]]]] = [
        {q: {()} for q in iter_bits(dag.initial_layer0 & dag.layers[0])}
    ]
    for alpha, es in enumerate(dag.edges):
        nxt: dict[int, set[tuple[str, ...]]] = {}
        for p, s, q in es:
            if p in langs[alpha]:
                nxt.setdefault(q, set()).update(w + (alphabet[s],) for w in langs[alpha][p])
        langs.append(nxt)
    return langs


def dag_from_vertices(
    a: Nfa,
    layers: Iterable[Iterable[str]],
    edges: Iterable[tuple[tuple[str, int], str, tuple[str, int]]],
) -> LayeredDag:
    """Assemble a dag from named vertices and edges (used for hand-built cases)."""
    masks = [a.mask(layer) for layer in layers]
    per_layer: list[list[Edge]] = [[] for _ in range(len(masks) - 1)]
    for (p, alpha), s, (q, beta) in edges:
        if beta != alpha + 1:
            raise ValueError("edges must go from layer α to layer α + 1")
        per_layer[alpha].append((a.index[p], a.symbol_index[s], a.index[q]))
    return LayeredDag(a, tuple(masks), tuple(tuple(sorted(es)) for es in per_layer), UNPRUNED)
