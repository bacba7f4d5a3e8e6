"""Nondeterministic finite automata: representation, text format, simulation.

State and symbol identifiers are plain strings.  Internally every state is
addressed by its position in ``Nfa.states`` and sets of states are stored as
integer bitmasks (bit ``i`` set means ``states[i]`` is a member), which keeps
simulation and the product constructions cheap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import ContractViolation, NfaParseError

Word = tuple[str, ...]


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    while name in taken:
        name += "'"
    return name


@dataclass(frozen=True)
class Nfa:
    """An NFA ``(Q, Σ, Δ, I, F)`` with optional ε-transitions.

    The order of ``states`` is the canonical total order used wherever the
    algorithms need one (declaration order in the text format).
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: frozenset[tuple[str, str, str]]
    initial: frozenset[str]
    final: frozenset[str]
    epsilon: frozenset[tuple[str, str]] = field(default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "transitions", frozenset(tuple(t) for t in self.transitions))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "final", frozenset(self.final))
        object.__setattr__(self, "epsilon", frozenset(tuple(e) for e in self.epsilon))

        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state identifiers")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate alphabet symbols")
        known = set(self.states)
        symbols = set(self.alphabet)
        for p, a, q in self.transitions:
            if p not in known or q not in known:
                raise ValueError(f"transition {(p, a, q)} uses an undeclared state")
            if a not in symbols:
                raise ValueError(f"transition {(p, a, q)} uses an undeclared symbol")
        for p, q in self.epsilon:
            if p not in known or q not in known:
                raise ValueError(f"ε-transition {(p, q)} uses an undeclared state")
        if not self.initial <= known:
            raise ValueError("initial states must be declared")
        if not self.final <= known:
            raise ValueError("final states must be declared")

    # -- indexed views -------------------------------------------------

    @cached_property
    def index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.states)}

    @cached_property
    def symbol_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @cached_property
    def delta(self) -> list[list[int]]:
        """``delta[p][a]`` is the bitmask of ``a``-successors of state ``p``."""
        table = [[0] * len(self.alphabet) for _ in self.states]
        for p, a, q in self.transitions:
            table[self.index[p]][self.symbol_index[a]] |= 1 << self.index[q]
        return table

    @cached_property
    def initial_mask(self) -> int:
        return self.mask(self.initial)

    @cached_property
    def final_mask(self) -> int:
        return self.mask(self.final)

    def mask(self, states: Iterable[str]) -> int:
        m = 0
        for q in states:
            m |= 1 << self.index[q]
        return m

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(self.states[i] for i in iter_bits(mask))

    def step(self, mask: int, symbol: int) -> int:
        """Image of a state set under one symbol (given by index)."""
        out = 0
        delta = self.delta
        for i in iter_bits(mask):
            out |= delta[i][symbol]
        return out

    def encode_word(self, word: Sequence[str]) -> list[int]:
        try:
            return [self.symbol_index[a] for a in word]
        except KeyError as exc:
            raise ValueError(f"symbol {exc.args[0]!r} is not in the alphabet") from None

    @property
    def has_epsilon(self) -> bool:
        return bool(self.epsilon)

    def __repr__(self) -> str:
        return (
            f"Nfa(states={len(self.states)}, alphabet={list(self.alphabet)}, "
            f"transitions={len(self.transitions)}, initial={sorted(self.initial)}, "
            f"final={sorted(self.final)}, epsilon={len(self.epsilon)})"
        )


# -- text format -------------------------------------------------------

_LIST_KEYS = ("alphabet", "states", "initial", "final")


def parse_nfa(text: str) -> Nfa:
    """Parse the line-oriented NFA text format.

    Recognised lines (``#`` starts a comment)::

        alphabet: a b
        states: q0 q1 q2
        initial: q0
        final: q2
        trans: q0 a q1
        eps: q1 q2
    """
    lists: dict[str, list[tuple[str, int]]] = {k: [] for k in _LIST_KEYS}
    seen: set[str] = set()
    trans: list[tuple[tuple[str, ...], int]] = []
    eps: list[tuple[tuple[str, ...], int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep:
            raise NfaParseError(f"expected 'key: values', got {raw.strip()!r}", lineno)
        tokens = rest.split()
        if key in _LIST_KEYS:
            seen.add(key)
            lists[key].extend((t, lineno) for t in tokens)
        elif key == "trans":
            if len(tokens) != 3:
                raise NfaParseError("'trans:' needs exactly 'source symbol target'", lineno)
            trans.append((tuple(tokens), lineno))
        elif key == "eps":
            if len(tokens) != 2:
                raise NfaParseError("'eps:' needs exactly 'source target'", lineno)
            eps.append((tuple(tokens), lineno))
        else:
            raise NfaParseError(f"unknown key {key!r}", lineno)

    for key in ("alphabet", "states"):
        if key not in seen:
            raise NfaParseError(f"missing '{key}:' line")

    states: list[str] = []
    for q, lineno in lists["states"]:
        if q in states:
            raise NfaParseError(f"duplicate state {q!r}", lineno)
        states.append(q)
    alphabet: list[str] = []
    for a, lineno in lists["alphabet"]:
        if a in alphabet:
            raise NfaParseError(f"duplicate symbol {a!r}", lineno)
        alphabet.append(a)

    known, symbols = set(states), set(alphabet)

    def check_state(q: str, lineno: int) -> str:
        if q not in known:
            raise NfaParseError(f"undeclared state {q!r}", lineno)
        return q

    initial = {check_state(q, ln) for q, ln in lists["initial"]}
    final = {check_state(q, ln) for q, ln in lists["final"]}
    transitions = set()
    for (p, a, q), lineno in trans:
        check_state(p, lineno)
        check_state(q, lineno)
        if a not in symbols:
            raise NfaParseError(f"undeclared symbol {a!r}", lineno)
        transitions.add((p, a, q))
    epsilon = {(check_state(p, ln), check_state(q, ln)) for (p, q), ln in eps}
    return Nfa(states, alphabet, transitions, initial, final, epsilon)


def serialize_nfa(a: Nfa) -> str:
    """Inverse of :func:`parse_nfa`; output is deterministic."""
    order = a.index
    sym = a.symbol_index
    lines = [
        "alphabet: " + " ".join(a.alphabet),
        "states: " + " ".join(a.states),
        "initial: " + " ".join(sorted(a.initial, key=order.__getitem__)),
        "final: " + " ".join(sorted(a.final, key=order.__getitem__)),
    ]
    for p, s, q in sorted(a.transitions, key=lambda t: (order[t[0]], sym[t[1]], order[t[2]])):
        lines.append(f"trans: {p} {s} {q}")
    for p, q in sorted(a.epsilon, key=lambda e: (order[e[0]], order[e[1]])):
        lines.append(f"eps: {p} {q}")
    return "\n".join(lines) + "\n"


# -- ε-removal and simulation -------------------------------------------


def epsilon_closures(a: Nfa) -> list[int]:
    """``closure[i]`` is the bitmask of states reachable from ``i`` by ε-moves."""
    succ = [0] * len(a.states)
    for p, q in a.epsilon:
        succ[a.index[p]] |= 1 << a.index[q]
    closures = []
    for i in range(len(a.states)):
        seen = 1 << i
        frontier = [i]
        while frontier:
            j = frontier.pop()
            new = succ[j] & ~seen
            seen |= new
            frontier.extend(iter_bits(new))
        closures.append(seen)
    return closures


def remove_epsilon(a: Nfa) -> Nfa:
    """Fold ε-moves into the letter transitions.

    Every target of a letter transition is replaced by its ε-closure and the
    initial set by the closure of the initial states.  The final set is left
    untouched, so a single final state stays single.  No state is deleted.
    """
    if not a.epsilon:
        return a
    closure = epsilon_closures(a)

    def close(mask: int) -> int:
        out = 0
        for i in iter_bits(mask):
            out |= closure[i]
        return out

    transitions = set()
    for p, s, q in a.transitions:
        for r in iter_bits(closure[a.index[q]]):
            transitions.add((p, s, a.states[r]))
    initial = a.names(close(a.initial_mask))
    return Nfa(a.states, a.alphabet, transitions, initial, a.final)


def _require_epsilon_free(a: Nfa) -> None:
    if a.epsilon:
        raise ContractViolation("automaton has ε-transitions; call remove_epsilon first")


def reachable_mask(a: Nfa, word: Sequence[str]) -> int:
    _require_epsilon_free(a)
    mask = a.initial_mask
    for s in a.encode_word(word):
        if not mask:
            break
        mask = a.step(mask, s)
    return mask


def reachable_states(a: Nfa, word: Sequence[str]) -> frozenset[str]:
    """States reachable from an initial state along a path labelled ``word``."""
    return a.names(reachable_mask(a, word))


def membership(a: Nfa, word: Sequence[str]) -> bool:
    """True iff ``a`` accepts ``word``; linear in ``len(word) * |Δ|``."""
    return bool(reachable_mask(a, word) & a.final_mask)


def accepts_some_word(a: Nfa) -> bool:
    """True iff ``L(a)`` is non-empty (some final state is reachable)."""
    a = remove_epsilon(a)
    return bool(_forward_closure(a, a.initial_mask) & a.final_mask)


# -- ambiguity -----------------------------------------------------------


def is_unambiguous(a: Nfa) -> bool:
    """Decide unambiguity with the trimmed self-product.

    A pair ``(p, q)`` of the product survives trimming iff it lies on a pair
    of accepting runs over the same word that sit in ``p`` and ``q`` at the
    same position.  Two distinct accepting runs differ somewhere, so the NFA
    is ambiguous exactly when an off-diagonal pair survives.
    """
    _require_epsilon_free(a)
    sigma = len(a.alphabet)
    delta = a.delta

    def successors(p: int, q: int) -> Iterator[tuple[int, int]]:
        for s in range(sigma):
            dq = delta[q][s]
            if not dq:
                continue
            for p2 in iter_bits(delta[p][s]):
                for q2 in iter_bits(dq):
                    yield p2, q2

    start = [(p, q) for p in iter_bits(a.initial_mask) for q in iter_bits(a.initial_mask)]
    forward = set(start)
    queue = deque(start)
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
    while queue:
        node = queue.popleft()
        succ = list(successors(*node))
        edges[node] = succ
        for nxt in succ:
            if nxt not in forward:
                forward.add(nxt)
                queue.append(nxt)

    reverse: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for src, succ in edges.items():
        for dst in succ:
            reverse.setdefault(dst, []).append(src)
    finals = [
        (p, q) for (p, q) in forward
        if (a.final_mask >> p) & 1 and (a.final_mask >> q) & 1
    ]
    backward = set(finals)
    queue = deque(finals)
    while queue:
        node = queue.popleft()
        for prev in reverse.get(node, ()):
            if prev not in backward:
                backward.add(prev)
                queue.append(prev)

    return all(p == q for (p, q) in forward & backward)


# -- self-reduction ------------------------------------------------------


def self_reduce_step(a: Nfa, length: int, symbol: str) -> Nfa:
    """Shorten the instance ``(a, length)`` by its first symbol.

    ``Q_b`` is the set of states reached from the initial states by
    ``symbol``.  When no run can re-enter ``Q_b`` (no transition leads from a
    state reachable from ``Q_b`` back into it), ``Q_b`` is merged into one
    fresh initial state and transitions touching it are redirected.
    Otherwise merging would create runs that do not exist in ``a``, so the
    states and transitions are kept and ``Q_b`` becomes the initial set.
    Either way, for every ``y`` of length ``length - 1`` the result accepts
    ``y`` iff ``a`` accepts ``symbol + y``, and neither the number of states
    nor the number of transitions grows.

    If no initial state has a ``symbol``-transition the result is a single
    non-final state with no transitions (empty language).
    """
    _require_epsilon_free(a)
    if length < 1:
        raise ContractViolation("length must be at least 1")
    if len(a.final) != 1:
        raise ContractViolation("self-reduction needs exactly one final state")
    if symbol not in a.symbol_index:
        raise ValueError(f"symbol {symbol!r} is not in the alphabet")

    merged_mask = a.step(a.initial_mask, a.symbol_index[symbol])
    merged = a.names(merged_mask)
    start = fresh_name("q0", a.states)
    if not merged:
        return Nfa((start,), a.alphabet, (), {start}, ())

    reach = _forward_closure(a, merged_mask)
    reentered = any(
        (reach >> a.index[p]) & 1 and q in merged for p, _, q in a.transitions
    )
    if reentered:
        return Nfa(a.states, a.alphabet, a.transitions, merged, a.final)

    def image(q: str) -> str:
        return start if q in merged else q

    states = tuple(q for q in a.states if q not in merged) + (start,)
    transitions = {(image(p), s, image(q)) for p, s, q in a.transitions}
    (qf,) = a.final
    return Nfa(states, a.alphabet, transitions, {start}, {image(qf)})


def _forward_closure(a: Nfa, mask: int) -> int:
    seen = frontier = mask
    while frontier:
        nxt = 0
        for s in range(len(a.alphabet)):
            nxt |= a.step(frontier, s)
        frontier = nxt & ~seen
        seen |= nxt
    return seen
