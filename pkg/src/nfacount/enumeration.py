"""Resumable enumeration of ``L_n(A)`` without repetition.

* :class:`EnumerationSession` is a depth-first traversal of the trimmed dag of
  an unambiguous NFA.  Every branch of a trimmed dag completes, so between two
  outputs the traversal pops at most ``n`` vertices and pushes at most ``n``.
* :class:`FlashlightSession` works for any NFA: it grows a prefix symbol by
  symbol and only extends it when the reached state set still meets a
  vertex of the trimmed dag, i.e. when some completion is accepted.

Both count primitive steps (vertex pushes, pops and cursor moves) so the delay
between outputs can be asserted in tests.  ``snapshot()`` returns a plain
JSON-friendly dict and ``resume()`` rebuilds an identical session from it.
"""

from __future__ import annotations

from typing import Iterator

from .automata import Nfa, Word, iter_bits, remove_epsilon
from .exact import _require_unambiguous, ufa_dag
from .unroll import LayeredDag, build_unrolled, trim

PRECOMPUTED = "precomputation-done"
ENUMERATING = "enumerating"
EXHAUSTED = "exhausted"


class EnumerationSession:
    """Constant-delay DFS over a fully-trimmed dag."""

    def __init__(self, dag: LayeredDag):
        self.dag = dag
        self.roots = list(iter_bits(dag.initial_layer0))
        self.root_cursor = 0
        # stack entries are [layer, state, next-edge cursor]
        self.dfs_stack: list[list[int]] = []
        self.partial_word: list[int] = []
        self.phase = PRECOMPUTED if self.roots else EXHAUSTED
        self.step_counter = 0
        self.max_delay = 0
        self.emitted = 0

    def __iter__(self) -> Iterator[Word]:
        return self

    def _push(self, alpha: int, state: int) -> None:
        self.dfs_stack.append([alpha, state, 0])
        self.step_counter += 1

    def __next__(self) -> Word:
        if self.phase == EXHAUSTED:
            raise StopIteration
        dag = self.dag
        n = dag.n
        out_edges = dag.out_edges
        if self.phase == PRECOMPUTED:
            self.phase = ENUMERATING
            self.step_counter = 0
            self._push(0, self.roots[0])
        else:
            # leave the leaf emitted last time
            self.dfs_stack.pop()
            if self.partial_word:
                self.partial_word.pop()
            self.step_counter += 1

        stack = self.dfs_stack
        while True:
            if not stack:
                self.root_cursor += 1
                if self.root_cursor >= len(self.roots):
                    self.phase = EXHAUSTED
                    raise StopIteration
                self._push(0, self.roots[self.root_cursor])
                continue
            top = stack[-1]
            alpha, p, cursor = top
            if alpha == n:
                return self._emit()
            edges = out_edges[alpha].get(p, ())
            if cursor < len(edges):
                s, q = edges[cursor]
                top[2] = cursor + 1
                self.partial_word.append(s)
                self._push(alpha + 1, q)
            else:
                stack.pop()
                if self.partial_word and alpha > 0:
                    self.partial_word.pop()
                self.step_counter += 1

    def _emit(self) -> Word:
        self.max_delay = max(self.max_delay, self.step_counter)
        self.step_counter = 0
        self.emitted += 1
        alphabet = self.dag.alphabet
        return tuple(alphabet[s] for s in self.partial_word)

    def snapshot(self) -> dict:
        states = self.dag.states
        return {
            "kind": "dfs",
            "phase": self.phase,
            "root_cursor": self.root_cursor,
            "stack": [[alpha, states[p], c] for alpha, p, c in self.dfs_stack],
            "word": [self.dag.alphabet[s] for s in self.partial_word],
            "emitted": self.emitted,
        }

    @classmethod
    def resume(cls, dag: LayeredDag, snap: dict) -> "EnumerationSession":
        session = cls(dag)
        index = dag.nfa.index
        session.phase = snap["phase"]
        session.root_cursor = snap["root_cursor"]
        session.dfs_stack = [[alpha, index[p], c] for alpha, p, c in snap["stack"]]
        session.partial_word = [dag.nfa.symbol_index[s] for s in snap["word"]]
        session.emitted = snap["emitted"]
        return session


class FlashlightSession:
    """Polynomial-delay prefix search for arbitrary NFAs."""

    def __init__(self, dag: LayeredDag):
        self.dag = dag
        self.nfa = dag.nfa
        # stack entries are [reached-state mask, next-symbol cursor]; depth = layer
        self.stack: list[list[int]] = []
        self.partial_word: list[int] = []
        start = dag.initial_layer0 & dag.layers[0]
        self.phase = PRECOMPUTED if start else EXHAUSTED
        self._start = start
        self.step_counter = 0
        self.max_delay = 0
        self.emitted = 0

    def __iter__(self) -> Iterator[Word]:
        return self

    def __next__(self) -> Word:
        if self.phase == EXHAUSTED:
            raise StopIteration
        n = self.dag.n
        sigma = len(self.nfa.alphabet)
        layers = self.dag.layers
        if self.phase == PRECOMPUTED:
            self.phase = ENUMERATING
            self.stack.append([self._start, 0])
            self.step_counter = 1
        else:
            self._pop()

        stack = self.stack
        while stack:
            depth = len(stack) - 1
            top = stack[-1]
            if depth == n:
                return self._emit()
            mask, cursor = top
            advanced = False
            while cursor < sigma:
                s = cursor
                cursor += 1
                self.step_counter += 1
                nxt = self.nfa.step(mask, s) & layers[depth + 1]
                if nxt:
                    top[1] = cursor
                    self.partial_word.append(s)
                    stack.append([nxt, 0])
                    advanced = True
                    break
            if not advanced:
                self._pop()
        self.phase = EXHAUSTED
        raise StopIteration

    def _pop(self) -> None:
        self.stack.pop()
        if self.partial_word and len(self.partial_word) > len(self.stack) - 1:
            self.partial_word.pop()
        self.step_counter += 1

    def _emit(self) -> Word:
        self.max_delay = max(self.max_delay, self.step_counter)
        self.step_counter = 0
        self.emitted += 1
        return tuple(self.nfa.alphabet[s] for s in self.partial_word)

    def snapshot(self) -> dict:
        return {
            "kind": "flashlight",
            "phase": self.phase,
            "cursors": [c for _, c in self.stack],
            "word": [self.nfa.alphabet[s] for s in self.partial_word],
            "emitted": self.emitted,
        }

    @classmethod
    def resume(cls, dag: LayeredDag, snap: dict) -> "FlashlightSession":
        session = cls(dag)
        session.phase = snap["phase"]
        session.emitted = snap["emitted"]
        word = [session.nfa.symbol_index[s] for s in snap["word"]]
        session.partial_word = list(word)
        if snap["cursors"]:
            mask = session._start
            stack = [[mask, snap["cursors"][0]]]
            for depth, (s, c) in enumerate(zip(word, snap["cursors"][1:])):
                mask = session.nfa.step(mask, s) & dag.layers[depth + 1]
                stack.append([mask, c])
            session.stack = stack
        return session


def ufa_session(a: Nfa, n: int) -> EnumerationSession:
    a = remove_epsilon(a)
    _require_unambiguous(a)
    return EnumerationSession(ufa_dag(a, n))


def nfa_session(a: Nfa, n: int) -> FlashlightSession:
    return FlashlightSession(trim(build_unrolled(remove_epsilon(a), n)))


def enumerate_ufa(a: Nfa, n: int) -> Iterator[Word]:
    """Every word of ``L_n(a)`` exactly once, for unambiguous ``a``."""
    return ufa_session(a, n)


def enumerate_nfa(a: Nfa, n: int) -> Iterator[Word]:
    """Every word of ``L_n(a)`` exactly once, for any NFA."""
    return nfa_session(a, n)
