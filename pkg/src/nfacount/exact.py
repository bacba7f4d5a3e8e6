"""Exact counting and sampling for unambiguous NFAs, plus brute-force oracles."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .automata import Nfa, Word, is_unambiguous, membership, remove_epsilon
from .errors import ContractViolation, EmptyLanguageError, OracleCapExceeded
from .unroll import FULLY_TRIMMED, LayeredDag, build_unrolled, cluster_finals, trim

DEFAULT_CAP = 2**20


def suffix_counts(dag: LayeredDag) -> list[dict[int, int]]:
    """``counts[α][q]``: number of paths from ``q^α`` to a final vertex at layer n."""
    n = dag.n
    counts: list[dict[int, int]] = [{} for _ in range(n + 1)]
    counts[n] = {q: 1 for q in range(len(dag.states)) if (dag.final_layern >> q) & 1}
    for alpha in range(n - 1, -1, -1):
        below = counts[alpha + 1]
        layer = counts[alpha]
        for p, _, q in dag.edges[alpha]:
            c = below.get(q)
            if c:
                layer[p] = layer.get(p, 0) + c
    return counts


def count_paths(dag: LayeredDag) -> int:
    """Number of ``I^0 → F^n`` paths, as an exact integer."""
    if dag.is_empty():
        return 0
    top = suffix_counts(dag)[0]
    return sum(c for q, c in top.items() if (dag.initial_layer0 >> q) & 1)


def _require_unambiguous(a: Nfa) -> None:
    if not is_unambiguous(a):
        raise ContractViolation("automaton is ambiguous; exact path counting would over-count")


def ufa_dag(a: Nfa, n: int) -> LayeredDag:
    """Cluster finals, remove ε, unroll and trim: the enumeration/counting substrate."""
    return trim(build_unrolled(cluster_finals(remove_epsilon(a)), n))


def count_exact_ufa(a: Nfa, n: int) -> int:
    """``|L_n(a)|`` for an unambiguous NFA."""
    a = remove_epsilon(a)
    _require_unambiguous(a)
    return count_paths(ufa_dag(a, n))


def brute_force_language(a: Nfa, n: int, cap: int = DEFAULT_CAP) -> set[Word]:
    """Every word of length ``n`` accepted by ``a``, by testing all of ``Σ^n``."""
    if len(a.alphabet) ** n > cap:
        raise OracleCapExceeded(f"|Σ|^n = {len(a.alphabet)}^{n} exceeds the cap {cap}")
    a = remove_epsilon(a)
    return {w for w in itertools.product(a.alphabet, repeat=n) if membership(a, w)}


def brute_force_count(a: Nfa, n: int, cap: int = DEFAULT_CAP) -> int:
    return len(brute_force_language(a, n, cap))


def _pick(rng: random.Random, weighted: list[tuple[int, object]], total: int):
    """Choose an item with probability weight/total using one exact integer draw."""
    u = rng.randrange(total)
    for weight, item in weighted:
        if u < weight:
            return item
        u -= weight
    raise AssertionError("weights do not add up to total")


class UfaSampler:
    """Uniform sampler over ``L_n(a)`` for unambiguous ``a``.

    Walks the trimmed dag from layer 0, picking each edge with probability
    (paths through the edge) / (paths through the current vertex).  Counts
    are exact integers, so the output distribution is exactly uniform.
    """

    def __init__(self, a: Nfa, n: int):
        a = remove_epsilon(a)
        _require_unambiguous(a)
        self.dag = ufa_dag(a, n)
        assert self.dag.trim_mode == FULLY_TRIMMED
        self.counts = suffix_counts(self.dag)
        self.total = count_paths(self.dag)

    def branches(self, alpha: int, p: int) -> list[tuple[int, tuple[int, int]]]:
        below = self.counts[alpha + 1]
        return [(below[q], (s, q)) for s, q in self.dag.out_edges[alpha].get(p, ())]

    def starts(self) -> list[tuple[int, int]]:
        top = self.counts[0]
        return [(c, q) for q, c in sorted(top.items()) if (self.dag.initial_layer0 >> q) & 1]

    def sample(self, rng: random.Random) -> Word:
        if self.total == 0:
            raise EmptyLanguageError("L_n is empty")
        alphabet = self.dag.alphabet
        p = _pick(rng, self.starts(), self.total)
        word = []
        for alpha in range(self.dag.n):
            s, p = _pick(rng, self.branches(alpha, p), self.counts[alpha][p])
            word.append(alphabet[s])
        return tuple(word)

    def distribution(self) -> dict[Word, Fraction]:
        """Probability of each output word, multiplied out along the decision tree."""
        alphabet = self.dag.alphabet
        out: dict[Word, Fraction] = {}

        def walk(alpha: int, p: int, prefix: Word, prob: Fraction) -> None:
            if alpha == self.dag.n:
                out[prefix] = out.get(prefix, Fraction(0)) + prob
                return
            here = self.counts[alpha][p]
            for weight, (s, q) in self.branches(alpha, p):
                walk(alpha + 1, q, prefix + (alphabet[s],), prob * Fraction(weight, here))

        for weight, q in self.starts():
            walk(0, q, (), Fraction(weight, self.total))
        return out


def exact_sampler_ufa(a: Nfa, n: int, rng: random.Random) -> Word:
    """One exactly uniform word of ``L_n(a)``; see :class:`UfaSampler`."""
    return UfaSampler(a, n).sample(rng)
