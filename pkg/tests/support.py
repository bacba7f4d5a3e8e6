"""Fixtures, random instance generators and independent oracles for the tests."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from nfacount.automata import Nfa, parse_nfa
from nfacount.reductions import DnfFormula, Obdd, ObddNode

FIG1_TEXT = """\
# unambiguous automaton over {a, b}; L_3 = {aaa, aab, baa, bab, bbb}
alphabet: a b
states: q0 q1 q2 q3 q4 qF q5
initial: q0
final: qF
trans: q0 a q1
trans: q1 a q3
trans: q3 a qF
trans: q3 b qF
trans: q0 b q2
trans: q2 a q3
trans: q2 b q4
trans: q4 b qF
trans: q4 a q5
"""

FIG1_WORDS = {tuple(w) for w in ("aaa", "aab", "baa", "bab", "bbb")}


def fig1() -> Nfa:
    return parse_nfa(FIG1_TEXT)


def cube(states: int = 1) -> Nfa:
    """``states`` copies of the total one-state binary automaton, all initial and final."""
    names = tuple(f"c{i}" for i in range(states))
    trans = {(q, b, q) for q in names for b in "01"}
    return Nfa(names, ("0", "1"), trans, set(names), set(names))


def random_nfa(
    rng: random.Random,
    m: int,
    alphabet: tuple[str, ...] = ("0", "1"),
    density: float = 0.3,
    epsilon_density: float = 0.0,
    single_final: bool = False,
) -> Nfa:
    states = tuple(f"s{i}" for i in range(m))
    trans = {
        (p, a, q)
        for p in states
        for a in alphabet
        for q in states
        if rng.random() < density
    }
    eps = {(p, q) for p in states for q in states if p != q and rng.random() < epsilon_density}
    initial = {s for s in states if rng.random() < 0.3} or {states[0]}
    if single_final:
        final = {rng.choice(states)}
    else:
        final = {s for s in states if rng.random() < 0.3} or {states[-1]}
    return Nfa(states, alphabet, trans, initial, final, eps)


def random_ufa(rng: random.Random, m: int, alphabet: tuple[str, ...] = ("0", "1")) -> Nfa:
    """Random unambiguous automaton, checked with the run/word oracle below.

    Sparse random automata are tried first so genuinely nondeterministic
    unambiguous ones appear; a random partial DFA is the fallback.
    """
    for _ in range(50):
        a = random_nfa(rng, m, alphabet, density=rng.uniform(0.1, 0.35))
        if not oracle_is_ambiguous(a):
            return a
    states = tuple(f"s{i}" for i in range(m))
    trans = {(p, s, rng.choice(states)) for p in states for s in alphabet if rng.random() < 0.8}
    final = {s for s in states if rng.random() < 0.4} or {states[-1]}
    return Nfa(states, alphabet, trans, {states[0]}, final)


# -- oracles independent of the package's algorithms --------------------------


def _closure(a: Nfa, states: set[str]) -> set[str]:
    todo = list(states)
    seen = set(states)
    while todo:
        p = todo.pop()
        for x, y in a.epsilon:
            if x == p and y not in seen:
                seen.add(y)
                todo.append(y)
    return seen


def oracle_accepts(a: Nfa, word) -> bool:
    """Set simulation directly on the transition relation, ε-moves included."""
    current = _closure(a, set(a.initial))
    for sym in word:
        current = _closure(a, {q for p, s, q in a.transitions if p in current and s == sym})
    return bool(current & a.final)


def oracle_language(a: Nfa, n: int) -> set[tuple[str, ...]]:
    return {w for w in itertools.product(a.alphabet, repeat=n) if oracle_accepts(a, w)}


def run_count(a: Nfa, n: int) -> int:
    """Total number of accepting runs of length ``n`` over all words (ε-free input)."""
    vec = {q: 1 for q in a.initial}
    for _ in range(n):
        nxt: dict[str, int] = {}
        for p, _, q in a.transitions:
            if p in vec:
                nxt[q] = nxt.get(q, 0) + vec[p]
        vec = nxt
    return sum(c for q, c in vec.items() if q in a.final)


def subset_count(a: Nfa, n: int) -> int:
    """``|L_n(a)|`` via the subset construction, counting words per reached subset."""
    dist = {frozenset(a.initial): 1}
    for _ in range(n):
        nxt: dict[frozenset[str], int] = {}
        for subset, c in dist.items():
            for sym in a.alphabet:
                target = frozenset(q for p, s, q in a.transitions if p in subset and s == sym)
                if target:
                    nxt[target] = nxt.get(target, 0) + c
        dist = nxt
    return sum(c for subset, c in dist.items() if subset & a.final)


def oracle_is_ambiguous(a: Nfa) -> bool:
    """Some length up to ``2m^2`` has more accepting runs than accepted words."""
    bound = 2 * len(a.states) ** 2
    return any(run_count(a, n) != subset_count(a, n) for n in range(bound + 1))


def chi_square_p(counts: list[int]) -> float:
    from scipy.stats import chisquare

    return float(chisquare(counts).pvalue)


def exact_output_distribution(sk, alpha: int, q: int, accept: Fraction) -> dict[tuple[int, ...], Fraction]:
    """Probability that one sampler run at ``q^α`` returns each word.

    Re-derives the backward walk from the sketch's union estimates by
    exploring every branch with exact rationals.
    """
    out: dict[tuple[int, ...], Fraction] = {}
    phi0 = accept / sk.estimates[alpha][q]

    def walk(beta: int, states: int, suffix: tuple[int, ...], prob: Fraction) -> None:
        if beta == 0:
            phi = phi0 / prob
            assert phi <= 1
            out[suffix] = out.get(suffix, Fraction(0)) + prob * phi
            return
        parts = sk.predecessor_sets(states, beta)
        weights = [sk.estimate_set(p, beta - 1) for p in parts]
        total = sum(weights)
        for b, (part, w) in enumerate(zip(parts, weights)):
            if w:
                walk(beta - 1, part, (b,) + suffix, prob * w / total)

    walk(alpha, 1 << q, (), Fraction(1))
    return out


def random_dnf(rng: random.Random, n: int) -> DnfFormula:
    disjuncts = []
    for _ in range(rng.randint(0, 5)):
        chosen = rng.sample(range(1, n + 1), rng.randint(0, min(n, 4)))
        lits = {(v, rng.random() < 0.5) for v in chosen}
        if rng.random() < 0.1 and chosen:
            v = chosen[0]
            lits |= {(v, True), (v, False)}
        disjuncts.append(frozenset(lits))
    return DnfFormula(n, tuple(disjuncts))


def random_obdd(rng: random.Random, n: int, size: int, deterministic: bool) -> Obdd:
    order = tuple(rng.sample(range(1, n + 1), n))
    nodes: dict[str, ObddNode] = {}
    names: list[tuple[str, int]] = []  # (name, position of its variable or -1)
    for i in range(size):
        name = f"v{i}"
        later = [m for m, pos in names] + ["T0", "T1"]
        if not deterministic and rng.random() < 0.3 and names:
            kids = tuple(rng.sample(later, min(len(later), rng.randint(1, 3))))
            nodes[name] = ObddNode(None, kids)
            names.append((name, -1))
            continue
        pos = rng.randrange(n)
        # children must test strictly later positions; unlabeled children are
        # only safe if everything below them is later too, so keep to labeled ones
        ok = [m for m, p in names if p > pos] + ["T0", "T1"]
        nodes[name] = ObddNode(order[pos], (rng.choice(ok), rng.choice(ok)))
        names.append((name, pos))
    root = names[-1][0] if names else "T1"
    return Obdd(n, order, nodes, root)


def walks(g, u: str, n: int) -> list[list]:
    """All length-``n`` walks from ``u`` as ``[u, (label, vertex), ...]``."""
    paths = [[u]]
    for _ in range(n):
        paths = [p + [(lab, y)] for p in paths for x, lab, y in g.edges if x == (p[-1] if len(p) == 1 else p[-1][1])]
    return paths
