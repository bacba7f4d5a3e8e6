"""Sketch-based approximate counting and Las Vegas uniform generation.

A sketch stores, for every vertex ``q^α`` of the forward-pruned unrolled
automaton, a rational estimate ``N(q^α)`` of ``|L(q^α)|`` and a multiset
``S(q^α)`` of words drawn uniformly from ``L(q^α)``.  The size of a union of
vertex languages at one layer is estimated by walking the states in
declaration order and weighting each ``N(p^α)`` by the fraction of its
samples that avoid every earlier state of the union.

New samples at layer α are produced by a backward random walk: starting from
``{q}``, split the current state set by the symbol read last, pick a part
with probability proportional to its estimate, and finally keep the word
with probability ``φ``.  ``φ`` is scaled so that every word of ``L(q^α)`` is
returned with the same probability ``φ0``.  All probabilities are exact
rationals; a Bernoulli(a/b) draw is ``randrange(b) < a``.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable

from .automata import Nfa, Word, iter_bits, parse_nfa, remove_epsilon, serialize_nfa
from .errors import ContractViolation, EmptyLanguageError, SketchInvariantError
from .exact import brute_force_count, count_exact_ufa
from .randomness import stream
from .unroll import LayeredDag, build_unrolled, cluster_finals, layered_languages, trim

log = logging.getLogger(__name__)

# Even convergents of e^-5 and e^-9: exact rationals just below the true values.
R5 = Fraction(167, 24785)
R9 = Fraction(131, 1061504)

THEORY_DEFAULTS = "theory-defaults"
OVERRIDE = "override"

SAMPLED = "sampled"
ORACLE = "oracle"

IndexWord = tuple[int, ...]


def _fraction(x: object) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)  # type: ignore[arg-type]


def default_k(n: int, m: int, eps: object) -> int:
    """``⌈n·m/ε⌉`` computed exactly (floats are read through their decimal repr)."""
    return max(1, math.ceil(Fraction(n * m) / _fraction(eps)))


def default_retries(k: int) -> int:
    """Attempts per sample slot so that a slot fails with probability at most ``1/(4k^8)``."""
    per_attempt = -math.log1p(-math.exp(-9))
    return math.ceil((2 + math.log(4) + 8 * math.log(k)) / per_attempt)


def generation_retries() -> int:
    """Smallest ``R`` with ``(1 - R9)^R ≤ 1/2``."""
    return math.ceil(math.log(2) / -math.log1p(-float(R9)))


GENERATION_RETRIES = generation_retries()


@dataclass(frozen=True)
class Budget:
    """Sampling budget: ``k``, sample size ``s``, retries ``c`` and acceptance scale."""

    k: int
    sample_size: int
    retries: int
    accept_scale: Fraction = R5
    mode: str = OVERRIDE

    def __post_init__(self) -> None:
        object.__setattr__(self, "accept_scale", _fraction(self.accept_scale))
        if min(self.k, self.sample_size, self.retries) < 1:
            raise ValueError("budget fields must be positive")
        if not 0 < self.accept_scale <= 1:
            raise ValueError("accept_scale must lie in (0, 1]")
        if self.mode not in (THEORY_DEFAULTS, OVERRIDE):
            raise ValueError(f"unknown budget mode {self.mode!r}")
        if self.mode == THEORY_DEFAULTS:
            expected = (2 * self.k**7, default_retries(self.k), R5)
            if (self.sample_size, self.retries, self.accept_scale) != expected:
                raise ValueError("theoretical budgets do not accept field overrides")

    @classmethod
    def theoretical(cls, k: int) -> "Budget":
        return cls(k, 2 * k**7, default_retries(k), R5, THEORY_DEFAULTS)

    @classmethod
    def for_instance(cls, n: int, m: int, eps: object) -> "Budget":
        return cls.theoretical(default_k(n, m, eps))

    @classmethod
    def override(
        cls, sample_size: int, retries: int, accept_scale: object = R5, k: int = 1
    ) -> "Budget":
        return cls(k, sample_size, retries, _fraction(accept_scale), OVERRIDE)

    def scaled(self, factor: int) -> "Budget":
        """Multiply ``k`` by ``factor``.

        Theoretical budgets recompute ``s`` and ``c`` from the new ``k``; an override
        budget scales its sample size by the same factor and keeps ``c``.
        """
        if factor < 1:
            raise ValueError("scale factor must be positive")
        if self.mode == THEORY_DEFAULTS:
            return Budget.theoretical(self.k * factor)
        return replace(self, k=self.k * factor, sample_size=self.sample_size * factor)


def amplification_factor(delta: object) -> int:
    """``⌈ln(1/δ)⌉``, at least 1."""
    d = _fraction(delta)
    if not 0 < d < 1:
        raise ValueError("δ must lie in (0, 1)")
    return max(1, math.ceil(math.log(1 / d)))


@dataclass(frozen=True)
class _Branch:
    parts: tuple[int, ...]
    probs: tuple[Fraction, ...]
    ints: tuple[int, ...]
    scale: int
    only: int  # index of the single positive part, or -1


@dataclass
class Sketch:
    """Per-vertex estimates and sample multisets over a forward-pruned dag."""

    dag: LayeredDag
    budget: Budget | None = None
    seed: int | None = None
    mode: str = SAMPLED
    good: bool = True
    estimates: list[dict[int, Fraction]] = field(default_factory=list)
    samples: list[dict[int, list[IndexWord]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        layers = len(self.dag.layers)
        if not self.estimates:
            self.estimates = [{} for _ in range(layers)]
        if not self.samples:
            self.samples = [{} for _ in range(layers)]
        self._reach_counts: list[dict[int, Counter[int]]] = [{} for _ in range(layers)]
        self._word_reach: dict[IndexWord, int] = {(): self.dag.nfa.initial_mask}
        self._set_cache: dict[tuple[int, int], Fraction] = {}
        self._branch_cache: dict[tuple[int, int], _Branch] = {}
        for alpha, layer in enumerate(self.samples):
            for q, words in layer.items():
                self._reach_counts[alpha][q] = Counter(self.reach_mask(w) for w in words)

    @property
    def nfa(self) -> Nfa:
        return self.dag.nfa

    @property
    def n(self) -> int:
        return self.dag.n

    @property
    def accept_scale(self) -> Fraction:
        return self.budget.accept_scale if self.budget else R5

    def reach_mask(self, word: IndexWord) -> int:
        """States reached from the initial states by reading ``word`` (memoized)."""
        mask = self._word_reach.get(word)
        if mask is None:
            mask = self.nfa.step(self.reach_mask(word[:-1]), word[-1])
            self._word_reach[word] = mask
        return mask

    def set_vertex(self, alpha: int, q: int, estimate: Fraction, words: list[IndexWord]) -> None:
        self.estimates[alpha][q] = estimate
        self.samples[alpha][q] = words
        self._reach_counts[alpha][q] = Counter(self.reach_mask(w) for w in words)

    def estimate_set(self, states: int, alpha: int) -> Fraction:
        """Union estimate ``N(P^α)`` for the state bitmask ``P``; 0 for an empty set."""
        states &= self.dag.layers[alpha]
        if not states:
            return Fraction(0)
        key = (alpha, states)
        cached = self._set_cache.get(key)
        if cached is not None:
            return cached
        total = Fraction(0)
        earlier = 0
        for p in iter_bits(states):
            counts = self._reach_counts[alpha][p]
            size = sum(counts.values())
            kept = sum(c for mask, c in counts.items() if not mask & earlier)
            if kept:
                total += self.estimates[alpha][p] * Fraction(kept, size)
            earlier |= 1 << p
        self._set_cache[key] = total
        return total

    def estimate_names(self, names: Iterable[str], alpha: int) -> Fraction:
        return self.estimate_set(self.nfa.mask(names), alpha)

    def predecessor_sets(self, states: int, alpha: int) -> tuple[int, ...]:
        """For each symbol ``b``, the layer-(α-1) states with a ``b``-edge into ``states``."""
        preds = self.dag.predecessors[alpha]
        parts = [0] * len(self.nfa.alphabet)
        for q in iter_bits(states):
            row = preds.get(q)
            if row:
                for b, mask in enumerate(row):
                    parts[b] |= mask
        return tuple(parts)

    def branch(self, states: int, alpha: int) -> _Branch:
        key = (alpha, states)
        cached = self._branch_cache.get(key)
        if cached is not None:
            return cached
        parts = self.predecessor_sets(states, alpha)
        weights = [self.estimate_set(p, alpha - 1) for p in parts]
        total = sum(weights)
        if total <= 0:
            raise SketchInvariantError(f"no predecessor mass at layer {alpha}")
        probs = tuple(w / total for w in weights)
        scale = math.lcm(*(p.denominator for p in probs))
        ints = tuple(int(p * scale) for p in probs)
        positive = [i for i, p in enumerate(probs) if p > 0]
        result = _Branch(parts, probs, ints, scale, positive[0] if len(positive) == 1 else -1)
        self._branch_cache[key] = result
        return result

    def final_estimate(self) -> Fraction:
        """``N(F^n)``: the union estimate over all final states at the last layer."""
        return self.estimate_set(self.dag.final_layern, self.n)

    def decode(self, word: IndexWord) -> Word:
        alphabet = self.nfa.alphabet
        return tuple(alphabet[s] for s in word)

    def invalid_samples(self) -> list[tuple[int, str, Word]]:
        """Stored words that do not reach the vertex they are filed under."""
        bad = []
        for alpha, layer in enumerate(self.samples):
            for q, words in layer.items():
                for w in words:
                    if len(w) != alpha or not (self.reach_mask(w) >> q) & 1:
                        bad.append((alpha, self.nfa.states[q], self.decode(w)))
        return bad


class SamplingFailure(RuntimeError):
    """A sample slot used up its retries; carries the partial sketch."""

    def __init__(self, layer: int, state: str, slot: int, sketch: Sketch):
        super().__init__(f"sample slot {slot} of {state}@{layer} exhausted its retries")
        self.layer = layer
        self.state = state
        self.slot = slot
        self.sketch = sketch


@dataclass(frozen=True)
class SampleTrace:
    """One run of the backward sampler with its exact bookkeeping."""

    indices: IndexWord
    accepted: bool
    phi0: Fraction
    phi: Fraction
    choice_probability: Fraction

    @property
    def word(self) -> IndexWord | None:
        return self.indices if self.accepted else None


def _draw(
    sk: Sketch, alpha: int, q: int, rng: random.Random, accept: Fraction
) -> tuple[IndexWord, bool, int, int, int, int]:
    """Core of the sampler with integer accumulators.

    Returns ``(word, accepted, A, B, num, den)`` where ``φ = A/B`` and the
    product of chosen branch probabilities is ``num/den``.
    """
    states = 1 << q
    word: list[int] = []
    num = den = 1
    for beta in range(alpha, 0, -1):
        br = sk.branch(states, beta)
        if br.only >= 0:
            b = br.only
        else:
            u = rng.randrange(br.scale)
            b = 0
            while u >= br.ints[b]:
                u -= br.ints[b]
                b += 1
        p = br.probs[b]
        num *= p.numerator
        den *= p.denominator
        word.append(b)
        states = br.parts[b]
    word.reverse()
    nq = sk.estimates[alpha][q]
    big_a = accept.numerator * nq.denominator * den
    big_b = accept.denominator * nq.numerator * num
    if big_a > big_b:
        raise SketchInvariantError(
            f"acceptance probability exceeds 1 at {sk.nfa.states[q]}@{alpha}; sketch is corrupt"
        )
    accepted = rng.randrange(big_b) < big_a
    return tuple(word), accepted, big_a, big_b, num, den


def sample_trace(
    sk: Sketch, alpha: int, q: int, rng: random.Random, accept: object | None = None
) -> SampleTrace:
    acc = sk.accept_scale if accept is None else _fraction(accept)
    word, ok, big_a, big_b, num, den = _draw(sk, alpha, q, rng, acc)
    return SampleTrace(word, ok, acc / sk.estimates[alpha][q], Fraction(big_a, big_b), Fraction(num, den))


def sample_one(
    sk: Sketch, alpha: int, state: str, rng: random.Random, accept: object | None = None
) -> Word | None:
    """A word of ``L(state^α)`` or ``None`` (FAIL); each word has probability ``φ0``."""
    acc = sk.accept_scale if accept is None else _fraction(accept)
    word, ok, *_ = _draw(sk, alpha, sk.nfa.index[state], rng, acc)
    return sk.decode(word) if ok else None


def _require_sketchable(a: Nfa) -> None:
    if a.epsilon:
        raise ContractViolation("automaton has ε-transitions; call remove_epsilon first")
    if len(a.alphabet) > 2:
        raise ContractViolation("approximate counting needs a binary alphabet; binarize first")


def _predecessor_estimate(sk: Sketch, alpha: int, q: int) -> Fraction:
    row = sk.dag.predecessors[alpha].get(q, ())
    return sum((sk.estimate_set(mask, alpha - 1) for mask in row), Fraction(0))


def _seed_layer_zero(sk: Sketch) -> None:
    for q in iter_bits(sk.dag.layers[0]):
        sk.set_vertex(0, q, Fraction(1), [()])


def build_sketch(a: Nfa, n: int, budget: Budget, seed: int, threads: int = 1) -> Sketch:
    """Fill a sketch layer by layer.

    Each vertex draws from its own stream derived from ``(seed, layer, state)``,
    so the result does not depend on ``threads``.  Raises
    :class:`SamplingFailure` if a sample slot exhausts ``budget.retries``.
    """
    _require_sketchable(a)
    dag = build_unrolled(a, n)
    if trim(dag).is_empty():
        raise EmptyLanguageError(f"L_{n} is empty")
    sk = Sketch(dag, budget, seed, SAMPLED)
    _seed_layer_zero(sk)
    accept = budget.accept_scale

    def fill(alpha: int, q: int) -> tuple[Fraction, list[IndexWord], int]:
        rng = stream(seed, alpha, q)
        estimate = _predecessor_estimate(sk, alpha, q)
        sk.estimates[alpha][q] = estimate
        words: list[IndexWord] = []
        for slot in range(budget.sample_size):
            for _ in range(budget.retries):
                word, ok, *_ = _draw(sk, alpha, q, rng, accept)
                if ok:
                    words.append(word)
                    break
            else:
                return estimate, words, slot
        return estimate, words, -1

    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for alpha in range(1, n + 1):
            vertices = list(iter_bits(dag.layers[alpha]))
            if pool is None:
                results = [fill(alpha, q) for q in vertices]
            else:
                results = list(pool.map(lambda q: fill(alpha, q), vertices))
            for q, (estimate, words, failed) in zip(vertices, results):
                sk.set_vertex(alpha, q, estimate, words)
                if failed >= 0:
                    sk.good = False
                    raise SamplingFailure(alpha, a.states[q], failed, sk)
    finally:
        if pool is not None:
            pool.shutdown()
    return sk


def build_oracle_sketch(a: Nfa, n: int, accept_scale: object = R5) -> Sketch:
    """Sketch whose sample multisets are the full vertex languages.

    Estimates follow the same recursion as :func:`build_sketch`, and with full
    languages every union estimate is the exact union size.
    """
    if a.epsilon:
        raise ContractViolation("automaton has ε-transitions; call remove_epsilon first")
    dag = build_unrolled(a, n)
    budget = Budget.override(1, 1, accept_scale)
    sk = Sketch(dag, budget, None, ORACLE)
    _seed_layer_zero(sk)
    sym = a.symbol_index
    langs = layered_languages(dag)
    for alpha in range(1, n + 1):
        for q in iter_bits(dag.layers[alpha]):
            words = sorted(tuple(sym[s] for s in w) for w in langs[alpha].get(q, ()))
            sk.set_vertex(alpha, q, _predecessor_estimate(sk, alpha, q), words)
    return sk


@dataclass(frozen=True)
class ApproxResult:
    estimate: int
    method: str
    value: Fraction | None = None
    sketch: Sketch | None = None
    failure: SamplingFailure | None = None


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def approximate_count(
    a: Nfa,
    n: int,
    eps: object = Fraction(1, 2),
    seed: int = 0,
    budget: Budget | None = None,
    threads: int = 1,
    oracle: bool = False,
) -> ApproxResult:
    """Estimate ``|L_n(a)|`` and report how the number was obtained.

    Tiny instances (one state, or ``n ≤ 1``) are counted exactly, since the
    sampling machinery offers nothing there.  A sampling failure yields an
    estimate of 0 with the failure attached.
    """
    e = _fraction(eps)
    if not 0 < e < 1:
        raise ValueError("ε must lie in (0, 1)")
    a = remove_epsilon(a)
    if trim(build_unrolled(a, n)).is_empty():
        return ApproxResult(0, "empty", Fraction(0))
    if oracle:
        sk = build_oracle_sketch(a, n)
        value = sk.final_estimate()
        return ApproxResult(_round_half_up(value), "oracle-sketch", value, sk)
    if len(a.states) <= 1:
        count = count_exact_ufa(a, n)
        return ApproxResult(count, "exact", Fraction(count))
    if n <= 1:
        count = brute_force_count(a, n)
        return ApproxResult(count, "brute-force", Fraction(count))
    _require_sketchable(a)
    if budget is None:
        budget = Budget.for_instance(n, len(a.states), e)
    try:
        sk = build_sketch(a, n, budget, seed, threads)
    except SamplingFailure as failure:
        return ApproxResult(0, "fpras", None, failure.sketch, failure)
    value = sk.final_estimate()
    return ApproxResult(_round_half_up(value), "fpras", value, sk)


def count_approx(
    a: Nfa,
    n: int,
    eps: object = Fraction(1, 2),
    seed: int = 0,
    budget: Budget | None = None,
    threads: int = 1,
    oracle: bool = False,
) -> int:
    """Estimate of ``|L_n(a)|``; 0 (with a logged warning) when sampling fails."""
    result = approximate_count(a, n, eps, seed, budget, threads, oracle)
    if result.failure is not None:
        log.warning("approximate count failed: %s; reporting 0", result.failure)
    return result.estimate


# -- uniform generation ------------------------------------------------------


@dataclass(frozen=True)
class Generated:
    word: Word | None
    attempts: int
    guaranteed: bool


def _target(sk: Sketch) -> int | None:
    finals = list(iter_bits(sk.dag.final_layern))
    if len(finals) != 1 or finals[0] not in sk.estimates[sk.n]:
        return None
    return finals[0]


def pplvug_preprocess(
    a: Nfa,
    n: int,
    delta: object = Fraction(1, 2),
    budget: Budget | None = None,
    seed: int = 0,
    threads: int = 1,
    oracle: bool = False,
) -> Sketch | None:
    """Preprocessing for generation: ``None`` if ``L_n(a)`` is empty, else a sketch.

    Finals are clustered into one fresh state so generation samples a single
    vertex.  ``k`` is scaled by ``⌈ln(1/δ)⌉``; the default base budget uses
    ``ε = 1``.  On a sampling failure the partial sketch comes back with
    ``good = False``.
    """
    factor = amplification_factor(delta)
    a = remove_epsilon(a)
    if trim(build_unrolled(a, n)).is_empty():
        return None
    clustered = cluster_finals(a)
    if oracle:
        accept = budget.accept_scale if budget else R5
        return build_oracle_sketch(clustered, n, accept)
    base = budget or Budget.for_instance(n, len(a.states), 1)
    try:
        return build_sketch(clustered, n, base.scaled(factor), seed, threads)
    except SamplingFailure as failure:
        failure.sketch.good = False
        return failure.sketch


def pplvug_generate(
    sk: Sketch, rng: random.Random, retries: int = GENERATION_RETRIES
) -> Generated:
    """Up to ``retries`` sampler runs at the final vertex; ``word is None`` means FAIL."""
    target = _target(sk)
    if target is None:
        return Generated(None, 0, False)
    accept = sk.accept_scale
    for attempt in range(1, retries + 1):
        word, ok, *_ = _draw(sk, sk.n, target, rng, accept)
        if ok:
            return Generated(sk.decode(word), attempt, sk.good)
    return Generated(None, retries, sk.good)


# -- serialization -----------------------------------------------------------

_MAGIC = "nfacount-sketch 1"


def _nfa_digest(a: Nfa) -> str:
    return hashlib.sha256(serialize_nfa(a).encode()).hexdigest()


def _word_text(word: IndexWord) -> str:
    return "".join(str(s) for s in word) if word else "-"


def serialize_sketch(sk: Sketch) -> str:
    """Length-prefixed text form: header, embedded automaton, then vertex blocks.

    Samples are written one per line as symbol-index digit strings (bit
    strings for binary alphabets), ``-`` for the empty word.
    """
    if len(sk.nfa.alphabet) > 10:
        raise ValueError("sketch serialization supports at most 10 symbols")
    b = sk.budget
    lines = [
        _MAGIC,
        f"mode {sk.mode}",
        f"good {int(sk.good)}",
        f"seed {'-' if sk.seed is None else sk.seed}",
        f"budget {b.mode} {b.k} {b.sample_size} {b.retries} {b.accept_scale}" if b else "budget -",
        f"n {sk.n}",
        f"nfa-sha256 {_nfa_digest(sk.nfa)}",
    ]
    nfa_lines = serialize_nfa(sk.nfa).splitlines()
    lines.append(f"nfa {len(nfa_lines)}")
    lines.extend(nfa_lines)
    blocks = [(alpha, q) for alpha, layer in enumerate(sk.estimates) for q in sorted(layer)]
    lines.append(f"vertices {len(blocks)}")
    for alpha, q in blocks:
        est = sk.estimates[alpha][q]
        words = sk.samples[alpha].get(q, [])
        lines.append(f"v {sk.nfa.states[q]} {alpha} {est.numerator}/{est.denominator} {len(words)}")
        lines.extend(_word_text(w) for w in words)
    return "\n".join(lines) + "\n"


def deserialize_sketch(text: str) -> Sketch:
    lines = text.splitlines()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError("truncated sketch")
        pos += 1
        return lines[pos - 1]

    def field_(name: str) -> str:
        key, _, value = take().partition(" ")
        if key != name:
            raise ValueError(f"expected {name!r}, got {key!r}")
        return value

    if take() != _MAGIC:
        raise ValueError("not a sketch")
    mode = field_("mode")
    good = field_("good") == "1"
    seed_text = field_("seed")
    budget_text = field_("budget").split()
    n = int(field_("n"))
    digest = field_("nfa-sha256")
    nfa_len = int(field_("nfa"))
    a = parse_nfa("\n".join(take() for _ in range(nfa_len)))
    if _nfa_digest(a) != digest:
        raise ValueError("automaton hash mismatch")
    budget = None
    if budget_text != ["-"]:
        bmode, k, s, c, acc = budget_text
        budget = Budget(int(k), int(s), int(c), Fraction(acc), bmode)
    sk = Sketch(build_unrolled(a, n), budget, None if seed_text == "-" else int(seed_text), mode, good)
    for _ in range(int(field_("vertices"))):
        state, alpha_text, est, count = field_("v").split()
        words = [take() for _ in range(int(count))]
        parsed = [() if w == "-" else tuple(int(ch) for ch in w) for w in words]
        sk.set_vertex(int(alpha_text), a.index[state], Fraction(est), parsed)
    return sk
