"""Counting, enumerating and uniformly sampling the words of length n accepted by an NFA."""

from __future__ import annotations

from .automata import (
    Nfa,
    Word,
    accepts_some_word,
    epsilon_closures,
    is_unambiguous,
    membership,
    parse_nfa,
    reachable_states,
    remove_epsilon,
    self_reduce_step,
    serialize_nfa,
)
from .enumeration import EnumerationSession, FlashlightSession, enumerate_nfa, enumerate_ufa
from .errors import (
    ContractViolation,
    EmptyLanguageError,
    NfaParseError,
    OracleCapExceeded,
    ParseError,
    SketchInvariantError,
)
from .exact import (
    UfaSampler,
    brute_force_count,
    brute_force_language,
    count_exact_ufa,
    exact_sampler_ufa,
)
from .fpras import (
    R5,
    R9,
    Budget,
    SamplingFailure,
    Sketch,
    build_oracle_sketch,
    build_sketch,
    count_approx,
    deserialize_sketch,
    pplvug_generate,
    pplvug_preprocess,
    sample_one,
    serialize_sketch,
)
from .reductions import binarize, dnf_to_nfa, obdd_to_nfa, parse_dnf, parse_graph, parse_obdd, rpq_to_nfa
from .unroll import LayeredDag, build_unrolled, cluster_finals, full_unrolling, trim
