from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfacount.automata import Nfa
from nfacount.enumeration import (
    EXHAUSTED,
    EnumerationSession,
    FlashlightSession,
    enumerate_nfa,
    enumerate_ufa,
    nfa_session,
    ufa_session,
)
from nfacount.errors import ContractViolation
from support import FIG1_WORDS, cube, oracle_language, random_nfa, random_ufa

# Steps between outputs of the DFS enumerator are at most this constant times n.
DELAY_CONSTANT = 3


def test_fig1_ufa(fig1_nfa):
    words = list(enumerate_ufa(fig1_nfa, 3))
    assert len(words) == 5
    assert set(words) == FIG1_WORDS


def test_fig1_flashlight(fig1_nfa):
    assert list(enumerate_nfa(fig1_nfa, 3)) == list(enumerate_ufa(fig1_nfa, 3))


def test_empty_language(fig1_nfa):
    session = ufa_session(fig1_nfa, 2)
    assert session.phase == EXHAUSTED
    assert list(session) == []
    assert list(enumerate_nfa(fig1_nfa, 2)) == []


def test_cube_all_words():
    words = list(enumerate_ufa(cube(), 4))
    assert len(words) == 16 == len(set(words))


def test_ambiguous_copies_each_word_once(fig1_nfa):
    # two disjoint copies of the a-branch: every word has two accepting runs
    branch = {("q0", "a", "q1"), ("q1", "a", "q3"), ("q3", "a", "qF"), ("q3", "b", "qF")}
    copy = {(p + "'", s, q + "'") for p, s, q in branch}
    states = ("q0", "q1", "q3", "qF", "q0'", "q1'", "q3'", "qF'")
    a = Nfa(states, ("a", "b"), branch | copy, {"q0", "q0'"}, {"qF", "qF'"})
    words = list(enumerate_nfa(a, 3))
    assert sorted(words) == sorted(oracle_language(a, 3))
    assert len(words) == len(set(words)) == 2
    with pytest.raises(ContractViolation):
        enumerate_ufa(a, 3)


def test_lexicographic_order():
    words = list(enumerate_nfa(cube(2), 3))
    assert words == sorted(words)
    assert len(words) == 8


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(0, 8))
def test_flashlight_random(seed, m, n):
    a = random_nfa(random.Random(seed), m)
    words = list(enumerate_nfa(a, n))
    assert len(words) == len(set(words))
    assert set(words) == oracle_language(a, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(0, 8))
def test_dfs_random_ufa(seed, m, n):
    rng = random.Random(seed)
    a = random_ufa(rng, m)
    session = ufa_session(a, n)
    words = list(session)
    assert len(words) == len(set(words))
    assert set(words) == oracle_language(a, n)
    assert session.max_delay <= DELAY_CONSTANT * max(n, 1)


@pytest.mark.parametrize("n", [1, 4, 8, 12])
def test_dfs_delay_cube(n):
    session = ufa_session(cube(), n)
    count = sum(1 for _ in session)
    assert count == 2**n
    assert session.max_delay <= DELAY_CONSTANT * n


def _resume_check(make, resume, k):
    full = list(make())
    session = make()
    head = [next(session) for _ in range(min(k, len(full)))]
    snap = json.loads(json.dumps(session.snapshot()))
    rest = list(resume(session.dag, snap))
    assert head + rest == full


@pytest.mark.parametrize("k", [0, 1, 3, 5])
def test_resume_fig1(fig1_nfa, k):
    _resume_check(lambda: ufa_session(fig1_nfa, 3), EnumerationSession.resume, k)
    _resume_check(lambda: nfa_session(fig1_nfa, 3), FlashlightSession.resume, k)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(0, 6), st.integers(0, 20))
def test_resume_random(seed, m, n, k):
    a = random_nfa(random.Random(seed), m)
    _resume_check(lambda: nfa_session(a, n), FlashlightSession.resume, k)
    u = random_ufa(random.Random(seed), m)
    _resume_check(lambda: ufa_session(u, n), EnumerationSession.resume, k)


def test_partial_word_tracks_stack(fig1_nfa):
    session = ufa_session(fig1_nfa, 3)
    for _ in session:
        assert len(session.partial_word) == len(session.dfs_stack) - 1
