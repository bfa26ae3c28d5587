import random
import sys

import pytest

from nli_diversity.backend import (
    LABEL_ORDER,
    NLILabel,
    NLIResult,
    PairwiseNLIMatrix,
)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "setup" and report.skipped:
        status = "SKIP (gated)"
    elif report.when == "call":
        status = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")
    else:
        return
    name = report.nodeid.split("::")[-1]
    sys.stderr.write(f"\n[ACCEPTANCE][{status}] {name}\n")


def matrix_from_labels(labels, confidence=0.9) -> PairwiseNLIMatrix:
    """Build an n-response matrix from labels listed in lexicographic
    (i, j) order of the ordered pairs."""
    n = 2
    while n * (n - 1) < len(labels):
        n += 1
    assert n * (n - 1) == len(labels), "label count must be n(n-1) for some n"
    keys = [(i, j) for i in range(n) for j in range(n) if i != j]
    entries = {
        key: NLIResult.from_label(label, confidence)
        for key, label in zip(keys, labels)
    }
    return PairwiseNLIMatrix(n=n, entries=entries)


def random_matrix(rng: random.Random, n: int) -> PairwiseNLIMatrix:
    """Random labels and confidences for every ordered pair."""
    entries = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                label = rng.choice(LABEL_ORDER)
                confidence = rng.uniform(0.34, 1.0)
                entries[(i, j)] = NLIResult.from_label(label, confidence)
    return PairwiseNLIMatrix(n=n, entries=entries)


def random_table(rng: random.Random, responses, labels=LABEL_ORDER):
    """Random mock lookup table covering every ordered response pair."""
    table = {}
    for a in responses:
        for b in responses:
            if a != b:
                table[(a, b)] = (rng.choice(labels), rng.uniform(0.34, 1.0))
    return table


C, N, E = NLILabel.CONTRADICTION, NLILabel.NEUTRAL, NLILabel.ENTAILMENT


@pytest.fixture
def fig1_matrix():
    """The worked example: 2 contradictions, 3 neutrals, 1 entailment."""
    return matrix_from_labels([C, C, N, N, N, E])
