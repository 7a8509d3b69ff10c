"""Global peer reputation from pairwise interaction history.

Each peer tallies satisfactory and unsatisfactory interactions with
every other peer. Clamped, row-normalized tallies form a local trust
matrix; repeated application of its transpose, damped toward a
pre-trusted distribution, converges to a single global trust vector.
Peers that nobody vouches for end up with the damping floor or zero,
no matter how loudly they vouch for each other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

LEDGER_SEPARATOR = "→"  # "p→q" keys in the wire format

DEFAULT_DAMPING = 0.1
DEFAULT_EPSILON = 1e-9
DEFAULT_MAX_ITERS = 200


class ReputationError(ValueError):
    """Raised for unknown peers, self-ratings, and bad parameters."""


@dataclass
class InteractionLedger:
    """Pairwise sat/unsat tallies over an ordered peer list."""

    peers: tuple[str, ...]
    sat: dict[tuple[str, str], int] = field(default_factory=dict)
    unsat: dict[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.peers = tuple(self.peers)
        if len(set(self.peers)) != len(self.peers):
            raise ReputationError("duplicate peer ids")
        for peer in self.peers:
            if not peer:
                raise ReputationError("peer ids must be non-empty")
            if LEDGER_SEPARATOR in peer:
                raise ReputationError(
                    f"peer id {peer!r} contains the reserved separator"
                )

    def _check_pair(self, p: str, q: str) -> None:
        if p == q:
            raise ReputationError("self interactions are undefined")
        for peer in (p, q):
            if peer not in self.peers:
                raise ReputationError(f"unknown peer {peer!r}")

    def record_sat(self, p: str, q: str, count: int = 1) -> None:
        self._check_pair(p, q)
        if count < 0:
            raise ReputationError("counts must be non-negative")
        self.sat[(p, q)] = self.sat.get((p, q), 0) + count

    def record_unsat(self, p: str, q: str, count: int = 1) -> None:
        self._check_pair(p, q)
        if count < 0:
            raise ReputationError("counts must be non-negative")
        self.unsat[(p, q)] = self.unsat.get((p, q), 0) + count

    def local_trust(self, p: str, q: str) -> int:
        """Net satisfaction p holds toward q; may be negative."""

        self._check_pair(p, q)
        return self.sat.get((p, q), 0) - self.unsat.get((p, q), 0)


@dataclass(frozen=True)
class LocalTrustMatrix:
    """Row-normalized non-negative local trust.

    Rows that clamp to all zeros are left zeroed here and reported, so
    the iteration step can substitute the pre-trusted distribution.
    """

    peers: tuple[str, ...]
    matrix: np.ndarray
    zero_rows: tuple[str, ...]


def normalize(ledger: InteractionLedger) -> LocalTrustMatrix:
    """Clamp negative local trust to zero and normalize each row."""

    peers = ledger.peers
    if len(peers) < 2:
        raise ReputationError("need at least two peers")
    n = len(peers)
    index = {p: i for i, p in enumerate(peers)}
    raw = np.zeros((n, n), dtype=float)
    for (p, q), count in ledger.sat.items():
        raw[index[p], index[q]] += count
    for (p, q), count in ledger.unsat.items():
        raw[index[p], index[q]] -= count
    np.fill_diagonal(raw, 0.0)
    clamped = np.maximum(raw, 0.0)
    sums = clamped.sum(axis=1)
    zero_rows = tuple(peers[i] for i in range(n) if sums[i] == 0.0)
    matrix = np.zeros_like(clamped)
    nonzero = sums > 0.0
    matrix[nonzero] = clamped[nonzero] / sums[nonzero, None]
    return LocalTrustMatrix(peers=peers, matrix=matrix, zero_rows=zero_rows)


@dataclass(frozen=True)
class GlobalTrustVector:
    scores: Mapping[str, float]
    iterations_used: int
    residual: float
    converged: bool

    def as_array(self, peers: Sequence[str]) -> np.ndarray:
        return np.array([self.scores[p] for p in peers], dtype=float)


def global_trust(
    local: LocalTrustMatrix,
    pretrusted: Iterable[str],
    a: float = DEFAULT_DAMPING,
    epsilon: float = DEFAULT_EPSILON,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> GlobalTrustVector:
    """Damped power iteration to the global trust fixed point.

    Before iterating, rows reported zero are replaced by the uniform
    pre-trusted distribution ``e``; the iteration then runs

        t <- (1 - a) * C^T t + a * e

    from ``t = e``, renormalizing each step, until the L1 step
    difference drops below ``epsilon`` or ``max_iters`` steps pass.
    """

    peers = local.peers
    pretrusted = tuple(pretrusted)
    if not pretrusted:
        raise ReputationError("pre-trusted set must be non-empty")
    if len(set(pretrusted)) != len(pretrusted):
        raise ReputationError("duplicate pre-trusted peers")
    unknown = set(pretrusted) - set(peers)
    if unknown:
        raise ReputationError(f"unknown pre-trusted peers: {sorted(unknown)}")
    if not 0.0 <= a < 1.0:
        raise ReputationError("damping must lie in [0, 1)")
    if epsilon <= 0.0:
        raise ReputationError("epsilon must be positive")
    if max_iters < 1:
        raise ReputationError("max_iters must be at least 1")

    n = len(peers)
    index = {p: i for i, p in enumerate(peers)}
    e = np.zeros(n, dtype=float)
    for p in pretrusted:
        e[index[p]] = 1.0 / len(pretrusted)
    c = local.matrix.copy()
    for p in local.zero_rows:
        c[index[p]] = e
    ct = c.T

    t = e.copy()
    iterations = 0
    residual = float("inf")
    converged = False
    while iterations < max_iters:
        t_next = (1.0 - a) * (ct @ t) + a * e
        total = t_next.sum()
        if total > 0.0:
            t_next = t_next / total
        iterations += 1
        residual = float(np.abs(t_next - t).sum())
        t = t_next
        if residual < epsilon:
            converged = True
            break
    scores = {p: float(t[index[p]]) for p in peers}
    return GlobalTrustVector(
        scores=scores,
        iterations_used=iterations,
        residual=residual,
        converged=converged,
    )


# --- wire format ------------------------------------------------------------

def ledger_to_obj(ledger: InteractionLedger) -> dict:
    """Export the full peer list plus {"p→q": {"sat": n, "unsat": m}}
    interaction entries. Untouched pairs are omitted, but silent peers
    stay in "peers": they are exactly the zero-row case the trust
    iteration must still account for."""

    pairs = sorted(set(ledger.sat) | set(ledger.unsat))
    return {
        "peers": sorted(ledger.peers),
        "interactions": {
            f"{p}{LEDGER_SEPARATOR}{q}": {
                "sat": ledger.sat.get((p, q), 0),
                "unsat": ledger.unsat.get((p, q), 0),
            }
            for p, q in pairs
        },
    }


def ledger_from_obj(obj: object) -> InteractionLedger:
    if not isinstance(obj, dict) or set(obj) != {"peers", "interactions"}:
        raise ReputationError(
            "ledger must be a JSON object with exactly "
            "'peers' and 'interactions'"
        )
    peers = obj["peers"]
    if (
        not isinstance(peers, list)
        or not all(isinstance(p, str) and p for p in peers)
    ):
        raise ReputationError("peers must be a list of non-empty strings")
    if len(set(peers)) != len(peers):
        raise ReputationError("duplicate peers in ledger")
    interactions = obj["interactions"]
    if not isinstance(interactions, dict):
        raise ReputationError("interactions must be a JSON object")
    known = set(peers)
    entries: list[tuple[str, str, int, int]] = []
    for key, value in interactions.items():
        parts = key.split(LEDGER_SEPARATOR)
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ReputationError(f"malformed ledger key {key!r}")
        if parts[0] == parts[1]:
            raise ReputationError(f"self interaction in ledger key {key!r}")
        if not known.issuperset(parts):
            raise ReputationError(f"unknown peer in ledger key {key!r}")
        if not isinstance(value, dict) or set(value) != {"sat", "unsat"}:
            raise ReputationError(f"malformed ledger entry for {key!r}")
        sat = value["sat"]
        unsat = value["unsat"]
        for count in (sat, unsat):
            if isinstance(count, bool) or not isinstance(count, int) or count < 0:
                raise ReputationError(f"counts for {key!r} must be non-negative")
        entries.append((parts[0], parts[1], sat, unsat))
    ledger = InteractionLedger(peers=tuple(sorted(peers)))
    for p, q, sat, unsat in entries:
        if sat:
            ledger.record_sat(p, q, sat)
        if unsat:
            ledger.record_unsat(p, q, unsat)
    return ledger


def load_ledger(path: str | Path) -> InteractionLedger:
    with open(path, "r", encoding="utf-8") as fh:
        return ledger_from_obj(json.load(fh))


def save_ledger(path: str | Path, ledger: InteractionLedger) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ledger_to_obj(ledger), fh, indent=2, sort_keys=True,
                  ensure_ascii=False)
        fh.write("\n")


def trust_vector_to_obj(vector: GlobalTrustVector) -> dict:
    return {peer: score for peer, score in sorted(vector.scores.items())}
