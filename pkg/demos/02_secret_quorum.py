#!/usr/bin/env python3
"""Share a resource token among approvers and run quorum votes.

Splits a token five ways with a three-share threshold, shows that any
three shares rebuild it while two reveal nothing, then drives the
quorum client through healthy, degraded, and tampered rounds.
"""

import random

from trustgate import (
    FieldParams,
    QuorumClient,
    Share,
    ShareError,
    ThresholdPolicy,
    quorum_approve,
    reconstruct,
    secrecy_probe,
    split,
    token_digest,
)

POLICY = ThresholdPolicy(n=5, z=3)
FIELD = FieldParams()  # 2**61 - 1


class StubApprover:
    """Holds one share; answers unless marked offline."""

    def __init__(self, share: Share, online: bool = True) -> None:
        self.share = share
        self.online = online

    def respond(self, resource_id: str, now: int) -> Share | None:
        return self.share if self.online else None


def main() -> None:
    rng = random.Random(2024)
    token = rng.randrange(FIELD.prime)
    shares = split(token, POLICY, FIELD, rng)
    print(f"token {token} split into {len(shares)} shares, "
          f"any {POLICY.z} reconstruct")

    # Any three shares rebuild the token; order does not matter.
    subset = [shares[4], shares[0], shares[2]]
    rebuilt = reconstruct(subset)
    print(f"  shares x={[s.x for s in subset]} -> {rebuilt} "
          f"(match: {rebuilt == token})")

    # Two shares are below threshold and are refused outright.
    try:
        reconstruct(shares[:2])
    except ShareError as exc:
        print(f"  two shares refused: {exc}")

    # Below threshold nothing leaks: in a small field, every candidate
    # secret is consistent with any z-1 shares.
    small = FieldParams(prime=257)
    small_shares = split(123, POLICY, small, random.Random(7))
    partial = small_shares[: POLICY.z - 1]
    consistent = sum(
        secrecy_probe(partial, small, candidate) for candidate in range(257)
    )
    print(f"  secrecy probe over GF(257): {consistent}/257 candidates "
          f"fit 2 shares -- the pair says nothing about the secret")

    # Wire the shares into a quorum round for one resource.
    scheme = shares[0].scheme_id
    approvers = {
        f"approver-{i}": StubApprover(share)
        for i, share in enumerate(shares, start=1)
    }
    client = QuorumClient(
        approvers=approvers,
        digests={"res-vault": token_digest(scheme, token)},
        scheme_ids={"res-vault": scheme},
    )

    print("\nquorum rounds for res-vault:")
    result = quorum_approve("res-vault", client, POLICY)
    print(f"  all online          -> approved={bool(result)}")

    approvers["approver-2"].online = False
    approvers["approver-5"].online = False
    result = quorum_approve("res-vault", client, POLICY)
    print(f"  two approvers down  -> approved={bool(result)}")

    approvers["approver-3"].online = False
    result = quorum_approve("res-vault", client, POLICY)
    print(f"  three down          -> approved={bool(result)} "
          f"({result.failure})")

    # Restore everyone but hand approver-1 a forged share.
    for stub in approvers.values():
        stub.online = True
    forged = shares[0]
    approvers["approver-1"].share = Share(
        x=forged.x, y=(forged.y + 1) % FIELD.prime,
        scheme_id=forged.scheme_id, prime=forged.prime,
        n=forged.n, z=forged.z,
    )
    result = quorum_approve("res-vault", client, POLICY)
    print(f"  forged share        -> approved={bool(result)} "
          f"({result.failure})")


if __name__ == "__main__":
    main()
