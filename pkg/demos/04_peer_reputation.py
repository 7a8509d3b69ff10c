#!/usr/bin/env python3
"""Rank devices by peer-reported service quality.

Ten honest devices rate each other well; three colluders rate only one
another and badmouth everyone else. Damped power iteration over the
row-normalized ratings pushes the clique's global trust to exactly
zero, because no honest peer extends it any weight, while a newcomer
with no history inherits the pre-trusted prior.
"""

import random

from trustgate import InteractionLedger, global_trust, normalize

HONEST = tuple(f"dev-{i:02d}" for i in range(1, 11))
CLIQUE = ("mal-01", "mal-02", "mal-03")
NEWCOMER = "dev-new"


def main() -> None:
    rng = random.Random(99)
    ledger = InteractionLedger(peers=HONEST + CLIQUE + (NEWCOMER,))

    # Honest devices mostly satisfy one another...
    for p in HONEST:
        for q in HONEST:
            if p != q:
                ledger.record_sat(p, q, rng.randrange(5, 20))
                ledger.record_unsat(p, q, rng.randrange(0, 3))
    # ...and have learned to distrust the clique.
    for p in HONEST:
        for q in CLIQUE:
            ledger.record_unsat(p, q, rng.randrange(3, 8))

    # The clique inflates itself and badmouths everyone else.
    for p in CLIQUE:
        for q in CLIQUE:
            if p != q:
                ledger.record_sat(p, q, 50)
        for q in HONEST:
            ledger.record_unsat(p, q, 10)

    # The newcomer has no interactions at all yet; like the honest
    # fleet, it was marked pre-trusted when it was provisioned.

    local = normalize(ledger)
    print(f"peers: {len(ledger.peers)} "
          f"(honest {len(HONEST)}, clique {len(CLIQUE)}, 1 newcomer)")
    print(f"rows with no positive ratings: {list(local.zero_rows)}")

    vector = global_trust(local, pretrusted=HONEST + (NEWCOMER,))
    print(f"converged in {vector.iterations_used} iterations "
          f"(residual {vector.residual:.2e})")

    print("\nglobal trust:")
    ranked = sorted(vector.scores.items(), key=lambda kv: -kv[1])
    for peer, score in ranked:
        tag = ("clique" if peer in CLIQUE
               else "newcomer" if peer == NEWCOMER else "honest")
        print(f"  {peer:<8} {score:.6f}  ({tag})")

    clique_total = sum(vector.scores[p] for p in CLIQUE)
    print(f"\nclique total: {clique_total} -- exactly zero; honest raters "
          f"extend it no weight, so its self-ratings never circulate")
    print(f"newcomer score {vector.scores[NEWCOMER]:.6f} is purely the "
          f"pre-trusted floor: nobody rates it yet, but provisioning "
          f"placed it in the pre-trusted set")


if __name__ == "__main__":
    main()
