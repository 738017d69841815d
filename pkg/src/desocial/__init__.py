"""User-validated distributed social recommendation.

Per-user link scorers are trained over temporal graph snapshots, every
requesting user picks a scoring backbone from a pool by evaluating the
candidates on its own neighborhood history, candidate connections are
verified by majority vote of a sampled validator committee, and decisions
are evaluated with the consensus Acc@K metric.
"""

__version__ = "0.1.0"
