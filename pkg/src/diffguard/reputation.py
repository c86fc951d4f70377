"""Sliding-window peer reputation and partner polling.

Each node scores every same-cluster peer per step: +1 when a polled message
was accepted, -1 when it was flagged, 0 when the peer was not polled. The
reputation is the sum over a short trailing window, so a flagged peer is
deprioritized for a few steps and then gets another chance.
"""

from collections import deque


class ReputationWindow:
    """Trailing window of per-peer verdict scores for one node."""

    def __init__(self, peers, window_len: int):
        if window_len < 1:
            raise ValueError("window_len must be at least 1")
        self.peers = tuple(sorted(peers))
        self._window = deque(maxlen=window_len)

    def record(self, verdicts: dict) -> None:
        """Push one step of polled verdicts (peer -> accepted)."""
        for l in verdicts:
            if l not in self.peers:
                raise ValueError(f"verdict for unknown peer {l}")
        self._window.append({l: (1 if ok else -1) for l, ok in verdicts.items()})

    def tau(self, peer) -> int:
        return sum(step.get(peer, 0) for step in self._window)

    def taus(self) -> dict:
        return {l: self.tau(l) for l in self.peers}


def poll_count(num_peers: int, fraction: float) -> int:
    """How many peers a node polls per step.

    At least one whenever any peer exists; round() keeps the count an
    integer under fractional polling (ties round half to even).
    """
    if num_peers == 0:
        return 0
    return max(1, round(fraction * num_peers))


def select_partners(taus: dict, fraction: float) -> tuple:
    """Poll the top peers by reputation, then drop any with negative score.

    Peers are ranked by descending reputation with node id breaking ties,
    the top poll_count survive the cut, and negative-reputation peers are
    removed after the cut rather than backfilled. The result can be empty,
    in which case the caller combines with its own estimate alone.
    """
    if not taus:
        return ()
    i = poll_count(len(taus), fraction)
    ranked = sorted(taus, key=lambda l: (-taus[l], l))
    return tuple(l for l in ranked[:i] if taus[l] >= 0)
