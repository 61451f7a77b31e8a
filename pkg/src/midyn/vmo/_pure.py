"""Pure-Python oracle construction; the reference for the compiled kernel.

Both backends must produce identical structures: same suffix links, same
labels, same transition lists in the same insertion order. Distances are
compared in squared space against theta squared. Whenever the kernel
changes, this file is the semantics to match.
"""

from __future__ import annotations

import numpy as np


def _len_common_suffix(sfx, lrs, p1: int, p2: int) -> int:
    if p2 == sfx[p1]:
        return lrs[p1]
    while sfx[p2] != sfx[p1] and p2 != 0:
        p2 = sfx[p2]
    return min(lrs[p1], lrs[p2])


def build_arrays(frames: np.ndarray, theta: float):
    """Online factor-oracle construction over vector frames.

    Returns (sfx, lrs, labels, trn) where the arrays are int64 of length
    T + 1 (state 0 is the empty-sequence root, sfx[0] = labels[0] = -1) and
    trn is a per-state list of forward-transition targets in insertion order.
    """
    T = frames.shape[0]
    theta_sq = theta * theta
    sfx = np.empty(T + 1, dtype=np.int64)
    lrs = np.zeros(T + 1, dtype=np.int64)
    labels = np.empty(T + 1, dtype=np.int64)
    sfx[0] = -1
    labels[0] = -1
    trn: list[list[int]] = [[] for _ in range(T + 1)]
    n_labels = 0

    for t in range(1, T + 1):
        x = frames[t - 1]
        trn[t - 1].append(t)
        k = int(sfx[t - 1])
        pi_1 = t - 1
        match = -1
        while k >= 0:
            targets = trn[k]
            diffs = frames[np.asarray(targets, dtype=np.intp) - 1] - x
            d2 = np.einsum("ij,ij->i", diffs, diffs)
            in_reach = d2 <= theta_sq
            if in_reach.any():
                # closest in-threshold target; first one wins a distance tie
                best = int(np.argmin(np.where(in_reach, d2, np.inf)))
                match = targets[best]
                break
            trn[k].append(t)
            pi_1 = k
            k = int(sfx[k])
        if match < 0:
            sfx[t] = 0
            lrs[t] = 0
            labels[t] = n_labels
            n_labels += 1
        else:
            sfx[t] = match
            labels[t] = labels[match]
            lrs[t] = _len_common_suffix(sfx, lrs, pi_1, match - 1) + 1
    return sfx, lrs, labels, trn
