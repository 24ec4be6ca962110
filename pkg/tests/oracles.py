"""Independent brute-force oracles for exact-DP verification.

Nothing here uses Bellman recursion: optimal values come from enumerating
every deterministic policy over the remaining layers and evaluating each by
summing probability * reward over all state paths.  Exponential in S*H, so
only usable on tiny shapes, which is the point — an oracle with a different
failure mode than the code under test.
"""

import itertools

import numpy as np


def all_tail_policies(A: int, layers: int, S: int) -> np.ndarray:
    """(A**(layers*S), layers, S) array: every action table, mixed radix."""
    n = A ** (layers * S)
    idx = np.arange(n, dtype=np.int64)
    digits = np.empty((n, layers * S), dtype=np.int64)
    for d in range(layers * S - 1, -1, -1):
        digits[:, d] = idx % A
        idx //= A
    return digits.reshape(n, layers, S)


def brute_policy_value(mdp, actions, s_start: int) -> float:
    """V^pi_1(s_start) by full path enumeration (S**H paths)."""
    total = 0.0
    for path in itertools.product(range(mdp.S), repeat=mdp.H):
        prob, rew, s = 1.0, 0.0, s_start
        for h, nxt in enumerate(path):
            a = int(actions[h][s])
            rew += float(mdp.r[h, s, a])
            prob *= float(mdp.P[h, s, a, nxt])
            s = nxt
        total += prob * rew
    return total


def brute_value_tables(mdp):
    """(V_star (H+1,S), Q_star (H,S,A)) via tail-policy enumeration.

    For each start layer h0 and state s, evaluates every policy over layers
    h0..H-1 by path expansion; V* is the max, and Q*(h0,s,a) the max over
    policies whose first action at s is a.
    """
    S, A, H = mdp.S, mdp.A, mdp.H
    P, r = mdp.P, mdp.r
    v_star = np.zeros((H + 1, S))
    q_star = np.empty((H, S, A))
    for h0 in range(H):
        L = H - h0
        pis = all_tail_policies(A, L, S)
        for s_start in range(S):
            returns = np.zeros(pis.shape[0])
            for path in itertools.product(range(S), repeat=L):
                prob = np.ones(pis.shape[0])
                rew = np.zeros(pis.shape[0])
                s = s_start
                for j, nxt in enumerate(path):
                    h = h0 + j
                    a = pis[:, j, s]
                    rew += r[h, s, a]
                    prob *= P[h, s, a, nxt]
                    s = nxt
                returns += prob * rew
            v_star[h0, s_start] = returns.max()
            first = pis[:, 0, s_start]
            for a in range(A):
                q_star[h0, s_start, a] = returns[first == a].max()
    return v_star, q_star


# shapes with A**(S*H) <= 6561 so the enumeration stays cheap; S*A*H <= 24
ORACLE_SHAPES = [
    (2, 2, 2), (2, 3, 2), (3, 2, 2), (2, 2, 3), (2, 2, 4),
    (4, 2, 2), (2, 4, 2), (3, 3, 2), (3, 2, 3), (2, 3, 3),
    (2, 2, 5), (2, 2, 6), (3, 2, 4), (4, 2, 3), (3, 4, 2),
    (2, 4, 3), (4, 3, 2), (2, 6, 2), (6, 2, 2), (2, 3, 4),
]
