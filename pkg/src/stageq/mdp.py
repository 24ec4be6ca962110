"""Tabular episodic MDPs: representation, exact solvers, sampling, generators.

An episodic MDP has horizon H, S states, A actions, step-indexed transition
kernels P[h][s][a] (a probability vector over next states) and deterministic
step rewards r[h][s][a] in [0, 1].  Episodes run h = 1..H; all math here is
0-based, so value tables carry an extra all-zero boundary row at index H.

Conventions used throughout the package:

  * greedy ties break to the lowest action index (np.argmax order), so every
    downstream policy quantity is deterministic;
  * next states are drawn by inverse CDF over precomputed cumulative rows,
    consuming exactly one uniform per step regardless of the row;
  * the initial-state sequence is pre-committed before a run (fixed state,
    fixed cycle, or a private seeded stream) and never reads the run's RNG.

The plain-text MDP file format is:  a header line "S A H", then one line
"P h s a p_0 ... p_{S-1}" per (h, s, a) and one line "R h s a r" per
(h, s, a), whitespace-separated, 0-based indices, '#' comments allowed.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


# ---------------------------------------------------------------- errors

class MdpValidationError(Exception):
    """Base class for MDP validation failures (first violation wins)."""


class NonStochasticRow(MdpValidationError):
    def __init__(self, h, s, a, detail):
        super().__init__(f"P[h={h}][s={s}][a={a}] is not a probability row: {detail}")
        self.h, self.s, self.a = h, s, a


class RewardOutOfRange(MdpValidationError):
    def __init__(self, h, s, a, value):
        super().__init__(f"r[h={h}][s={s}][a={a}] = {value} outside [0, 1]")
        self.h, self.s, self.a = h, s, a
        self.value = value


class InvalidDelta(ValueError):
    pass


class InvalidEpsilon(ValueError):
    pass


# ------------------------------------------------------- initial states

@dataclass
class InitialStates:
    """Pre-committed initial-state sequence s_1^k, k = 0, 1, 2, ...

    kind "fixed":  always states[0].
    kind "cyclic": states[k % len(states)].
    kind "seeded": uniform over [0, S) from a private PCG64 stream keyed by
    `seed`; the sequence is a pure function of (seed, k), independent of the
    run's RNG, so reruns and algorithm comparisons see identical starts.
    """

    kind: str
    states: tuple = ()
    seed: Optional[int] = None

    @classmethod
    def fixed(cls, s: int) -> "InitialStates":
        return cls(kind="fixed", states=(int(s),))

    @classmethod
    def cyclic(cls, seq) -> "InitialStates":
        if len(seq) == 0:
            raise ValueError("cyclic initial-state sequence must be non-empty")
        return cls(kind="cyclic", states=tuple(int(s) for s in seq))

    @classmethod
    def seeded(cls, seed: int) -> "InitialStates":
        return cls(kind="seeded", seed=int(seed))

    def state(self, k: int, S: int) -> int:
        if self.kind == "fixed":
            return self.states[0]
        if self.kind == "cyclic":
            return self.states[k % len(self.states)]
        if self.kind == "seeded":
            cache = getattr(self, "_cache", None)
            if cache is None:
                cache = []
                self._cache = cache
                self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))
                self._cache_S = S
            if S != self._cache_S:
                raise ValueError("seeded InitialStates bound to a different state count")
            while k >= len(cache):
                cache.extend(self._gen.integers(0, S, size=256).tolist())
            return cache[k]
        raise ValueError(f"unknown initial-state kind {self.kind!r}")


# ------------------------------------------------------------ core types

@dataclass(eq=False)
class EpisodicMdp:
    """Finite-horizon tabular MDP with deterministic rewards."""

    S: int
    A: int
    H: int
    P: np.ndarray          # (H, S, A, S) transition kernels
    r: np.ndarray          # (H, S, A) rewards in [0, 1]
    init: InitialStates = field(default_factory=lambda: InitialStates.fixed(0))

    def initial_state(self, k: int) -> int:
        return self.init.state(k, self.S)

    # Cached plain-list views for the sampling hot loop.  Cumulative rows get
    # their final entry forced to 1.0 so a uniform in [0, 1) always lands.
    def cum_rows(self):
        rows = getattr(self, "_cum_rows", None)
        if rows is None:
            cum = np.cumsum(self.P, axis=-1)
            cum[..., -1] = 1.0
            rows = cum.tolist()
            self._cum_rows = rows
        return rows

    def reward_rows(self):
        rows = getattr(self, "_reward_rows", None)
        if rows is None:
            rows = self.r.tolist()
            self._reward_rows = rows
        return rows


@dataclass(eq=False)
class DeterministicPolicy:
    """Step-indexed deterministic policy; actions has shape (H, S)."""

    actions: np.ndarray

    def select_action(self, h: int, s: int) -> int:
        return int(self.actions[h, s])

    def __eq__(self, other):
        return isinstance(other, DeterministicPolicy) and np.array_equal(self.actions, other.actions)


@dataclass(eq=False)
class ValueTables:
    """Exact V (H+1, S) and Q (H+1, S, A) tables; row H is the zero boundary."""

    V: np.ndarray
    Q: np.ndarray


def validate(mdp: EpisodicMdp, tol: float = 1e-12) -> None:
    """Check stochasticity and reward range; raise on the first violation.

    Rows must be entrywise >= 0 with |sum - 1| <= tol; rewards must lie in
    [0, 1].  Scan order is (h, s, a).  Shape errors raise ValueError.
    """
    P, r = np.asarray(mdp.P, dtype=float), np.asarray(mdp.r, dtype=float)
    if P.shape != (mdp.H, mdp.S, mdp.A, mdp.S):
        raise ValueError(f"P shape {P.shape} != {(mdp.H, mdp.S, mdp.A, mdp.S)}")
    if r.shape != (mdp.H, mdp.S, mdp.A):
        raise ValueError(f"r shape {r.shape} != {(mdp.H, mdp.S, mdp.A)}")
    for h in range(mdp.H):
        for s in range(mdp.S):
            for a in range(mdp.A):
                row = P[h, s, a]
                if np.any(row < 0.0):
                    raise NonStochasticRow(h, s, a, f"negative entry {row.min()}")
                gap = abs(row.sum() - 1.0)
                if gap > tol:
                    raise NonStochasticRow(h, s, a, f"row sums to {row.sum()!r}")
                rv = r[h, s, a]
                if not 0.0 <= rv <= 1.0:
                    raise RewardOutOfRange(h, s, a, rv)


# ----------------------------------------------------------- exact solvers

def backward_induction(mdp: EpisodicMdp):
    """Exact optimal values and a greedy optimal policy.

    Q*[h] = r[h] + P[h] . V*[h+1],  V*[h] = max_a Q*[h],  V*[H] = 0,
    with argmax ties broken to the lowest action index.
    Returns (ValueTables, DeterministicPolicy).
    """
    H, S, A = mdp.H, mdp.S, mdp.A
    V = np.zeros((H + 1, S))
    Q = np.zeros((H + 1, S, A))
    pi = np.zeros((H, S), dtype=np.int64)
    for h in range(H - 1, -1, -1):
        Q[h] = mdp.r[h] + mdp.P[h].dot(V[h + 1])
        pi[h] = np.argmax(Q[h], axis=1)
        V[h] = Q[h][np.arange(S), pi[h]]
    return ValueTables(V=V, Q=Q), DeterministicPolicy(actions=pi)


def policy_evaluation(mdp: EpisodicMdp, policy: DeterministicPolicy) -> ValueTables:
    """Exact V^pi and Q^pi for a deterministic step-indexed policy."""
    H, S, A = mdp.H, mdp.S, mdp.A
    acts = np.asarray(policy.actions, dtype=np.int64)
    if acts.shape != (H, S):
        raise ValueError(f"policy shape {acts.shape} != {(H, S)}")
    if acts.min() < 0 or acts.max() >= A:
        raise ValueError(f"policy actions outside [0, {A})")
    V = np.zeros((H + 1, S))
    Q = np.zeros((H + 1, S, A))
    idx = np.arange(S)
    for h in range(H - 1, -1, -1):
        Q[h] = mdp.r[h] + mdp.P[h].dot(V[h + 1])
        V[h] = Q[h][idx, acts[h]]
    return ValueTables(V=V, Q=Q)


# ---------------------------------------------------------------- sampling

def sample_episode(mdp: EpisodicMdp, actor, rng, episode_index: int = 0):
    """Roll out one episode; returns [(s, a, r, s_next)] of length H.

    `actor` needs select_action(h, s) -> a; if it also has observe(h, s, a,
    s_next), each transition is fed back immediately after it happens (the
    online-learner path).  `rng` needs random() -> float in [0, 1); exactly
    one uniform is consumed per step.
    """
    cum = mdp.cum_rows()
    rew = mdp.reward_rows()
    select = actor.select_action
    observe = getattr(actor, "observe", None)
    s = mdp.initial_state(episode_index)
    traj = []
    for h in range(mdp.H):
        a = select(h, s)
        u = rng.random()
        s_next = bisect_right(cum[h][s][a], u)
        traj.append((s, a, rew[h][s][a], s_next))
        if observe is not None:
            observe(h, s, a, s_next)
        s = s_next
    return traj


# -------------------------------------------------------------- generators

def make_random_mdp(S: int, A: int, H: int, seed: int,
                    reward_sparsity: float = 0.0,
                    init: Optional[InitialStates] = None) -> EpisodicMdp:
    """Dense random instance: Dirichlet(1,...,1) rows, uniform [0,1] rewards.

    Each reward is independently zeroed with probability reward_sparsity
    (sparsity 1.0 gives an all-zero reward tensor exactly).  Deterministic
    in `seed`.
    """
    if not 0.0 <= reward_sparsity <= 1.0:
        raise ValueError(f"reward_sparsity must be in [0, 1], got {reward_sparsity}")
    gen = np.random.default_rng(seed)
    P = gen.dirichlet(np.ones(S), size=(H, S, A))
    r = gen.uniform(size=(H, S, A))
    if reward_sparsity > 0.0:
        r[gen.random((H, S, A)) < reward_sparsity] = 0.0
    return EpisodicMdp(S=S, A=A, H=H, P=P, r=r,
                       init=init or InitialStates.fixed(0))


def make_jao_chain(H: int, epsilon: float, delta: Optional[float] = None,
                   optimal_actions=None, seed: int = 0,
                   init: Optional[InitialStates] = None) -> EpisodicMdp:
    """Two-state hard chain: a rewardless state s0 and a rewarding state s1.

    Rewards are r_h(s0, a) = 0 and r_h(s1, a) = 1 for every h and a.  From
    s1 every action moves to s0 with probability delta.  From s0 the chain
    reaches s1 with probability delta, except that one hidden per-layer
    action a*_h gets a bonus: P_h(s1 | s0, a*_h) = delta + epsilon.  Small
    epsilon makes the action gap tiny at every layer while delta keeps the
    chain well-mixed, which is what makes the instance hard.

    delta defaults to 16/H (requires H >= 33 to stay below 1/2).  epsilon
    may be 0 (perfectly symmetric actions) and at most min(8/H, delta/2).
    optimal_actions is a length-H int array, or None to draw one uniformly
    from `seed`.
    """
    if delta is None:
        delta = 16.0 / H
    if not 0.0 <= delta < 0.5:
        raise InvalidDelta(f"delta must be in [0, 1/2), got {delta} (H={H})")
    if delta + epsilon > 1.0:
        raise InvalidDelta(f"delta + epsilon = {delta + epsilon} exceeds 1")
    eps_cap = min(8.0 / H, delta / 2.0)
    if not 0.0 <= epsilon <= eps_cap:
        raise InvalidEpsilon(f"epsilon must be in [0, {eps_cap}], got {epsilon}")
    if optimal_actions is None:
        gen = np.random.default_rng(seed)
        optimal_actions = gen.integers(0, 2, size=H)
    optimal_actions = np.asarray(optimal_actions, dtype=np.int64)
    if optimal_actions.shape != (H,) or optimal_actions.min() < 0 or optimal_actions.max() > 1:
        raise ValueError("optimal_actions must be H entries in {0, 1}")

    P = np.zeros((H, 2, 2, 2))
    r = np.zeros((H, 2, 2))
    P[:, 1, :, 0] = delta        # s1 -> s0
    P[:, 1, :, 1] = 1.0 - delta
    P[:, 0, :, 0] = 1.0 - delta  # s0 -> s1, baseline action
    P[:, 0, :, 1] = delta
    for h in range(H):
        a_star = optimal_actions[h]
        P[h, 0, a_star, 0] = 1.0 - delta - epsilon
        P[h, 0, a_star, 1] = delta + epsilon
    r[:, 1, :] = 1.0
    return EpisodicMdp(S=2, A=2, H=H, P=P, r=r,
                       init=init or InitialStates.fixed(0))


# ---------------------------------------------------------------- file I/O

def save_mdp(mdp: EpisodicMdp, path) -> None:
    """Write the plain-text tabular format (see module docstring)."""
    lines = [f"{mdp.S} {mdp.A} {mdp.H}"]
    for h in range(mdp.H):
        for s in range(mdp.S):
            for a in range(mdp.A):
                probs = " ".join(f"{p:.17g}" for p in mdp.P[h, s, a])
                lines.append(f"P {h} {s} {a} {probs}")
    for h in range(mdp.H):
        for s in range(mdp.S):
            for a in range(mdp.A):
                lines.append(f"R {h} {s} {a} {mdp.r[h, s, a]:.17g}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_mdp(path) -> EpisodicMdp:
    """Parse the plain-text tabular format; raises ValueError with the
    offending line number on malformed input.  Initial state defaults to
    fixed(0) (the format does not carry an initial-state mode)."""
    with open(path) as f:
        raw = f.readlines()
    lines = []
    for ln, text in enumerate(raw, start=1):
        text = text.split("#", 1)[0].strip()
        if text:
            lines.append((ln, text))
    if not lines:
        raise ValueError(f"{path}: empty MDP file")

    ln, header = lines[0]
    parts = header.split()
    if len(parts) != 3:
        raise ValueError(f"{path}:{ln}: header must be 'S A H', got {header!r}")
    try:
        S, A, H = (int(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"{path}:{ln}: non-integer header field: {exc}") from None
    if min(S, A, H) < 1:
        raise ValueError(f"{path}:{ln}: S, A, H must be positive")

    P = np.full((H, S, A, S), np.nan)
    r = np.full((H, S, A), np.nan)
    for ln, text in lines[1:]:
        parts = text.split()
        kind = parts[0]
        if kind == "P":
            if len(parts) != 4 + S:
                raise ValueError(f"{path}:{ln}: P line needs 3 indices + {S} probabilities")
            h, s, a = _parse_indices(path, ln, parts[1:4], H, S, A)
            P[h, s, a] = [_parse_float(path, ln, tok) for tok in parts[4:]]
        elif kind == "R":
            if len(parts) != 5:
                raise ValueError(f"{path}:{ln}: R line needs 3 indices + 1 reward")
            h, s, a = _parse_indices(path, ln, parts[1:4], H, S, A)
            r[h, s, a] = _parse_float(path, ln, parts[4])
        else:
            raise ValueError(f"{path}:{ln}: unknown record {kind!r} (expected P or R)")
    if np.isnan(P).any():
        h, s, a = np.argwhere(np.isnan(P).any(axis=-1))[0]
        raise ValueError(f"{path}: missing P block for h={h} s={s} a={a}")
    if np.isnan(r).any():
        h, s, a = np.argwhere(np.isnan(r))[0]
        raise ValueError(f"{path}: missing R entry for h={h} s={s} a={a}")
    return EpisodicMdp(S=S, A=A, H=H, P=P, r=r, init=InitialStates.fixed(0))


def _parse_indices(path, ln, toks, H, S, A):
    try:
        h, s, a = (int(t) for t in toks)
    except ValueError:
        raise ValueError(f"{path}:{ln}: non-integer index in {toks}") from None
    if not (0 <= h < H and 0 <= s < S and 0 <= a < A):
        raise ValueError(f"{path}:{ln}: index (h={h}, s={s}, a={a}) out of range")
    return h, s, a


def _parse_float(path, ln, tok):
    try:
        return float(tok)
    except ValueError:
        raise ValueError(f"{path}:{ln}: bad float {tok!r}") from None
