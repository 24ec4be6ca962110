"""Reproducible experiment harness: configs, streams, run and sweep drivers.

Determinism contract: every random draw in a run comes from a PCG64 stream
derived as

    SeedSequence(master_seed, spawn_key=(run_index, sha256(label)[:8]))

and consumed through a fixed-size buffer, so a (config, seed) pair replays
byte-identically on any platform.  The environment stream uses label
"env"; the concurrent runner adds "policy-pick".  Pre-committed initial
states and generated instances carry their own seeds and never touch the
run streams, so changing the learner never perturbs the environment draw
sequence.

The per-episode audit loop recomputes policy snapshots and exact policy
values only on episodes whose predecessor actually changed a Q entry; the
greedy policy cannot move otherwise.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .advantage import AlgoConstants, UcbAdvantageLearner
from .base import EpisodeReport
from .baselines import ClassicQUcbLearner, HoeffdingStageLearner
from .concurrent import ConcurrentConfig, run_concurrent, write_rounds_csv
from .mdp import (EpisodicMdp, InitialStates, backward_induction, load_mdp,
                  make_jao_chain, make_random_mdp, sample_episode, validate)
from .metrics import (EpisodeRecord, PolicyValueCache, SwitchTracker,
                      check_optimism, switching_bound, write_episode_csv)

ALGOS = ("advantage", "hoeffding-stage", "classic-qucb", "oracle")


class ConfigError(Exception):
    """Bad config file or config value; message carries file:line or field."""


class InvariantViolation(Exception):
    """A strict-mode runtime invariant failed."""


# ----------------------------------------------------------------- streams

class UniformStream:
    """Uniforms in [0, 1) from PCG64, drawn through a fixed 4096-block buffer.

    The block size is part of the stream definition: the sequence equals
    numpy's block draws regardless of any scalar/block equivalence, so the
    contract is stable across numpy versions and platforms.
    """

    BLOCK = 4096

    def __init__(self, seed_seq: np.random.SeedSequence):
        self.generator = np.random.Generator(np.random.PCG64(seed_seq))
        self._buf: list = []
        self._i = 0

    def random(self) -> float:
        i = self._i
        if i == len(self._buf):
            self._buf = self.generator.random(self.BLOCK).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]

    def integers(self, n: int) -> int:
        """Uniform int in [0, n) via rejection-free scaling of one uniform."""
        return int(self.random() * n)


def seeded_stream(master_seed: int, run_index: int, label: str) -> UniformStream:
    """Independent child stream; differing labels give unrelated streams."""
    label_key = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")
    seq = np.random.SeedSequence(master_seed, spawn_key=(run_index, label_key))
    return UniformStream(seq)


# ------------------------------------------------------------ environments

@dataclass
class EnvSpec:
    """Declarative environment choice: generator + parameters, or a file."""

    kind: str = "random"            # random | jao | file
    S: int = 3
    A: int = 2
    H: int = 5
    reward_sparsity: float = 0.0
    env_seed: int = 0
    jao_epsilon: float = 0.1
    jao_delta: Optional[float] = None
    path: Optional[str] = None
    init: Optional[InitialStates] = None

    def build(self) -> EpisodicMdp:
        if self.kind == "random":
            return make_random_mdp(self.S, self.A, self.H, seed=self.env_seed,
                                   reward_sparsity=self.reward_sparsity, init=self.init)
        if self.kind == "jao":
            return make_jao_chain(self.H, epsilon=self.jao_epsilon, delta=self.jao_delta,
                                  seed=self.env_seed, init=self.init)
        if self.kind == "file":
            mdp = load_mdp(self.path)
            if self.init is not None:
                mdp.init = self.init
            return mdp
        raise ConfigError(f"unknown env kind {self.kind!r}")


# ------------------------------------------------------------------ agents

class OracleAgent:
    """Debug agent that follows the exact optimal policy and never learns."""

    name = "oracle"

    def __init__(self, mdp: EpisodicMdp):
        self.S, self.A, self.H = mdp.S, mdp.A, mdp.H
        tables, pistar = backward_induction(mdp)
        self._qstar = tables.Q[:mdp.H].copy()
        self._actions = [int(a) for a in np.asarray(pistar.actions).reshape(-1)]
        self.stage_end_count = 0
        self.q_update_count = 0
        self.ref_fixed_count = 0

    def select_action(self, h: int, s: int) -> int:
        return self._actions[h * self.S + s]

    def run_episode(self, mdp, rng, episode_index: int = 0):
        traj = sample_episode(mdp, self, rng, episode_index)
        return traj, EpisodeReport(stage_ends=0, q_updates=0, refs_fixed=0)

    def greedy_actions_flat(self):
        return list(self._actions)

    def q_array(self) -> np.ndarray:
        return self._qstar.copy()

    def check_invariants(self) -> None:
        pass


def make_learner(algo: str, mdp: EpisodicMdp, constants: AlgoConstants,
                 n_max: int, cb: float = 2.0):
    if algo == "advantage":
        return UcbAdvantageLearner(mdp, constants, n_max=n_max)
    if algo == "hoeffding-stage":
        return HoeffdingStageLearner(mdp, constants, n_max=n_max)
    if algo == "classic-qucb":
        return ClassicQUcbLearner(mdp, constants, cb=cb)
    if algo == "oracle":
        return OracleAgent(mdp)
    raise ValueError(f"unknown algo {algo!r}; expected one of {ALGOS}")


# -------------------------------------------------------------- run configs

@dataclass
class RunConfig:
    env: EnvSpec = field(default_factory=EnvSpec)
    algo: str = "advantage"
    constants: AlgoConstants = field(default_factory=AlgoConstants)
    cb: float = 2.0
    episodes: int = 1000
    seed: int = 0
    log_every: str = "auto"        # auto | all | pow2
    strict: bool = False
    out_dir: Optional[str] = None


@dataclass
class RunSummary:
    algo: str
    seed: int
    episodes: int
    steps: int
    cum_regret: float
    n_switch: int
    switch_bound: float
    q_updates: int
    optimism_violations: int
    ref_states_fixed: int
    wall_time_s: float

    def line(self) -> str:
        return (f"algo={self.algo} seed={self.seed} episodes={self.episodes} "
                f"T={self.steps} cum_regret={self.cum_regret:.6f} "
                f"n_switch={self.n_switch} switch_bound={self.switch_bound:.1f} "
                f"q_updates={self.q_updates} "
                f"optimism_violations={self.optimism_violations} "
                f"ref_states_fixed={self.ref_states_fixed} "
                f"wall_time_s={self.wall_time_s:.3f}")


@dataclass
class RunResult:
    config: RunConfig
    records: list
    summary: RunSummary
    learner: object
    mdp: EpisodicMdp
    vstar: object                  # ValueTables
    pistar: object                 # DeterministicPolicy


# ------------------------------------------------------------------ drivers

def run_experiment(config: RunConfig) -> RunResult:
    """Run one seeded experiment with a full per-episode audit trail.

    Episode k's policy pi_k is the greedy table at the episode's start;
    regret, switching increments and optimism counts are derived from exact
    DP as described in the metrics module.  Writes CSVs under out_dir if
    set (episodes.csv, snapshot_q.csv, snapshot_v.csv); the summary line is
    for stdout because it carries wall time, which must stay out of the
    byte-deterministic files.
    """
    t0 = time.perf_counter()
    K = config.episodes
    if K < 1:
        raise ConfigError(f"episodes must be >= 1, got {K}")
    mdp = config.env.build()
    validate(mdp)
    vstar, pistar = backward_induction(mdp)
    qstar = vstar.Q
    vstar0 = vstar.V[0]
    learner = make_learner(config.algo, mdp, config.constants,
                           n_max=K * mdp.H + 1, cb=config.cb)
    env_rng = seeded_stream(config.seed, 0, "env")
    cache = PolicyValueCache(mdp)
    switches = SwitchTracker()
    records = []
    cum_regret = 0.0
    violations = 0
    policy = learner.greedy_actions_flat()
    switches.record(policy)
    vpi0 = cache.values(policy).V[0]
    resnapshot = False

    for k in range(1, K + 1):
        if resnapshot:
            policy = learner.greedy_actions_flat()
            switches.record(policy)
            vpi0 = cache.values(policy).V[0]
        traj, report = learner.run_episode(mdp, env_rng, k - 1)
        s1 = traj[0][0]
        reg = float(vstar0[s1] - vpi0[s1])
        cum_regret += reg
        resnapshot = report.q_changed
        if resnapshot:
            violations = max(violations, check_optimism(learner.q_array(), qstar))
        records.append(EpisodeRecord(
            k=k, episode_regret=reg, cum_regret=cum_regret,
            cum_switching_cost=switches.total,
            cum_q_updates=learner.q_update_count,
            cum_optimism_violations=violations,
            ref_states_fixed=learner.ref_fixed_count))

    T = K * mdp.H
    summary = RunSummary(
        algo=config.algo, seed=config.seed, episodes=K, steps=T,
        cum_regret=cum_regret, n_switch=switches.total,
        switch_bound=switching_bound(mdp.S, mdp.A, mdp.H, T),
        q_updates=learner.q_update_count,
        optimism_violations=violations,
        ref_states_fixed=learner.ref_fixed_count,
        wall_time_s=time.perf_counter() - t0)
    result = RunResult(config=config, records=records, summary=summary,
                       learner=learner, mdp=mdp, vstar=vstar, pistar=pistar)
    if config.strict:
        enforce_invariants(result)
    if config.out_dir is not None:
        write_run_outputs(result, config.out_dir)
    return result


def enforce_invariants(result: RunResult) -> None:
    """Strict-mode checks; raises InvariantViolation on the first breach."""
    s = result.summary
    learner = result.learner
    try:
        learner.check_invariants()
    except AssertionError as exc:
        raise InvariantViolation(str(exc)) from None
    if result.config.algo in ("advantage", "hoeffding-stage") and s.n_switch > s.switch_bound:
        raise InvariantViolation(
            f"n_switch {s.n_switch} exceeds deterministic bound {s.switch_bound:.1f}")
    bad = [r.k for r in result.records if r.episode_regret < -1e-9]
    if bad:
        raise InvariantViolation(f"negative episode regret at k={bad[0]}")


def checkpoint_regrets(records, episode_counts) -> dict:
    """cum_regret after each requested episode count, from one run's records."""
    return {k: records[k - 1].cum_regret for k in episode_counts}


def sweep_scaling(config: RunConfig, t_multipliers, seeds) -> list:
    """Regret-vs-T table: rows (T, seed, cum_regret), T in steps.

    One run per seed suffices because the learner is online: cum_regret at
    an intermediate episode equals a run stopped there (same stream).
    Checkpoints are round(episodes * m) for each multiplier.
    """
    ks = sorted({max(1, round(config.episodes * m)) for m in t_multipliers})
    rows = []
    for seed in seeds:
        cfg = replace(config, episodes=ks[-1], seed=seed, out_dir=None)
        result = run_experiment(cfg)
        marks = checkpoint_regrets(result.records, ks)
        H = result.mdp.H
        for k in ks:
            rows.append((k * H, seed, marks[k]))
    return rows


def write_sweep_csv(rows, path) -> None:
    with open(path, "w") as f:
        f.write("T,seed,cum_regret\n")
        for T, seed, reg in rows:
            f.write(f"{T},{seed},{reg!r}\n")


def run_concurrent_experiment(env: EnvSpec, cc: ConcurrentConfig, *,
                              algo: str = "advantage",
                              constants: Optional[AlgoConstants] = None,
                              seed: int = 0, cb: float = 2.0,
                              out_dir=None):
    """Build env + learner + streams, run the round loop, optionally log CSV.

    The learner's visit horizon is sized from the budget plus one round of
    overshoot; the pick stream is separate from the env stream so adding
    the final policy draw never perturbs trajectory generation.
    """
    mdp = env.build()
    validate(mdp)
    budget = cc.budget(mdp.S, mdp.A, mdp.H)
    n_max = (budget + cc.agents) * mdp.H + 1
    learner = make_learner(algo, mdp, constants or AlgoConstants(),
                           n_max=n_max, cb=cb)
    env_rng = seeded_stream(seed, 0, "env")
    pick_rng = seeded_stream(seed, 0, "policy-pick")
    result = run_concurrent(mdp, learner, cc, env_rng, pick_rng)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rounds_csv(result.rounds, out / "rounds.csv")
    return result


# ------------------------------------------------------------- file output

def _log_filter(records, mode: str):
    if mode == "all":
        return records
    if mode == "pow2":
        keep = []
        mark = 1
        for rec in records:
            if rec.k == mark:
                keep.append(rec)
                mark *= 2
        if records and keep[-1].k != records[-1].k:
            keep.append(records[-1])
        return keep
    raise ConfigError(f"unknown log cadence {mode!r}")


def write_run_outputs(result: RunResult, out_dir) -> None:
    """episodes.csv plus Q/V snapshot CSVs; all rows are deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mode = result.config.log_every
    if mode == "auto":
        mode = "all" if result.config.episodes <= 100_000 else "pow2"
    write_episode_csv(_log_filter(result.records, mode), out / "episodes.csv")

    learner = result.learner
    q = learner.q_array()
    with open(out / "snapshot_q.csv", "w") as f:
        f.write("h,s,a,Q\n")
        for h in range(q.shape[0]):
            for s in range(q.shape[1]):
                for a in range(q.shape[2]):
                    f.write(f"{h},{s},{a},{float(q[h, s, a])!r}\n")
    vref = learner.vref_array() if hasattr(learner, "vref_array") else None
    v = learner.v_array() if hasattr(learner, "v_array") else None
    with open(out / "snapshot_v.csv", "w") as f:
        f.write("h,s,V,Vref\n")
        if v is not None:
            H, S = v.shape[0] - 1, v.shape[1]
            for h in range(H):
                for s in range(S):
                    if vref is not None:
                        f.write(f"{h},{s},{float(v[h, s])!r},{float(vref[h, s])!r}\n")
                    else:
                        f.write(f"{h},{s},{float(v[h, s])!r},\n")


# ------------------------------------------------------------- config files

def parse_kv_file(path) -> dict:
    """key = value lines, '#' comments; raises ConfigError with file:line."""
    out = {}
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{ln}: expected 'key = value', got {raw.strip()!r}")
            key, val = text.split("=", 1)
            key, val = key.strip(), val.strip()
            if not key:
                raise ConfigError(f"{path}:{ln}: empty key")
            if key in out:
                raise ConfigError(f"{path}:{ln}: duplicate key {key!r}")
            out[key] = val
    return out


def parse_init_spec(text: str) -> InitialStates:
    """fixed:S | cyclic:a,b,c | seeded:SEED"""
    kind, _, arg = text.partition(":")
    try:
        if kind == "fixed":
            return InitialStates.fixed(int(arg or 0))
        if kind == "cyclic":
            return InitialStates.cyclic([int(t) for t in arg.split(",") if t != ""])
        if kind == "seeded":
            return InitialStates.seeded(int(arg or 0))
    except ValueError as exc:
        raise ConfigError(f"bad init spec {text!r}: {exc}") from None
    raise ConfigError(f"unknown init kind {kind!r} (fixed/cyclic/seeded)")


_RUN_KEYS = {
    "env": str, "S": int, "A": int, "H": int, "sparsity": float, "env_seed": int,
    "jao_epsilon": float, "delta": float, "init": str,
    "algo": str, "episodes": int, "seed": int, "p": float,
    "c1": float, "c2": float, "c3": float, "c4": float, "cb": float,
    "beta": float, "n0_override": float,
    "log_every": str, "strict": str, "out": str,   # strict is bool, special-cased
    # concurrent-only keys, routed by the CLI:
    "agents": int, "epsilon": float, "c5": float, "k_eps_override": float,
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def coerce_kv(kv: dict) -> dict:
    """Convert raw string values per _RUN_KEYS; ConfigError names the field."""
    out = {}
    for key, val in kv.items():
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "strict":
            out[key] = _parse_bool(val)
            continue
        typ = _RUN_KEYS[key]
        try:
            out[key] = typ(val)
        except ValueError:
            raise ConfigError(f"config key {key!r}: bad {typ.__name__} {val!r}") from None
    return out


def build_run_config(values: dict) -> RunConfig:
    """Assemble a RunConfig from coerced key/values (file and/or CLI)."""
    env_text = values.get("env", "random")
    kind = env_text
    path = None
    if env_text.startswith("file:"):
        kind, path = "file", env_text[5:]
    elif env_text not in ("random", "jao"):
        kind, path = "file", env_text
    init = parse_init_spec(values["init"]) if "init" in values else None
    env = EnvSpec(kind=kind, S=values.get("S", 3), A=values.get("A", 2),
                  H=values.get("H", 5),
                  reward_sparsity=values.get("sparsity", 0.0),
                  env_seed=values.get("env_seed", 0),
                  jao_epsilon=values.get("jao_epsilon", 0.1),
                  jao_delta=values.get("delta"),
                  path=path, init=init)
    ckw = {}
    for name in ("p", "c1", "c2", "c3", "c4", "beta", "n0_override"):
        if name in values:
            ckw[name] = values[name]
    try:
        constants = AlgoConstants(**ckw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    algo = values.get("algo", "advantage")
    if algo not in ALGOS:
        raise ConfigError(f"unknown algo {algo!r}; expected one of {ALGOS}")
    return RunConfig(env=env, algo=algo, constants=constants,
                     cb=values.get("cb", 2.0),
                     episodes=values.get("episodes", 1000),
                     seed=values.get("seed", 0),
                     log_every=values.get("log_every", "auto"),
                     strict=values.get("strict", False),
                     out_dir=values.get("out"))


def build_concurrent_config(values: dict) -> ConcurrentConfig:
    return ConcurrentConfig(agents=values.get("agents", 1),
                            epsilon=values.get("epsilon", 0.1),
                            c5=values.get("c5", 1.0),
                            k_eps_override=values.get("k_eps_override"))
