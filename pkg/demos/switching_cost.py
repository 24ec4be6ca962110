"""Measured greedy-policy switching cost vs the theoretical ceiling.

The stage learner only rewrites Q at stage ends, so the count of
(s, h)-local greedy-action changes grows like H^2 SA log T rather
than T.  This sweeps run length and prints measured / bound.
"""
from stageq import AlgoConstants, EnvSpec, RunConfig, run_experiment, switching_bound

env = EnvSpec(kind="random", S=3, A=2, H=5, env_seed=1)
const = AlgoConstants(p=0.1, c1=1.2, c2=1.2, c3=0.06)

print(f"{'episodes':>9} {'T':>7} {'switches':>9} {'ceiling':>9} {'used':>6}")
for K in (500, 2_000, 8_000, 32_000):
    res = run_experiment(RunConfig(env=env, algo="advantage", constants=const,
                                   episodes=K, seed=0))
    T = K * env.H
    bound = switching_bound(env.S, env.A, env.H, T)
    used = res.summary.n_switch / bound
    print(f"{K:>9} {T:>7} {res.summary.n_switch:>9} {bound:>9.0f} {used:>6.1%}")
