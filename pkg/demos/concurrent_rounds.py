"""Round-count scaling of the concurrent simulator.

M agents share a frozen greedy policy each round; the round ends after
the first trajectory that changes the Q-table (the rest of the batch is
discarded).  Round count is bounded by

    rounds <= (update rounds) + ceil(budget / M) + 1,

so wall-clock rounds shrink almost linearly in M once updates get rare.
"""
from stageq import (AlgoConstants, ConcurrentConfig, EnvSpec,
                    round_count_bound, run_concurrent_experiment)

env = EnvSpec(kind="random", S=3, A=2, H=4, env_seed=2)
const = AlgoConstants(p=0.1, c1=1.2, c2=1.2, c3=0.06)
BUDGET = 2_000

print(f"trajectory budget {BUDGET}, env S=3 A=2 H=4")
print(f"{'M':>3} {'rounds':>7} {'updates':>8} {'consumed':>9} {'bound':>7}")
for M in (1, 2, 4, 8, 16):
    cc = ConcurrentConfig(agents=M, epsilon=0.1, k_eps_override=BUDGET)
    res = run_concurrent_experiment(env, cc, algo="advantage",
                                    constants=const, seed=0)
    n_rounds = len(res.rounds)
    bound = round_count_bound(res.update_rounds, res.budget, M)
    print(f"{M:>3} {n_rounds:>7} {res.update_rounds:>8} "
          f"{res.total_consumed:>9} {bound:>7}")
