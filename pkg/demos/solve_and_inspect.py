"""Exact solve of a small random instance and of the two-state chain.

Builds both environments, validates them, runs backward induction, and
prints the optimal tables next to the value of the greedy-myopic policy
so you can see how much lookahead is worth.
"""
import numpy as np

from stageq import (DeterministicPolicy, backward_induction, make_jao_chain,
                    make_random_mdp, policy_evaluation, validate)

mdp = make_random_mdp(S=4, A=3, H=5, seed=7, reward_sparsity=0.5)
validate(mdp)
tables, pistar = backward_induction(mdp)

print(f"random instance S={mdp.S} A={mdp.A} H={mdp.H}")
print("V* at h=0:", np.round(tables.V[0], 4))
print("optimal actions per (h, s):")
print(pistar.actions)

# myopic = pick argmax immediate reward at every step
myopic = DeterministicPolicy(np.argmax(mdp.r, axis=2))
vm = policy_evaluation(mdp, myopic)
print("myopic V at h=0:", np.round(vm.V[0], 4))
print("lookahead gain:", np.round(tables.V[0] - vm.V[0], 4))

print()
chain = make_jao_chain(H=40, epsilon=0.1, delta=0.4, seed=0)
validate(chain)
ct, cpi = backward_induction(chain)
print(f"two-state chain H={chain.H}: V*(s0)={ct.V[0, 0]:.4f} "
      f"V*(s1)={ct.V[0, 1]:.4f}")
# the rewarding state's lead stays near 1/(2*delta + eps) all the way up
print("value gap by layer:", np.round(ct.V[:8, 1] - ct.V[:8, 0], 4), "...")
