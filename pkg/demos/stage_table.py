"""Print the stage-length table and check its growth envelope.

Stage lengths follow e_1 = H, e_{i+1} = e_i + floor(e_i / H), so they
grow geometrically at rate ~ (1 + 1/H) and the number of stages needed
to cover n visits is O(H log n).  That logarithmic count is what caps
the number of Q-table writes per (s, a, h).
"""
from stageq import build_schedule, stage_count_bound

for H in (1, 2, 8, 64):
    sched = build_schedule(H, n_max=10_000)
    print(f"H={H}: {sched.n_stages} stages to cover 10^4 visits "
          f"(bound {stage_count_bound(H, 10_000):.1f})")
    print("  lengths:", sched.lengths[:10], "...")
    print("  ends:   ", sched.ends[:10], "...")

sched = build_schedule(8, n_max=10_000)
ratios = [b / a for a, b in zip(sched.lengths, sched.lengths[1:])]
print(f"\nH=8 consecutive length ratios: min={min(ratios):.4f} "
      f"max={max(ratios):.4f} (envelope [{1 + 1/16:.4f}, {1 + 1/8:.4f}])")
