"""Why end-to-end reliability is unforgiving: chaining per-action success
rates across the hundreds of actions in a shopping run.

Run:  python3 demos/reliability_math.py
"""

from shopsim.metrics import chained_reliability, min_actions_below

print("task success after n consecutive actions, per-action reliability r:\n")
header = "      n " + "".join(f"  r={r:4.2f}" for r in (0.90, 0.95, 0.99, 0.995, 0.999))
print(header)
for n in (10, 25, 50, 103, 200, 400, 600):
    row = f"  {n:5d} "
    for r in (0.90, 0.95, 0.99, 0.995, 0.999):
        row += f"  {chained_reliability(r, n):6.3f}"
    print(row)

print()
n = min_actions_below(0.99, 0.357)
print(f"at 99% per-action reliability, only {n} consecutive actions drop the")
print(f"task success rate below 35.7% (0.99^{n} = {chained_reliability(0.99, n):.4f})")

one_hour = 600  # 10 actions per minute for an hour
print(
    f"\nan hour-long task at 10 actions/minute chains {one_hour} actions:"
    f" overall reliability {chained_reliability(0.99, one_hour) * 100:.2f}%"
)

print("\nper-action reliability needed for a 90% hour-long task:")
for target in (0.5, 0.9):
    lo, hi = 0.99, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if chained_reliability(mid, one_hour) < target else (lo, mid)
    print(f"  target {target:.0%}: r = {hi:.6f}")
