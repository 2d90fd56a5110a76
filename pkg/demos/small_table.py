"""A scaled-down run of the estimator simulation (bias and MSE of theta_hat).

Fifty replications per cell instead of two hundred; expect a minute or two.
The full-size table is ``semitrans simulate --table 1 --reps 200``.
"""

from semitrans.simulation import run_experiment

result = run_experiment(1, replications=50, n=(100, 200), seed=3)
print(f"{'a':>5} {'n':>5} {'mean':>8} {'mse':>8}")
for row in result.rows:
    print(f"{row['a']:>5} {row['n']:>5} {row['mean']:>8.3f} {row['mse']:>8.3f}")
