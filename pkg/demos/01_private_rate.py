"""
Private e-power of a Bernoulli pair
===================================

How much evidence per sample can an epsilon-DP e-variable collect against
Bern(0.3) when the data come from Bern(0.7)?
"""

# %%
import numpy as np

from dpevalues import TestingPair, bernoulli, optimal_evariable, rate, solve_lambda_star
from dpevalues.optimal import bernoulli_dual_rate

pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
kl = float(0.7 * np.log(0.7 / 0.3) + 0.3 * np.log(0.3 / 0.7))
print(f"non-private rate KL(Q||P) = {kl:.4f}")

# %%
# The optimal statistic clips the likelihood ratio to [c1, c2]; the window has
# width e^eps and its position is fixed by requiring mean one under the null.
for eps in (0.25, 0.5, 1.0, 2.0, 4.0):
    con = solve_lambda_star(pair, eps)
    dual, _ = bernoulli_dual_rate(0.3, 0.7, eps)
    print(f"eps={eps:<5g} c1={con.c1:.4f} c2={con.c2:.4f} rate={con.rate:.5f} dual={dual:.5f}")

# %%
# Once eps exceeds the log-range of the likelihood ratio nothing is clipped.
print(rate(pair, 4.0), "==", kl)

# %%
ev = optimal_evariable(pair, 1.0)
print("values on {0, 1}:", ev(np.array([0.0, 1.0])), " null mean:", ev.null_mean())
