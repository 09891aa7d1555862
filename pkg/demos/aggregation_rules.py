# # Aggregating an ensemble of critics
#
# Each method in this package trains the same critic ensemble and differs only
# in how the N value estimates at a state-action pair are folded into one number.
# This script walks through the rules on hand-picked numbers.

import numpy as np

from dea_rl.ensemble import (
    DIRECTIONAL,
    MEAN,
    MIN_ALL,
    SUBSET_MIN,
    AggregationRule,
    aggregate,
    directional_weights,
    disagreement,
)

# ## Disagreement
#
# The spread of the ensemble is the mean absolute gap over all pairs of critics.

qs = np.array([0.0, 1.0, 2.0])
print("estimates:", qs)
print("disagreement:", disagreement(qs))  # (1 + 2 + 1) / 3

# ## The fixed rules
#
# SAC takes the minimum, the mean is REDQ's actor-side rule, and REDQ's target
# takes the minimum of a random pair drawn once per update.

rng = np.random.default_rng(0)
print("min:", aggregate(qs, AggregationRule(MIN_ALL)))
print("mean:", aggregate(qs, AggregationRule(MEAN)))
print("min of a random pair:", [aggregate(qs, AggregationRule(SUBSET_MIN, 2), rng=rng) for _ in range(6)])

# ## The directional rule
#
# mean + kappa * disagreement. Negative kappa leans pessimistic, positive kappa
# optimistic. With three critics:

for kappa in (-0.8, -0.5, 0.0, 0.5, 0.75):
    print(f"kappa {kappa:+.2f} -> {aggregate(qs, AggregationRule(DIRECTIONAL), kappa):.4f}")

# The same number is a fixed weighting of the sorted estimates, which is how the
# package evaluates it and back-propagates through it:

print("weights on sorted estimates for kappa=0.75:", directional_weights(3, 0.75))

# ## Two critics
#
# With N = 2 the disagreement is |q1 - q2|, so kappa = -0.5 gives exactly the
# minimum and kappa = +0.5 exactly the maximum. That is why DEA with both
# parameters frozen at -0.5 retraces SAC bit for bit.

pairs = rng.normal(size=(2, 5))
print("pairs:\n", pairs)
print("kappa -0.5:", aggregate(pairs, AggregationRule(DIRECTIONAL), -0.5))
print("min       :", pairs.min(axis=0))
print("kappa +0.5:", aggregate(pairs, AggregationRule(DIRECTIONAL), 0.5))
print("max       :", pairs.max(axis=0))
