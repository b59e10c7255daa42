"""Walk the plain mean-variance frontier on a synthetic market."""

import numpy as np

from cardfolio import estimate, log_returns, return_range, solve_mv, synthetic_prices

# 12 assets, 3 years of weekly prices, deterministic seed
prices = synthetic_prices(12, 156, seed=11)
market = estimate(log_returns(prices))

rng = return_range(market)
print(f"attainable weekly return range: [{rng.rho_min:.6f}, {rng.rho_max:.6f}]")
print(f"(the low end is the minimum-variance portfolio, the high end the best single name)")
print()

# sample nine targets across the range and solve each one exactly
print(f"{'target':>10}  {'variance':>12}  {'stdev':>9}  names held")
for rho in np.linspace(rng.rho_min, rng.rho_max, 9):
    sol = solve_mv(market, float(rho))
    held = [market.asset_names[i] for i in sol.support]
    print(
        f"{rho:>10.6f}  {sol.objective:>12.3e}  {np.sqrt(sol.objective):>9.5f}  "
        f"{len(held):>2} assets"
    )

print()
print("risk rises with the target, and concentration rises near the top:")
top = solve_mv(market, rng.rho_max)
print(f"at rho_max the portfolio is just {[market.asset_names[i] for i in top.support]}")
