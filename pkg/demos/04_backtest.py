"""Out-of-sample check: pick portfolios on the first two years, hold them
through the third, and compare against the index."""

from cardfolio import (
    LimitedAssetSpec,
    compare,
    estimate,
    expost_path,
    index_path,
    lam_solve,
    log_returns,
    return_range,
    rho_presets,
    split,
    synthetic_prices,
)

prices = synthetic_prices(8, 156, seed=31)
boundary = prices.timestamps[104]
inside, outside = split(prices, boundary)
print(f"estimation window ends {boundary}; {outside.n_periods} periods held out")

market = estimate(log_returns(inside))
spec = LimitedAssetSpec(n=8, k=3, lower=0.05, upper=0.7)

paths = []
for label, rho in zip(("cautious", "balanced"), rho_presets(return_range(market))):
    sol = lam_solve(market, rho, spec, beam_width=None)
    print(f"{label}: target {rho:.6f}, held {[market.asset_names[i] for i in sol.support]}")
    paths.append(expost_path(sol.weights, outside, asset_names=market.asset_names, label=label))

report = compare(paths, index_path(outside))
for line in report.summary_lines():
    print(line)

print()
print("first and last rows of the aligned value table:")
rows = report.csv.splitlines()
print(rows[0])
print(rows[1])
print(rows[-1])
