# %% [markdown]
# # Sampling modes
#
# A uniform pick at every alternative does not give every algorithm the
# same chance. Algorithms that sit behind fewer choice points win more
# often. The uniform-marginal mode reweights those choice points.

# %%
from mlcspace.context import DatasetContext
from mlcspace.sampling import SamplingMode, empirical_frequencies, marginal_weights
from mlcspace.tiers import load_grammar

g = load_grammar("Large")
ctx = DatasetContext(L=6, A=20)

# %% Weights on the choice points that decide the headline algorithms
w = marginal_weights(g)
for site in [("Start", (0, 0)), ("ALGS-PT", ()), ("ALGS-SLC", ())]:
    print(site[0], w.choices[site])
print("ASC inclusion", round(w.optionals[("ALG-TYPE", (0, 0))], 4))

# %% Headline frequencies under both modes
for mode in SamplingMode:
    ft = empirical_frequencies(g, ctx, mode, n=20_000, seed=0)
    lo, hi = min(ft.mlc.values()), max(ft.mlc.values())
    print(f"{mode.value:17s} MLC headline frequency in [{lo:.4f}, {hi:.4f}]  (1/26 = {1/26:.4f})")

# %% Conditional markers
ft = empirical_frequencies(g, ctx, n=10, seed=0, n_conditional=50_000)
for name, (p, n) in ft.markers.items():
    print(f"{name}: {p:.4f} over {n} draws")
