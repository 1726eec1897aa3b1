# %% [markdown]
# # GGP against random search
#
# Both searches get the same budget on the synthetic landscape. GGP keeps
# the best individual at every generation, so its best-so-far curve never
# goes down.

# %%
from mlcspace.context import DatasetContext
from mlcspace.evolution import SearchParams, random_search, run_search, surrogate_evaluator
from mlcspace.tiers import load_grammar

g = load_grammar("Large")
ctx = DatasetContext(L=6, A=20)

# %%
wins = 0
for seed in range(10):
    ev = surrogate_evaluator(landscape_seed=seed)
    ggp = run_search(g, ctx, ev, 2000, SearchParams(), seed=seed)
    rnd = random_search(g, ctx, ev, 2000, seed=seed)
    wins += ggp.best_fitness >= rnd.best_fitness
    print(f"seed {seed}: ggp {ggp.best_fitness:.4f} ({ggp.evaluations} evals)  random {rnd.best_fitness:.4f}")
print(f"GGP >= random in {wins}/10")

# %% Best-so-far by generation for the last run
print([round(h.best, 4) for h in ggp.history])
