# %% [markdown]
# # From a tree to a command line
#
# A sampled tree is lowered to a typed configuration. The configuration is
# then validated and written out as JSON and as a MEKA-style command.

# %%
from mlcspace.codec import parse_meka_command, to_json, to_meka_command
from mlcspace.config import Component, lower
from mlcspace.constraints import validate
from mlcspace.context import DatasetContext
from mlcspace.sampling import format_tree, sample_tree
from mlcspace.tiers import load_grammar

ctx = DatasetContext(L=6, A=20)
tree = sample_tree(load_grammar("Medium"), ctx, seed=42)
print(format_tree(tree)[:800])

# %%
config = lower(tree)
print(to_json(config))
print(to_meka_command(config, ctx=ctx))
assert parse_meka_command(to_meka_command(config, ctx=ctx)) == config

# %% Wrapping BCC in BaggingML is not allowed
from dataclasses import replace

bad = replace(config, core=replace(config.core, id="BCC", params={}),
              meta=Component("BaggingML", {"i": 10}))
print(validate(bad, ctx).to_dict())
