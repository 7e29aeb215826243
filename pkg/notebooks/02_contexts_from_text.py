# %% [markdown]
# # Context labels from news text
#
# Each event points at the document that reported it. Documents are embedded
# with TF-IDF and clustered; the cluster id becomes the event's context.

# %%
import numpy as np

from contextcast import assign_contexts, kmeans, top_terms, tokenize, vectorize

corpus = [
    "trade deal cuts tariffs on steel exports",
    "troops move to the border after missile strike",
    "tariffs and export quotas stall trade talks",
    "missile attack near the border puts troops on alert",
    "trade agreement lowers import tariffs",
    "troops reinforce border posts after missile launch",
]
docs = [tokenize(line) for line in corpus]
vec = vectorize(docs)
print(vec.matrix.shape, "terms:", len(vec.terms))

# %%
res = kmeans(vec, 2, seed=0)
print("labels:", res.labels.tolist())
print("inertia per iteration:", [round(v, 4) for v in res.inertia_history])
for k, terms in enumerate(top_terms(vec, res, 5)):
    print(k, terms)

# %% [markdown]
# Attach the labels to (s, r, o, t) events. Events 0 and 6 share document 0.

# %%
quads = np.array([[0, 0, 1, 0], [2, 1, 3, 0], [0, 0, 1, 1], [3, 1, 2, 1], [1, 0, 0, 2], [2, 1, 3, 2], [1, 0, 0, 3]])
event_to_doc = [0, 1, 2, 3, 4, 5, 0]
print(assign_contexts(quads, event_to_doc, res.labels))
