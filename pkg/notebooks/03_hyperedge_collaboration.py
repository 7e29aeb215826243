# %% [markdown]
# # Sharing embeddings across contexts
#
# An entity seen in several contexts has one embedding per context. Each
# propagation layer swaps in the mean of its *other* contexts' embeddings,
# and the layer outputs are summed.

# %%
import numpy as np

from contextcast import propagate

a = np.array([[1.0, 0.0]])
b = np.array([[0.0, 2.0]])
both = np.array([[True, True]])
for p in (0, 1, 2, 3):
    out = propagate([a, b], both, p)
    print(p, out[0].ravel(), out[1].ravel())

# %% [markdown]
# With two contexts: one layer gives a + b, two give 2a + b, three give 2a + 2b.
# An entity seen in only one context is left alone:

# %%
only_first = np.array([[True, False]])
print(propagate([a, b], only_first, 2))

# %% [markdown]
# Three contexts, mean of the other two:

# %%
x = [np.array([[1.0]]), np.array([[2.0]]), np.array([[4.0]])]
print([o.item() for o in propagate(x, np.ones((1, 3), dtype=bool), 1)])
