"""Generate an ART-style predictor matrix (n=250) at data/art.csv.

Matches the study design structurally: six positive continuous predictors
(x1, x3, x5, x6, x7, x10), two binaries (x2, x8), an ordered three-level
x4 and an unordered three-level x9, with mild cross-correlation. Levels of
x4 and x9 are relabeled by first appearance so indicator expansion is
deterministic.
"""
import numpy as np

rng = np.random.default_rng(20240817)
n = 250

# correlated latent normals
dim = 10
corr = np.eye(dim)
pairs = [(0, 2, 0.35), (0, 3, 0.25), (2, 4, 0.3), (4, 5, 0.25), (6, 9, 0.2), (1, 7, 0.2)]
for i, j, r in pairs:
    corr[i, j] = corr[j, i] = r
z = rng.multivariate_normal(np.zeros(dim), corr, size=n)

x1 = np.exp(0.7 + 0.45 * z[:, 0])
x2 = (z[:, 1] > 0.25).astype(int)
x3 = np.exp(0.6 + 0.6 * z[:, 2])
x4 = np.digitize(z[:, 3], [-0.5, 0.6]) + 1          # ordered 1/2/3
x5 = np.exp(0.5 + 0.7 * z[:, 4])
x6 = np.where(rng.random(n) < 0.05, 0.0, rng.gamma(1.5, 2.0, size=n))
x7 = np.exp(1.0 + 0.5 * z[:, 6])
x8 = (z[:, 7] > 0).astype(int)
x9 = rng.integers(1, 4, size=n)                      # unordered 1/2/3
x10 = np.exp(0.8 + 0.5 * z[:, 9])

def relabel(v):
    seen, out = {}, np.empty_like(v)
    for i, lvl in enumerate(v):
        seen.setdefault(lvl, len(seen) + 1)
        out[i] = seen[lvl]
    return out

x4, x9 = relabel(x4), relabel(x9)

cols = dict(x1=x1, x2=x2, x3=x3, x4=x4, x5=x5, x6=x6, x7=x7, x8=x8, x9=x9, x10=x10)
with open("data/art.csv", "w") as f:
    f.write(",".join(cols) + "\n")
    for i in range(n):
        f.write(",".join(
            str(int(v[i])) if v.dtype.kind == "i" else repr(round(float(v[i]), 10))
            for v in cols.values()) + "\n")
print("x4 levels first-seen:", x4[:6], "x9:", x9[:6])
