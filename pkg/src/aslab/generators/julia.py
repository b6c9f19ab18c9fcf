"""Julia-set point clouds by inverse iteration.

Plain random inverse iteration samples the measure of maximal entropy, which
for parabolic maps almost ignores the cusps at the parabolic point and its
preimages.  The default method therefore follows every inverse branch and
prunes a branch once it enters an already visited grid cell, giving roughly
uniform coverage at the chosen cell size.  The random method is kept: its
walkers choose branches uniformly, and extra cusp walkers repeatedly apply the
branch fixing the parabolic point (creeping in at the rate n^(-1/p)) before
spreading out by a few random steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clouds import CloudError, PointCloud, finalize, percentile_resolution

PARABOLIC_TOL = 1e-9


@dataclass(frozen=True)
class PolynomialMap:
    """T(z) = sum coeffs[i] z^i (ascending order) with a parabolic fixed point omega."""

    name: str
    coeffs: tuple
    omega: complex

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, np.asarray(self.coeffs, complex))

    def derivative(self, z):
        d = np.polynomial.polynomial.polyder(np.asarray(self.coeffs, complex))
        return np.polynomial.polynomial.polyval(z, d)

    def taylor_at_omega(self):
        """Coefficients of T(omega + w) - omega in ascending powers of w."""
        P = np.polynomial.Polynomial(np.asarray(self.coeffs, complex))
        out = P(np.polynomial.Polynomial([self.omega, 1])).coef.astype(complex)
        out = np.pad(out, (0, len(self.coeffs) - len(out)))
        out[0] -= self.omega
        return out

    def petal_number(self):
        """p such that T(omega + w) = omega + w + a w^(p+1) + ... with a != 0."""
        t = self.taylor_at_omega()
        if abs(t[0]) > PARABOLIC_TOL or abs(t[1] - 1) > PARABOLIC_TOL:
            raise CloudError(f"{self.name}: omega is not a fixed point with multiplier 1")
        for j in range(2, len(t)):
            if abs(t[j]) > PARABOLIC_TOL:
                return j - 1
        raise CloudError(f"{self.name}: map is the identity near omega")

    def preimages(self, w):
        """All inverse-branch values for each target in w, shape (len(w), degree)."""
        w = np.asarray(w, complex)
        c = np.asarray(self.coeffs, complex)
        n = self.degree
        lead = c[-1]
        comp = np.zeros((len(w), n, n), complex)
        comp[:, 1:, :-1] = np.eye(n - 1)
        low = np.broadcast_to(-c[:-1] / lead, (len(w), n)).copy()
        low[:, 0] = -(c[0] - w) / lead
        comp[:, :, -1] = low
        roots = np.linalg.eigvals(comp)
        # one Newton step polishes the eigenvalue roots
        f = self(roots) - w[:, None]
        df = self.derivative(roots)
        safe = np.abs(df) > 1e-12
        roots = np.where(safe, roots - f / np.where(safe, df, 1), roots)
        return roots


def cauliflower():
    return PolynomialMap("cauliflower", (0.25, 0.0, 1.0), 0.5)


def petal(p):
    p = int(p)
    if p < 1:
        raise CloudError("petal number must be positive")
    coeffs = [0.0] * (p + 2)
    coeffs[1] = 1.0
    coeffs[p + 1] = 1.0
    return PolynomialMap(f"petal{p}", tuple(coeffs), 0.0)


PRESETS = {
    "cauliflower": cauliflower,
    "petal1": lambda: petal(1),
    "petal2": lambda: petal(2),
    "petal3": lambda: petal(3),
    "petal4": lambda: petal(4),
}


def get_map(preset):
    if isinstance(preset, PolynomialMap):
        return preset
    try:
        return PRESETS[preset]()
    except KeyError:
        raise CloudError(f"unknown Julia preset {preset!r}") from None


def _repelling_fixed_point(T: PolynomialMap):
    c = np.asarray(T.coeffs, complex).copy()
    c[1] -= 1
    roots = np.polynomial.polynomial.polyroots(c)
    mult = np.abs(T.derivative(roots))
    return roots[np.argmax(mult)]


def _fixing_branch(T: PolynomialMap, roots):
    """Index of the inverse branch that fixes omega (the preimage nearest to it)."""
    return np.argmin(np.abs(roots - T.omega), axis=1)


def _parabolic_preimages(T: PolynomialMap, generations=3):
    """omega followed by its preimages up to the given generation (the cusps)."""
    pts = [np.array([T.omega])]
    z = pts[0]
    for _ in range(generations):
        roots = T.preimages(z).ravel()
        roots = roots[np.abs(roots - T.omega) > 1e-9]
        z = roots
        pts.append(roots)
    allz = np.concatenate(pts)
    return np.stack([allz.real, allz.imag], axis=-1)


def _cell_keys(z, cell):
    k = np.floor(np.stack([z.real, z.imag], axis=-1) / cell).astype(np.int64)
    return (k[:, 0] << 32) + (k[:, 1] & 0xFFFFFFFF)


def _claim(z, cell, seen):
    """Points of z landing in cells not yet in ``seen`` (one per cell); updates ``seen``."""
    if len(z) == 0:
        return z
    uniq, first = np.unique(_cell_keys(z, cell), return_index=True)
    fresh = np.fromiter((u not in seen for u in uniq.tolist()), bool, len(uniq))
    seen.update(uniq[fresh].tolist())
    return z[np.sort(first[fresh])]


def _pruned_search(T: PolynomialMap, start, cell, max_depth, seen=None, claimed=False):
    """Breadth-first backward tree, keeping only points that land in unvisited cells.

    Every preimage branch is followed, but a branch dies as soon as it enters
    a grid cell that already holds a point.  The result has about one point
    per cell of side ``cell`` meeting the Julia set.  Pass ``claimed=True``
    when the start points already hold their cells in ``seen``.
    """
    seen = set() if seen is None else seen
    z = np.asarray(start, complex)
    if not claimed:
        z = _claim(z, cell, seen)
    out = [z]
    for _ in range(int(max_depth)):
        if len(z) == 0:
            break
        z = _claim(T.preimages(z).ravel(), cell, seen)
        out.append(z)
    return np.concatenate(out), seen


def _creep(T: PolynomialMap, z, cell, steps):
    """Iterate the inverse branch fixing omega until within one cell of omega.

    Pruning kills these orbits early because consecutive points share a cell
    long before they reach omega; creeping carries them into the cusp.
    """
    out = []
    for _ in range(int(steps)):
        if len(z) == 0:
            break
        roots = T.preimages(z)
        nxt = roots[np.arange(len(z)), _fixing_branch(T, roots)]
        # orbits that share a cell have merged; keep one of each
        _, first = np.unique(_cell_keys(nxt, cell), return_index=True)
        nxt = nxt[np.sort(first)]
        out.append(nxt)
        z = nxt[np.abs(nxt - T.omega) > cell]
    return np.concatenate(out) if out else np.zeros(0, complex)


def _random_walk(T, n, steps, burn_in, rng):
    z = np.full(n, _repelling_fixed_point(T), complex)
    chunks = []
    for step in range(burn_in + steps):
        roots = T.preimages(z)
        z = roots[np.arange(n), rng.integers(0, T.degree, size=n)]
        if step >= burn_in:
            chunks.append(z.copy())
    return np.concatenate(chunks)


def julia_inverse_iteration(preset, iterations, seeds=64, method="pruned", cell=2e-5,
                            cusp_steps=20000, burn_in=12, seed=0) -> PointCloud:
    """Inverse-iteration cloud of the Julia set of a parabolic polynomial preset.

    ``method="pruned"`` (default) runs the visited-cell pruned backward tree
    search from ``seeds`` random-walk starting points for at most
    ``iterations`` generations.  ``method="random"`` records ``iterations``
    uniformly random backward steps of each of ``seeds`` walkers and adds
    cusp walkers that follow the branch fixing the parabolic point.
    """
    T = get_map(preset)
    p = T.petal_number()  # rejects non-parabolic maps
    iterations = int(iterations)
    if iterations < 1:
        raise CloudError("iterations must be at least 1")
    if method not in ("pruned", "random"):
        raise CloudError(f"unknown inverse-iteration method {method!r}")
    rng = np.random.default_rng(seed)
    n = max(1, int(seeds))
    special = _parabolic_preimages(T)
    if method == "pruned":
        start = _random_walk(T, n, 1, burn_in, rng)
        tree, seen = _pruned_search(T, start, cell, iterations)
        # carry the points nearest the parabolic point into its cusp, then
        # spread the cusp to its preimages with a second pruned search
        near = tree[np.argsort(np.abs(tree - T.omega))[: 8 * n]]
        cusp = _claim(_creep(T, near, cell, cusp_steps), cell, seen)
        spread, _ = _pruned_search(T, cusp, cell, iterations, seen, claimed=True)
        allz = np.concatenate([tree, spread])
        pts = np.stack([allz.real, allz.imag], axis=-1)
        eps_min = None
    else:
        main = _random_walk(T, n, iterations, burn_in, rng)
        eps_min = percentile_resolution(np.stack([main.real, main.imag], axis=-1))
        # cusp walkers creep into the parabolic point along the fixing branch
        m = max(4, n // 8)
        zc = main[rng.choice(len(main), size=min(m, len(main)), replace=False)]
        cusp = []
        for _ in range(int(cusp_steps)):
            roots = T.preimages(zc)
            nxt = roots[np.arange(len(zc)), _fixing_branch(T, roots)]
            moving = np.abs(nxt - zc) > eps_min / 2
            if not np.any(moving):
                break
            zc = nxt[moving]
            cusp.append(zc.copy())
        spread = [np.concatenate(cusp)] if cusp else []
        zs = spread[0] if spread else np.zeros(0, complex)
        for _ in range(min(iterations, 8)):
            if len(zs) == 0:
                break
            roots = T.preimages(zs)
            zs = roots[np.arange(len(zs)), rng.integers(0, T.degree, size=len(zs))]
            spread.append(zs)
        allz = np.concatenate([main] + spread)
        pts = np.stack([allz.real, allz.imag], axis=-1)
    pts = np.concatenate([pts, special])
    prov = (f"julia_inverse_iteration({T.name}, p={p}, method={method}, iterations={iterations}, "
            f"seeds={n}, seed={seed}" + (f", cell={cell})" if method == "pruned" else ")"))
    return finalize(pts, prov, eps_min=eps_min, special=special)
