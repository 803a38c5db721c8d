"""Finite lattice windows and real-valued configurations on them.

Sites live in Z^d with the L1 norm. A window is an axis-aligned box of
sites, corners inclusive. The interior of a box with respect to an
interaction range r is the box shrunk by r on every axis (an L1 exit from
a box happens along a single axis, so the shrunk box is exact). Values are
stored on the full padded box that covers the collar the energy reads;
corner sites the energy never touches are simply carried along.
"""

import numpy as np


def ball_offsets(d, r):
    """All integer offsets k with ||k||_1 <= r, in lexicographic order.

    Returns an (m, d) int array. The center 0 is included.
    """
    if d < 1 or r < 0:
        raise ValueError("need d >= 1 and r >= 0")
    rng = np.arange(-r, r + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    keep = np.abs(pts).sum(axis=1) <= r
    return pts[keep]


def l1_norms(sites):
    """L1 norm of each row of an (n, d) site array."""
    return np.abs(np.asarray(sites)).sum(axis=1)


class Box:
    """Axis-aligned box of lattice sites with inclusive corners."""

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=int))
        hi = np.atleast_1d(np.asarray(hi, dtype=int))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("lo and hi must be integer vectors of equal length")
        if np.any(hi < lo):
            raise ValueError("box corners must satisfy lo <= hi componentwise")
        self.lo = tuple(int(a) for a in lo)
        self.hi = tuple(int(a) for a in hi)
        self.d = len(self.lo)

    @classmethod
    def centered(cls, radius, d=1):
        """The box [-radius, radius]^d."""
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        return cls([-radius] * d, [radius] * d)

    @property
    def shape(self):
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self):
        return int(np.prod(self.shape))

    def sites(self):
        """All sites as an (size, d) int array in lexicographic order."""
        axes = [np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def contains(self, site):
        site = np.atleast_1d(np.asarray(site, dtype=int))
        return bool(np.all(site >= self.lo) and np.all(site <= self.hi))

    def contains_box(self, other):
        return all(o >= l for o, l in zip(other.lo, self.lo)) and all(
            o <= h for o, h in zip(other.hi, self.hi)
        )

    def index(self, site):
        """Array index tuple of a site; raises if outside the box."""
        if not self.contains(site):
            raise ValueError(f"site {tuple(site)} outside box {self}")
        site = np.atleast_1d(np.asarray(site, dtype=int))
        return tuple(int(s - l) for s, l in zip(site, self.lo))

    def interior(self, r):
        """Sites whose distance-r ball stays inside the box. May raise."""
        lo = tuple(l + r for l in self.lo)
        hi = tuple(h - r for h in self.hi)
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box {self} has empty interior at range {r}")
        return Box(lo, hi)

    def padded(self, r):
        """The box grown by r on every axis (holds the reading collar)."""
        return Box(tuple(l - r for l in self.lo), tuple(h + r for h in self.hi))

    def shift(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=int))
        return Box(tuple(l + a for l, a in zip(self.lo, k)),
                   tuple(h + a for h, a in zip(self.hi, k)))

    def intersect(self, other):
        """Intersection box, or None when disjoint."""
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def slice_in(self, domain):
        """Index slices selecting this box inside an enclosing domain box."""
        if not domain.contains_box(self):
            raise ValueError(f"box {self} not contained in domain {domain}")
        return tuple(
            slice(l - dl, h - dl + 1)
            for l, h, dl in zip(self.lo, self.hi, domain.lo)
        )

    def __eq__(self, other):
        return isinstance(other, Box) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Box(lo={self.lo}, hi={self.hi})"


class Configuration:
    """Real values on every site of a box window."""

    def __init__(self, domain, values):
        if not isinstance(domain, Box):
            raise ValueError("domain must be a Box")
        values = np.asarray(values, dtype=float)
        if values.shape != domain.shape:
            # 1-d convenience: accept flat arrays for flat boxes
            values = values.reshape(domain.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("configuration values must be finite")
        self.domain = domain
        self.values = values.copy()

    @property
    def d(self):
        return self.domain.d

    def value_at(self, site):
        return float(self.values[self.domain.index(site)])

    def box_values(self, box):
        """Values on a sub-box, as an array of that box's shape."""
        return self.values[box.slice_in(self.domain)]

    def restrict(self, box):
        return Configuration(box, self.box_values(box))

    def copy(self):
        return Configuration(self.domain, self.values)

    def osc(self, r):
        """Largest |x_j - x_i| over pairs with ||j - i||_1 <= r."""
        worst = 0.0
        for k in ball_offsets(self.d, r):
            if not np.any(k):
                continue
            shifted = self.domain.shift(-k)
            overlap = self.domain.intersect(shifted)
            if overlap is None:
                continue
            a = self.values[overlap.slice_in(self.domain)]
            b = self.values[overlap.shift(k).slice_in(self.domain)]
            if a.size:
                worst = max(worst, float(np.max(np.abs(b - a))))
        return worst

    def __repr__(self):
        return f"Configuration(domain={self.domain})"
