"""Distillation rate regions of the pure-loss broadcast channel.

For each nonempty receiver subset T the combined entanglement-plus-key rate
toward T is constrained by

* finite input energy ``n_s`` (state-merging achievability):
  ``g((1 - eta_comp) n_s) - g((1 - eta_all) n_s)``,
* unconstrained energy:  ``log2((1 - eta_comp) / (1 - eta_all))``,

where ``eta_comp`` sums the complement receivers and ``eta_all`` all of
them.  One ebit converts to one secret-key bit, so each receiver gets a
single combined rate coordinate.  The bound function is monotone and
submodular, so the region is a polymatroid whose vertices come from the
greedy rule over receiver orderings.

Every finite-energy bound can also be evaluated as a Gaussian conditional
entropy of the channel output; the closed form and the covariance-matrix
route must agree to 1e-9, which the tests (and ``merging_gain`` itself)
exploit as a consistency check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import channel, gaussian
from .channel import BroadcastChannelSpec
from .gaussian import entropy_g

__all__ = [
    "RateConstraint",
    "CapacityRegion",
    "UNCONSTRAINED",
    "nonempty_subsets",
    "inner_bound_finite",
    "inner_bound_finite_gaussian",
    "asymptotic_bound",
    "capacity_region",
    "contains",
    "vertices",
    "boundary_2d",
    "merging_gain",
    "merging_gain_gaussian",
    "region_to_dict",
    "region_from_dict",
]

UNCONSTRAINED = "unconstrained"
EXACT_TOL = 1e-12      # closed-form arithmetic
EIGEN_TOL = 1e-9       # values that passed through an eigendecomposition
VERTEX_DEDUPE_TOL = 1e-10
MAX_REGION_RECEIVERS = 20   # 2^m constraints
MAX_VERTEX_RECEIVERS = 8


def _validate_subset(m: int, subset, allow_empty=False) -> frozenset:
    t = frozenset(int(i) for i in subset)
    if not t and not allow_empty:
        raise ValueError("receiver subset must be nonempty")
    if any(i < 1 or i > m for i in t):
        raise ValueError(f"subset {sorted(t)} outside receivers 1..{m}")
    return t


def nonempty_subsets(m: int):
    """All 2^m - 1 nonempty receiver subsets, smallest first, lexicographic."""
    for size in range(1, m + 1):
        for combo in itertools.combinations(range(1, m + 1), size):
            yield frozenset(combo)


def _eta_sum(spec: BroadcastChannelSpec, subset) -> float:
    return sum(spec.etas[i - 1] for i in subset)


@dataclass(frozen=True)
class RateConstraint:
    """Bound (bits/use) on the summed rate toward one receiver subset."""

    subset: frozenset
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "subset", frozenset(self.subset))
        if not self.subset:
            raise ValueError("constraint subset must be nonempty")
        if not math.isinf(self.bound) and self.bound < -EXACT_TOL:
            raise ValueError(f"negative rate bound {self.bound!r}")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.bound)


@dataclass
class CapacityRegion:
    """Polymatroid rate region: one constraint per nonempty receiver subset.

    ``energy`` is either the string ``"unconstrained"`` or the finite input
    photon number the inner bound was evaluated at.  Monotonicity and
    submodularity of the bound function are checked exhaustively up to
    m = 8 (within ``check_tol``; constraints involving the unbounded flag
    are skipped).
    """

    m: int
    energy: object
    constraints: tuple
    check_tol: float = EXACT_TOL

    def __post_init__(self):
        self.constraints = tuple(self.constraints)
        expected = 2 ** self.m - 1
        if len(self.constraints) != expected:
            raise ValueError(
                f"need {expected} constraints for m = {self.m}, got {len(self.constraints)}"
            )
        self._by_subset = {c.subset: c.bound for c in self.constraints}
        if len(self._by_subset) != expected:
            raise ValueError("duplicate constraint subsets")
        for subset in self._by_subset:
            _validate_subset(self.m, subset)
        if self.m <= 8:
            self._check_polymatroid()

    def bound(self, subset) -> float:
        """Bound for a receiver subset; f(empty) = 0."""
        t = _validate_subset(self.m, subset, allow_empty=True)
        if not t:
            return 0.0
        return self._by_subset[t]

    @property
    def unbounded(self) -> bool:
        return any(c.unbounded for c in self.constraints)

    def _check_polymatroid(self):
        f = self.bound
        ground = range(1, self.m + 1)
        for t in map(frozenset, itertools.chain.from_iterable(
            itertools.combinations(ground, k) for k in range(self.m + 1)
        )):
            ft = f(t)
            for j in ground:
                if j in t:
                    continue
                ftj = f(t | {j})
                if not (math.isinf(ftj) or math.isinf(ft)):
                    if ftj < ft - self.check_tol:
                        raise ValueError(
                            f"bound not monotone: f({sorted(t | {j})}) < f({sorted(t)})"
                        )
                for k in ground:
                    if k == j or k in t:
                        continue
                    ftk, ftjk = f(t | {k}), f(t | {j, k})
                    vals = (ft, ftj, ftk, ftjk)
                    if any(math.isinf(v) for v in vals):
                        continue
                    if ftjk - ftk > ftj - ft + self.check_tol:
                        raise ValueError(
                            f"bound not submodular at T = {sorted(t)}, j = {j}, k = {k}"
                        )


def inner_bound_finite(spec: BroadcastChannelSpec, n_s: float, subset) -> float:
    """Achievable rate bound (bits/use) toward subset T at input energy n_s.

    Closed form ``g((1 - eta_comp) n_s) - g((1 - eta_all) n_s)``; equals the
    negated conditional entropy -H(T | A, complement) of the channel output
    (see :func:`inner_bound_finite_gaussian` for that route).
    """
    if n_s < 0:
        raise ValueError(f"input photon number must be nonnegative, got {n_s!r}")
    t = _validate_subset(spec.m, subset)
    eta_comp = _eta_sum(spec, frozenset(range(1, spec.m + 1)) - t)
    eta_all = spec.eta_total
    return entropy_g(max(1.0 - eta_comp, 0.0) * n_s) - entropy_g(
        max(1.0 - eta_all, 0.0) * n_s
    )


def inner_bound_finite_gaussian(
    spec: BroadcastChannelSpec, n_s: float, subset, ordering=None
) -> float:
    """Same bound via -H(T | A, complement) on the covariance-matrix output."""
    t = _validate_subset(spec.m, subset)
    recv = channel.receiver_labels(spec)
    state = gaussian.reduce(
        channel.output_state_tmsv(spec, n_s, ordering), ("A",) + recv
    )
    t_labels = [recv[i - 1] for i in sorted(t)]
    rest = [lab for lab in recv if lab not in t_labels]
    return -gaussian.conditional_entropy(state, t_labels, ["A"] + rest)


def asymptotic_bound(spec: BroadcastChannelSpec, subset) -> float:
    """Unconstrained-energy bound ``log2((1 - eta_comp)/(1 - eta_all))``.

    This is the infinite-energy limit of :func:`inner_bound_finite`.  When
    the receivers absorb everything (eta_all = 1) the bound is unbounded and
    ``math.inf`` is returned as an in-memory flag (never serialized as a
    float; see :func:`region_to_dict`) -- except for subsets of zero-weight
    receivers, which can never receive anything and get bound 0.
    """
    t = _validate_subset(spec.m, subset)
    eta_t = _eta_sum(spec, t)
    eta_all = spec.eta_total
    if eta_all >= 1.0 - EXACT_TOL:
        return 0.0 if eta_t <= EXACT_TOL else math.inf
    eta_comp = _eta_sum(spec, frozenset(range(1, spec.m + 1)) - t)
    return math.log2((1.0 - eta_comp) / (1.0 - eta_all))


def capacity_region(spec: BroadcastChannelSpec, energy=UNCONSTRAINED) -> CapacityRegion:
    """Full region: one bound per nonempty subset, at finite or unbounded energy."""
    if spec.m > MAX_REGION_RECEIVERS:
        raise ValueError(
            f"region construction limited to m <= {MAX_REGION_RECEIVERS} "
            f"(2^m constraints)"
        )
    if energy == UNCONSTRAINED:
        bound = lambda t: asymptotic_bound(spec, t)
    else:
        n_s = float(energy)
        if n_s < 0 or not math.isfinite(n_s):
            raise ValueError(
                f"input photon number must be finite and nonnegative, got {energy!r}"
            )
        energy = n_s
        bound = lambda t: inner_bound_finite(spec, n_s, t)
    constraints = tuple(
        RateConstraint(t, bound(t)) for t in nonempty_subsets(spec.m)
    )
    return CapacityRegion(spec.m, energy, constraints)


def contains(region: CapacityRegion, point) -> bool:
    """Is a rate point inside the region (componentwise >= 0, all sums met)?"""
    p = np.asarray(point, dtype=float).reshape(-1)
    if p.shape != (region.m,):
        raise ValueError(f"rate point has {p.size} coordinates, region has m = {region.m}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"rate point must be finite, got {point!r}")
    if np.any(p < -EXACT_TOL):
        return False
    for c in region.constraints:
        if c.unbounded:
            continue
        if sum(p[i - 1] for i in c.subset) > c.bound + EXACT_TOL:
            return False
    return True


def vertices(region: CapacityRegion) -> list:
    """All extreme points of the region, deduplicated and sorted.

    Greedy corner rule over every ordered subset of receivers: walk the
    ordering, giving each receiver the marginal bound increment; receivers
    outside the subset stay at zero.  For a monotone submodular bound
    function this enumerates exactly the polymatroid's vertex set (the
    origin and axis projections close the down-set).
    """
    if region.unbounded:
        raise ValueError("region is unbounded; vertices are undefined")
    if region.m > MAX_VERTEX_RECEIVERS:
        raise ValueError(f"vertex enumeration limited to m <= {MAX_VERTEX_RECEIVERS}")
    m = region.m
    points = [np.zeros(m)]
    for size in range(1, m + 1):
        for combo in itertools.combinations(range(1, m + 1), size):
            for perm in itertools.permutations(combo):
                p = np.zeros(m)
                running = frozenset()
                prev = 0.0
                for i in perm:
                    cur = region.bound(running | {i})
                    p[i - 1] = max(cur - prev, 0.0)
                    running |= {i}
                    prev = cur
                points.append(p)
    unique = []
    for p in sorted(points, key=lambda q: tuple(q)):
        if not unique or np.max(np.abs(p - unique[-1])) > VERTEX_DEDUPE_TOL:
            unique.append(p)
    return [tuple(float(x) for x in p) for p in unique]


def boundary_2d(region: CapacityRegion, n_points: int) -> list:
    """Upper-right boundary polyline of a two-receiver region.

    Returns at least ``n_points`` rate pairs from the r2-axis intercept to
    the r1-axis intercept, ordered by first coordinate, always passing
    through the corner vertices.
    """
    if region.m != 2:
        raise ValueError(f"boundary_2d needs m = 2, got m = {region.m}")
    if region.unbounded:
        raise ValueError("region is unbounded; boundary is undefined")
    if n_points < 2:
        raise ValueError("need at least two boundary points")
    f1, f2, f12 = region.bound({1}), region.bound({2}), region.bound({1, 2})
    if f12 < f1 + f2 - EXACT_TOL:  # the sum face is a real facet
        path = [(0.0, f2), (f12 - f2, f2), (f1, f12 - f1), (f1, 0.0)]
    else:
        path = [(0.0, f2), (f1, f2), (f1, 0.0)]
    corners = [path[0]]
    for p in path[1:]:
        if max(abs(p[0] - corners[-1][0]), abs(p[1] - corners[-1][1])) > EXACT_TOL:
            corners.append(p)

    lengths = [
        math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(corners, corners[1:])
    ]
    total = sum(lengths)
    if total == 0.0:  # both receivers weightless; the region is the origin
        return [corners[0]] * n_points
    extra = max(n_points - len(corners), 0)
    # distribute interior samples across segments by length, remainders first
    alloc = [0] * len(lengths)
    if extra and total > 0:
        shares = [extra * l / total for l in lengths]
        alloc = [int(s) for s in shares]
        for _ in range(extra - sum(alloc)):
            k = max(range(len(lengths)), key=lambda i: shares[i] - alloc[i])
            alloc[k] += 1
    points = []
    for (a, b), k in zip(zip(corners, corners[1:]), alloc):
        points.append(a)
        for step in range(1, k + 1):
            frac = step / (k + 1)
            points.append((a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1])))
    points.append(corners[-1])
    return points


def merging_gain(spec: BroadcastChannelSpec, n_s: float, gained, helpers=()) -> float:
    """Entanglement gained when subset S1 merges back, aided by disjoint S2.

    Evaluated two independent ways -- the complement-entropy closed form
    ``g((1 - eta_S2) n_s) - g((1 - eta_S1 - eta_S2) n_s)`` and the direct
    Gaussian conditional entropy -H(S1 | A, S2) of the channel output -- and
    the routes must agree to 1e-9.  Strictly positive whenever ``n_s > 0``
    and S1 carries positive transmittance, i.e. no merging step ever runs at
    an entanglement deficit.
    """
    closed = _merging_gain_closed(spec, n_s, gained, helpers)
    direct = merging_gain_gaussian(spec, n_s, gained, helpers)
    if abs(closed - direct) > EIGEN_TOL:
        raise RuntimeError(
            f"closed-form/covariance routes disagree: {closed!r} vs {direct!r}"
        )
    return closed


def _merging_gain_closed(spec, n_s, gained, helpers) -> float:
    if n_s < 0:
        raise ValueError(f"input photon number must be nonnegative, got {n_s!r}")
    s1 = _validate_subset(spec.m, gained)
    s2 = _validate_subset(spec.m, helpers, allow_empty=True)
    if s1 & s2:
        raise ValueError(f"subsets overlap: {sorted(s1 & s2)}")
    eta_s1 = _eta_sum(spec, s1)
    eta_s2 = _eta_sum(spec, s2)
    return entropy_g(max(1.0 - eta_s2, 0.0) * n_s) - entropy_g(
        max(1.0 - eta_s1 - eta_s2, 0.0) * n_s
    )


def merging_gain_gaussian(
    spec: BroadcastChannelSpec, n_s: float, gained, helpers=(), ordering=None
) -> float:
    """Direct route: -H(S1 | A, S2) on the channel output (environment traced)."""
    s1 = _validate_subset(spec.m, gained)
    s2 = _validate_subset(spec.m, helpers, allow_empty=True)
    if s1 & s2:
        raise ValueError(f"subsets overlap: {sorted(s1 & s2)}")
    recv = channel.receiver_labels(spec)
    state = gaussian.reduce(
        channel.output_state_tmsv(spec, n_s, ordering), ("A",) + recv
    )
    s1_labels = [recv[i - 1] for i in sorted(s1)]
    s2_labels = [recv[i - 1] for i in sorted(s2)]
    return -gaussian.conditional_entropy(state, s1_labels, ["A"] + s2_labels)


def region_to_dict(region: CapacityRegion, round_to=None) -> dict:
    """JSON-ready form; unbounded constraints carry a flag, never a float inf."""

    def fmt(x: float):
        if round_to is None:
            return float(x)
        return float(f"{x:.{round_to}g}")

    constraints = []
    for c in sorted(region.constraints, key=lambda c: (len(c.subset), sorted(c.subset))):
        entry = {"subset": sorted(c.subset)}
        if c.unbounded:
            entry["unbounded"] = True
        else:
            entry["bound_bits"] = fmt(c.bound)
        constraints.append(entry)
    energy = region.energy if region.energy == UNCONSTRAINED else fmt(region.energy)
    return {"m": region.m, "energy": energy, "constraints": constraints}


def region_from_dict(data: dict) -> CapacityRegion:
    """Rebuild a region from its JSON form (rounded bounds get a looser check)."""
    m = int(data["m"])
    energy = data["energy"]
    if energy != UNCONSTRAINED:
        energy = float(energy)
    constraints = []
    for entry in data["constraints"]:
        bound = math.inf if entry.get("unbounded") else float(entry["bound_bits"])
        constraints.append(RateConstraint(frozenset(entry["subset"]), bound))
    return CapacityRegion(m, energy, tuple(constraints), check_tol=1e-6)
