"""Design-of-experiments sampling over the free weir parameters.

Two generation modes share one box description:

* :func:`generate_batch` draws Latin hypercube rounds, snaps them to the
  step grid, and keeps feasible unique designs until a target count is met.
* :func:`enumerate_grid` walks the full cartesian step grid and yields the
  feasible points, for exhaustive screening of coarse spaces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooLarge, InfeasibleSpace
from .geometry import PkwFixed, PkwSample, feasible_bounds, validate

VARIABLE_NAMES = ("B_b", "R_B_i", "T_s", "W_i_u", "W_i_d")

# Relative slack when counting grid points, so ranges that are an exact
# multiple of the step do not lose their last point to rounding.
_GRID_EPS = 1e-9

MAX_ROUNDS = 20
GRID_CAP = 10_000_000


@dataclass(frozen=True)
class DesignSpace:
    """Axis-aligned box with a step size per sampled variable.

    Bounds and steps are parallel to VARIABLE_NAMES. Lengths are meters,
    ratios dimensionless. The box may be narrower or wider than the feasible
    set; feasibility is always re-checked per sample.
    """

    fixed: PkwFixed
    lower: tuple[float, float, float, float, float]
    upper: tuple[float, float, float, float, float]
    step: tuple[float, float, float, float, float]

    def __post_init__(self):
        for name, values in (("lower", self.lower), ("upper", self.upper),
                             ("step", self.step)):
            if len(values) != len(VARIABLE_NAMES):
                raise ValueError(f"{name} must have {len(VARIABLE_NAMES)} entries")
        for j, name in enumerate(VARIABLE_NAMES):
            if not self.lower[j] < self.upper[j]:
                raise ValueError(f"{name}: lower bound must be below upper bound")
            if not self.step[j] > 0:
                raise ValueError(f"{name}: step must be positive")

    def n_grid(self, j: int) -> int:
        """Number of step-grid points along variable j."""
        span = self.upper[j] - self.lower[j]
        return int(math.floor(span / self.step[j] + _GRID_EPS)) + 1

    def grid_axis(self, j: int) -> list[float]:
        lo, step = self.lower[j], self.step[j]
        return [lo + k * step for k in range(self.n_grid(j))]


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    requested: int
    samples: list[PkwSample]
    rejected_count: int


def _box_space(fixed, step):
    fixed = fixed if fixed is not None else PkwFixed()
    bounds = feasible_bounds(fixed)
    lower = tuple(bounds[name][0] for name in VARIABLE_NAMES)
    upper = tuple(bounds[name][1] for name in VARIABLE_NAMES)
    return DesignSpace(fixed=fixed, lower=lower, upper=upper, step=step)


def paper_default_space(fixed: PkwFixed | None = None) -> DesignSpace:
    """Full design box with a 5 mm length step and 0.05 ratio increment.

    The resulting cartesian grid is far too large to enumerate (see
    enumerate_grid); this space is meant for LHS batch generation.
    """
    return _box_space(fixed, (0.005, 0.05, 0.005, 0.005, 0.005))


def screening_space(fixed: PkwFixed | None = None) -> DesignSpace:
    """Same box with coarser steps sized for exhaustive screening.

    The steps keep the full cartesian product in the tens of thousands of
    candidates, so every grid point can be validated directly.
    """
    return _box_space(fixed, (0.04, 0.05, 0.025, 0.045, 0.045))


def lhs_raw(space: DesignSpace, n: int, seed) -> list[PkwSample]:
    """Latin hypercube draw of n candidates over the continuous box.

    Per variable, the range splits into n equal bins holding exactly one
    sample each, uniformly placed within its bin; bins are matched across
    variables by a seeded permutation. No feasibility filtering and no step
    snapping happen here.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    columns = []
    for j in range(len(VARIABLE_NAMES)):
        perm = rng.permutation(n)
        u = rng.random(n)
        lo, hi = space.lower[j], space.upper[j]
        width = hi - lo
        v = lo + (perm + u) / n * width
        # The affine map can round a value across its bin edge; nudge those
        # back by ulps so the one-sample-per-bin property holds exactly.
        bins = np.floor(n * (v - lo) / width).astype(np.int64)
        for i in np.nonzero(bins != perm)[0]:
            x = float(v[i])
            while math.floor(n * (x - lo) / width) > perm[i]:
                x = math.nextafter(x, lo)
            while math.floor(n * (x - lo) / width) < perm[i]:
                x = math.nextafter(x, hi)
            v[i] = x
        columns.append(v)
    return [
        PkwSample(B_b=b, R_B_i=r, T_s=t, W_i_u=wu, W_i_d=wd)
        for b, r, t, wu, wd in zip(*columns)
    ]


def discretize(sample: PkwSample, space: DesignSpace) -> PkwSample:
    """Snap each variable to the nearest step-grid point, clamped to the box.

    Idempotent: a value already on the grid is returned unchanged.
    """
    raw = (sample.B_b, sample.R_B_i, sample.T_s, sample.W_i_u, sample.W_i_d)
    snapped = {}
    for j, name in enumerate(VARIABLE_NAMES):
        lo, step = space.lower[j], space.step[j]
        k = round((raw[j] - lo) / step)
        k = min(max(k, 0), space.n_grid(j) - 1)
        snapped[name] = lo + k * step
    return PkwSample(**snapped)


def generate_batch(space: DesignSpace, n_target: int, seed: int) -> SampleBatch:
    """Collect n_target unique feasible designs from seeded LHS rounds.

    Rounds start at 2*n_target draws and double on shortfall (bounded to
    keep memory flat); candidates are snapped to the grid, deduplicated
    keeping the first occurrence, and checked against every feasibility
    constraint. Each round derives its stream from (seed, round index), so
    results do not depend on how many retries earlier calls needed.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    accepted: list[PkwSample] = []
    seen: set[tuple] = set()
    rejected = 0
    round_size = 2 * n_target
    round_cap = max(4 * n_target, 20_000)
    for round_index in range(MAX_ROUNDS):
        draws = lhs_raw(space, min(round_size, round_cap),
                        np.random.SeedSequence([seed, round_index]))
        for cand in draws:
            snapped = discretize(cand, space)
            key = snapped.as_tuple()
            if key in seen or not validate(space.fixed, snapped).feasible:
                rejected += 1
                continue
            seen.add(key)
            accepted.append(snapped)
            if len(accepted) == n_target:
                return SampleBatch(seed=seed, requested=n_target,
                                   samples=accepted, rejected_count=rejected)
        round_size *= 2
    raise InfeasibleSpace(
        f"collected {len(accepted)} of {n_target} feasible designs "
        f"after {MAX_ROUNDS} sampling rounds")


def grid_shape(space: DesignSpace) -> tuple[int, ...]:
    return tuple(space.n_grid(j) for j in range(len(VARIABLE_NAMES)))


def grid_size(space: DesignSpace) -> int:
    return math.prod(grid_shape(space))


def enumerate_grid(space: DesignSpace, cap: int = GRID_CAP):
    """Iterate the feasible points of the full step grid.

    Candidates run in lexicographic variable order (B_b slowest, W_i_d
    fastest). The candidate count is checked against the cap before any
    work happens.
    """
    total = grid_size(space)
    if total > cap:
        raise GridTooLarge(
            f"step grid holds {total} candidate points, cap is {cap}")
    return _grid_iter(space)


def _grid_iter(space: DesignSpace):
    axes = [space.grid_axis(j) for j in range(len(VARIABLE_NAMES))]
    for b, r, t, wu, wd in itertools.product(*axes):
        cand = PkwSample(B_b=b, R_B_i=r, T_s=t, W_i_u=wu, W_i_d=wd)
        if validate(space.fixed, cand).feasible:
            yield cand
