"""Simulated annealing over signal positions and bit labelings.

Candidate moves displace one point (with a displacement budget that shrinks
geometrically over time) or, when optimizing the bitwise objective, swap
the labels of two points.  Every candidate is renormalized to unit average
power before scoring, so the power constraint holds along the whole
trajectory.  The best constellation ever visited is returned, and the
schedule can be restarted from it a configurable number of times.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .capacity import AMI, OBJECTIVES, PAMI, QuadEvaluator, QuadratureGrid
from .model import ChannelParams, Constellation, normalize_average_power

# Reject candidates that bring two points closer than this; such near
# coincidences carry no rate benefit and only stall the search.
COLLISION_MIN_DIST = 1e-9

MOVE_POINT = "point"
MOVE_SWAP = "swap"


@dataclass(frozen=True)
class SAConfig:
    """Annealing schedule; `iterations` is the total step budget, split
    evenly over `reanneal_count` + 1 cooling passes."""

    iterations: int = 40000
    t_initial: float = 0.05
    t_final: float = 1e-5
    d_initial: float = 0.5
    d_final: float = 0.005
    label_swap_prob: float = 0.1
    seed: int = 0
    reanneal_count: int = 2

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        # Equality is allowed so a frozen temperature turns the search
        # into a plain hill-climber.
        if not (self.t_initial >= self.t_final > 0):
            raise ValueError(
                f"need t_initial >= t_final > 0, got {self.t_initial}, {self.t_final}"
            )
        if not (self.d_initial >= self.d_final > 0):
            raise ValueError(
                f"need d_initial >= d_final > 0, got {self.d_initial}, {self.d_final}"
            )
        if not 0.0 <= self.label_swap_prob <= 1.0:
            raise ValueError(f"label_swap_prob must be in [0, 1], got {self.label_swap_prob}")
        if self.reanneal_count < 0:
            raise ValueError(f"reanneal_count must be >= 0, got {self.reanneal_count}")
        if self.iterations < self.reanneal_count + 1:
            raise ValueError("iterations must cover at least one step per pass")

    @property
    def cooling(self) -> float:
        """Geometric temperature factor per step of a single full-budget pass."""
        if self.iterations == 1:
            return 1.0
        return (self.t_final / self.t_initial) ** (1.0 / (self.iterations - 1))


@dataclass(frozen=True, eq=False)
class AnnealTrace:
    """Per-step log of one optimization run."""

    step: np.ndarray
    temperature: np.ndarray
    current_bits: np.ndarray
    best_bits: np.ndarray
    accepted: np.ndarray
    move_type: np.ndarray

    def to_csv(self) -> str:
        lines = ["step,temperature,current_bits,best_bits,accepted,move_type"]
        for k in range(self.step.size):
            lines.append(
                f"{int(self.step[k])},{float(self.temperature[k])!r},"
                f"{float(self.current_bits[k])!r},{float(self.best_bits[k])!r},"
                f"{int(self.accepted[k])},{self.move_type[k]}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_csv())


def _geometric(step: int, length: int, start: float, end: float) -> float:
    if length <= 1:
        return start
    return start * (end / start) ** (step / (length - 1))


def displacement_schedule(step: int, config: SAConfig) -> float:
    """Maximum displacement magnitude at a given step of a full-budget pass."""
    if not 0 <= step < config.iterations:
        raise ValueError(f"step {step} outside 0..{config.iterations - 1}")
    return _geometric(step, config.iterations, config.d_initial, config.d_final)


def metropolis_accept(delta: float, temperature: float, draw: float) -> bool:
    """Accept rule for a maximization step: always uphill, downhill with
    probability exp(delta / temperature) compared against `draw`."""
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    if delta >= 0:
        return True
    return draw < math.exp(delta / temperature)


def _displacement(max_disp: float, draw_a: float, draw_b: float) -> complex:
    """Uniform draw from the closed disc of radius `max_disp`."""
    radius = max_disp * math.sqrt(draw_a)
    angle = 2.0 * math.pi * draw_b
    return complex(radius * math.cos(angle), radius * math.sin(angle))


def perturb_point(
    c: Constellation, index: int, max_disp: float, draws: tuple[float, float]
) -> Constellation:
    """Displace one point by a disc-uniform offset, then renormalize power.

    `draws` supplies the two uniform variates, so callers control the
    randomness.  Before renormalization only the chosen point differs.
    """
    if not 0 <= index < c.size:
        raise ValueError(f"index {index} outside 0..{c.size - 1}")
    if max_disp < 0:
        raise ValueError(f"max_disp must be >= 0, got {max_disp}")
    pts = c.points.copy()
    pts[index] += _displacement(max_disp, draws[0], draws[1])
    return normalize_average_power(Constellation(points=pts, labels=c.labels, m=c.m))


def swap_labels(c: Constellation, i: int, j: int) -> Constellation:
    """Exchange the labels of points i and j."""
    if not (0 <= i < c.size and 0 <= j < c.size):
        raise ValueError(f"indices ({i}, {j}) outside 0..{c.size - 1}")
    labs = c.labels.copy()
    labs[i], labs[j] = labs[j], labs[i]
    return Constellation(points=c.points, labels=labs, m=c.m)


def _renormalize(pts: np.ndarray) -> np.ndarray:
    power = float(np.mean(pts.real**2 + pts.imag**2))
    if power <= 0.0:
        raise ValueError("degenerate all-zero candidate")
    return pts / math.sqrt(power)


def _min_pairwise(pts: np.ndarray) -> float:
    dist = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def _random_disc_points(n: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(n, dtype=np.complex128)
    have = 0
    while have < n:
        batch = max(8, 2 * (n - have))
        xy = rng.uniform(-1.0, 1.0, (batch, 2))
        keep = xy[:, 0] ** 2 + xy[:, 1] ** 2 <= 1.0
        got = xy[keep]
        take = min(n - have, got.shape[0])
        out[have : have + take] = got[:take, 0] + 1j * got[:take, 1]
        have += take
    return out


def _pass_lengths(total: int, passes: int) -> list[int]:
    base, extra = divmod(total, passes)
    return [base + (1 if p < extra else 0) for p in range(passes)]


def sa_optimize(
    size: int,
    params: ChannelParams,
    objective: str,
    grid: QuadratureGrid,
    config: SAConfig,
    initial: Constellation | None = None,
) -> tuple[Constellation, AnnealTrace]:
    """Jointly optimize point positions (and labels, for PAMI) for one channel.

    Args:
        size: number of points, a power of two >= 2.
        params: channel the design targets.
        objective: "AMI" (positions only) or "PAMI" (positions and labels).
        grid: quadrature rule used to score candidates.
        config: schedule; identical config implies an identical result.
        initial: optional warm start; defaults to points drawn uniformly in
            the unit disc (then normalized) with a random labeling.

    Returns:
        The best constellation visited and the per-step trace.
    """
    if size < 2 or size & (size - 1):
        raise ValueError(f"size must be 2^m with m >= 1, got {size}")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if objective == PAMI and config.label_swap_prob == 0.0:
        warnings.warn("PAMI optimization with label_swap_prob=0 cannot move labels")
    m = size.bit_length() - 1
    rng = np.random.Generator(np.random.PCG64(config.seed))
    evaluator = QuadEvaluator(params, grid)

    if initial is not None:
        if initial.size != size:
            raise ValueError(f"warm start has {initial.size} points, expected {size}")
        pts = _renormalize(initial.points.copy())
        labs = initial.labels.copy()
    else:
        pts = _renormalize(_random_disc_points(size, rng))
        labs = rng.permutation(size).astype(np.int64)

    if objective == PAMI:
        score = lambda p, l: evaluator.pami_bits(p, l)  # noqa: E731
        swap_prob = config.label_swap_prob
    else:
        score = lambda p, l: evaluator.ami_bits(p)  # noqa: E731
        swap_prob = 0.0

    current = score(pts, labs)
    best = current
    best_pts, best_labs = pts.copy(), labs.copy()

    n_steps = config.iterations
    col_step = np.arange(n_steps, dtype=np.int64)
    col_temp = np.empty(n_steps)
    col_cur = np.empty(n_steps)
    col_best = np.empty(n_steps)
    col_acc = np.zeros(n_steps, dtype=bool)
    col_move = np.empty(n_steps, dtype="<U5")

    g = 0
    for p_i, p_len in enumerate(_pass_lengths(n_steps, config.reanneal_count + 1)):
        if p_i > 0:
            # Re-heat from the incumbent best.
            pts, labs = best_pts.copy(), best_labs.copy()
            current = best
        for local in range(p_len):
            temp = _geometric(local, p_len, config.t_initial, config.t_final)
            disp = _geometric(local, p_len, config.d_initial, config.d_final)
            if swap_prob > 0.0 and rng.random() < swap_prob:
                move = MOVE_SWAP
                i = int(rng.integers(size))
                j = int(rng.integers(size - 1))
                j += j >= i
                cand_pts = pts
                cand_labs = labs.copy()
                cand_labs[i], cand_labs[j] = cand_labs[j], cand_labs[i]
                collided = False
            else:
                move = MOVE_POINT
                i = int(rng.integers(size))
                u_a, u_b = rng.random(2)
                cand_pts = pts.copy()
                cand_pts[i] += _displacement(disp, u_a, u_b)
                cand_pts = _renormalize(cand_pts)
                cand_labs = labs
                collided = _min_pairwise(cand_pts) < COLLISION_MIN_DIST
            accepted = False
            if not collided:
                cand = score(cand_pts, cand_labs)
                delta = cand - current
                draw = rng.random() if delta < 0 else 0.0
                accepted = metropolis_accept(delta, temp, draw)
                if accepted:
                    pts, labs, current = cand_pts, cand_labs, cand
                    if current > best:
                        best = current
                        best_pts, best_labs = pts.copy(), labs.copy()
            col_temp[g] = temp
            col_cur[g] = current
            col_best[g] = best
            col_acc[g] = accepted
            col_move[g] = move
            g += 1

    result = Constellation(points=best_pts, labels=best_labs, m=m)
    trace = AnnealTrace(
        step=col_step,
        temperature=col_temp,
        current_bits=col_cur,
        best_bits=col_best,
        accepted=col_acc,
        move_type=col_move,
    )
    return result, trace


def with_seed(config: SAConfig, seed: int) -> SAConfig:
    """Copy of `config` with a different seed."""
    return replace(config, seed=seed)
