"""Deterministic non-AI computations used to verify and correct agent output.

Everything here is pure: geometric median (Weiszfeld iteration with the
usual handling of iterates landing on an input point), speed clamping, and
the reference oracles the scenario verifiers score against (min selection,
partial products, big-integer sums, breadth-first traversal, sortedness).
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import Mapping, Sequence

__all__ = [
    "MedianResult",
    "Point2D",
    "big_sum",
    "check_sorted_permutation",
    "clamp_move",
    "dist",
    "geometric_median",
    "reference_bfs",
    "reference_min",
    "reference_partial",
]


@dataclass(frozen=True)
class Point2D:
    x: int
    y: int

    def as_tuple(self) -> tuple[int, int]:
        return (self.x, self.y)


def dist(a: Point2D, b: Point2D) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class MedianResult:
    """Geometric-median solve: real-valued point, objective, iteration info."""

    point: tuple[float, float]
    objective: float
    iterations: int
    converged: bool


def _objective(x: float, y: float, points: Sequence[Point2D]) -> float:
    return sum(math.hypot(p.x - x, p.y - y) for p in points)


def geometric_median(points: Sequence[Point2D], tol: float = 1e-9,
                     max_iter: int = 10_000) -> MedianResult:
    """Point minimizing the sum of Euclidean distances to ``points``.

    Weiszfeld fixed-point iteration started from the centroid.  When an
    iterate lands (within ``tol``) on an input point, the one-sided
    optimality condition is tested there: the point is optimal iff the
    resultant of the unit vectors toward the remaining points has norm at
    most the coincident multiplicity; otherwise the iterate is pushed along
    the damped direction and iteration continues.  Always returns the best
    iterate seen, so the objective never exceeds the centroid's.
    """
    if not points:
        raise ValueError("points must be non-empty")
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = len(points)
    x = sum(p.x for p in points) / n
    y = sum(p.y for p in points) / n
    best_obj = _objective(x, y, points)
    best_point = (x, y)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        num_x = num_y = denom = 0.0
        coincident = 0
        for p in points:
            d = math.hypot(p.x - x, p.y - y)
            if d < tol:
                coincident += 1
                continue
            w = 1.0 / d
            num_x += p.x * w
            num_y += p.y * w
            denom += w
        if denom == 0.0:
            # Every input point coincides with the iterate: optimum.
            converged = True
            break
        tx, ty = num_x / denom, num_y / denom
        if coincident:
            rx = num_x - x * denom
            ry = num_y - y * denom
            r = math.hypot(rx, ry)
            if r <= coincident:
                converged = True
                break
            pull = coincident / r
            nx = (1.0 - pull) * tx + pull * x
            ny = (1.0 - pull) * ty + pull * y
        else:
            nx, ny = tx, ty
        step = math.hypot(nx - x, ny - y)
        x, y = nx, ny
        obj = _objective(x, y, points)
        # Descent property of the iteration; slack absorbs float noise.
        assert obj <= best_obj * (1 + 1e-12) + 1e-12
        if obj < best_obj:
            best_obj = obj
            best_point = (x, y)
        if step < tol:
            converged = True
            break
    return MedianResult(point=best_point, objective=best_obj,
                        iterations=iterations, converged=converged)


def clamp_move(old: Point2D, proposed: Point2D, max_speed: int) -> Point2D:
    """Limit a proposed move to ``max_speed`` units from ``old``.

    Compliant proposals pass through unchanged; others are scaled back along
    the same direction with components truncated toward zero, so the result
    always satisfies dist(old, result) <= max_speed.
    """
    d = dist(old, proposed)
    if d <= max_speed:
        return proposed
    scale = max_speed / d
    return Point2D(old.x + math.trunc((proposed.x - old.x) * scale),
                   old.y + math.trunc((proposed.y - old.y) * scale))


def reference_min(array: Sequence[int]) -> tuple[int, int]:
    """Smallest value and its first index."""
    if not array:
        raise ValueError("array must be non-empty")
    best_value = array[0]
    best_index = 0
    for i, v in enumerate(array):
        if v < best_value:
            best_value = v
            best_index = i
    return best_value, best_index


def reference_partial(multiplicand: int, digit: int, position: int) -> int:
    """Exact multiplicand * digit * 10**position."""
    if not 0 <= digit <= 9:
        raise ValueError("digit must be in 0..9")
    if position < 0:
        raise ValueError("position must be non-negative")
    return multiplicand * digit * 10 ** position


def big_sum(partials: Sequence[int]) -> int:
    """Exact arbitrary-precision sum."""
    return sum(partials, 0)


def reference_bfs(graph: Mapping[int, Sequence[int]], start: int) -> list[int]:
    """Breadth-first visit order, expanding neighbors in ascending id order.

    A node enters the queue at most once; the returned order is the pop
    (equivalently, discovery) order starting from ``start``.
    """
    if start not in graph:
        raise ValueError(f"start node {start!r} not in graph")
    queue: deque[int] = deque([start])
    enqueued = {start}
    visited: list[int] = []
    while queue:
        node = queue.popleft()
        visited.append(node)
        for neighbor in sorted(graph[node]):
            if neighbor not in enqueued:
                enqueued.add(neighbor)
                queue.append(neighbor)
    return visited


def check_sorted_permutation(original: Sequence[int], candidate: Sequence[int]) -> bool:
    """True iff candidate is non-decreasing and a multiset permutation of original."""
    if any(a > b for a, b in zip(candidate, candidate[1:])):
        return False
    return Counter(original) == Counter(candidate)
