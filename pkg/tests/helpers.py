"""Shared test utilities: the independent grid-search median oracle and a
seeded random event-tree workload for causality audits."""

from __future__ import annotations

import random

import numpy as np

from agentsim.engine import Entity
from agentsim.verifiers import Point2D


def grid_median_oracle(points, coarse: float = 1.0, fine: float = 0.01):
    """Brute-force geometric-median search over the bounding box.

    Coarse pass at ``coarse`` step over the whole box, then a refined pass
    at ``fine`` step around the best coarse cell.  Returns (point, objective).
    Independent of the iterative solver under test.
    """
    pts = np.array([(p.x, p.y) for p in points], dtype=float)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    xs = np.arange(lo[0], hi[0] + coarse, coarse)
    ys = np.arange(lo[1], hi[1] + coarse, coarse)
    X, Y = np.meshgrid(xs, ys)
    obj = sum(np.hypot(X - p[0], Y - p[1]) for p in pts)
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    bx, by = X[i, j], Y[i, j]
    xs = np.arange(bx - coarse, bx + coarse + fine, fine)
    ys = np.arange(by - coarse, by + coarse + fine, fine)
    X, Y = np.meshgrid(xs, ys)
    obj = sum(np.hypot(X - p[0], Y - p[1]) for p in pts)
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    return (float(X[i, j]), float(Y[i, j])), float(obj[i, j])


def random_points(rng: random.Random, n: int = 5, bound: int = 600) -> list[Point2D]:
    return [Point2D(rng.randint(0, bound), rng.randint(0, bound)) for _ in range(n)]


class TreeNodeEntity(Entity):
    """Fires plan-driven events; used to replay a precomputed event tree."""

    def __init__(self, ctx, plan):
        super().__init__(ctx)
        self.plan = plan  # uid -> ((child_uid, delay, target_number), ...)

    def fire(self, payload):
        for child_uid, delay, target_number in self.plan.get(payload, ()):
            self.request_service(delay, "fire", child_uid, ("Node", target_number))


def build_tree_workload(n_events: int, n_entities: int, seed: int,
                        min_delay: float, start: float = 0.0):
    """Random event tree: every non-root event is caused by an earlier one.

    Cross-entity children keep delay >= min_delay; same-entity children may
    use delay zero.  Returns (nodes, plan, roots) where nodes[uid] =
    (entity, time, parent_uid) and roots are the initially scheduled uids.
    """
    rng = random.Random(seed)
    n_roots = max(1, n_events // 100)
    nodes: list[tuple[int, float, int | None]] = []
    plan: dict[int, list[tuple[int, float, int]]] = {}
    for uid in range(n_events):
        if uid < n_roots:
            entity = rng.randrange(n_entities)
            time = start + rng.randint(0, 50) * min_delay
            nodes.append((entity, time, None))
            continue
        parent_uid = rng.randrange(uid)
        p_entity, p_time, _ = nodes[parent_uid]
        if rng.random() < 0.3:
            entity = p_entity
            delay = rng.choice([0.0, min_delay * rng.randint(0, 20)])
        else:
            entity = rng.randrange(n_entities)
            if entity == p_entity:
                entity = (entity + 1) % n_entities
            delay = min_delay * rng.randint(1, 20)
        nodes.append((entity, p_time + delay, parent_uid))
        plan.setdefault(parent_uid, []).append((uid, delay, entity))
    plan = {uid: tuple(children) for uid, children in plan.items()}
    roots = list(range(n_roots))
    return nodes, plan, roots
