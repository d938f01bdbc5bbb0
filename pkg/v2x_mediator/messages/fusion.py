from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from ..core import GeoRef, Point, geo_to_local
from .schema import Cpm, PerceivedObject

logger = logging.getLogger(__name__)

MERGE_RADIUS_M = 2.0


def _candidates(
    own: Sequence[PerceivedObject],
    received: Sequence[Cpm],
    self_pos: Point,
    ref: GeoRef,
) -> List[Tuple[float, float, PerceivedObject, bool]]:
    """All objects as (x, y) relative to `self_pos`, own sensors first."""
    out = [(o.rel_position.x, o.rel_position.y, o, True) for o in own]
    for cpm in received:
        origin = geo_to_local(ref, cpm.origin_latitude, cpm.origin_longitude) - self_pos
        for o in cpm.objects:
            out.append((origin.x + o.rel_position.x, origin.y + o.rel_position.y, o, False))
    return out


def fuse_perception(
    own: Sequence[PerceivedObject],
    received: Sequence[Cpm],
    self_pos: Point,
    ref: GeoRef,
) -> List[PerceivedObject]:
    """Merge locally sensed objects with those reported in Collective Perception Messages.

    Every object is mapped into the frame of the fusing station: the returned
    `rel_position`s are relative to `self_pos`. An object joins the cluster that
    holds its nearest member of the same type within `MERGE_RADIUS_M`, otherwise
    it opens a new cluster. A cluster reports the confidence-weighted mean
    position and speed, the highest confidence, and the heading of its most
    confident member (own sensors win ties).
    """
    candidates = _candidates(own, received, self_pos, ref)
    if not candidates:
        return []

    xs = np.array([c[0] for c in candidates], dtype=np.float64)
    ys = np.array([c[1] for c in candidates], dtype=np.float64)
    types = np.array([int(c[2].object_type) for c in candidates])
    confidence = np.array([c[2].confidence for c in candidates], dtype=np.float64)
    speeds = np.array([c[2].speed for c in candidates], dtype=np.float64)

    dist = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    linked = ((dist <= MERGE_RADIUS_M) & (types[:, None] == types[None, :])).tolist()
    dist_rows = dist.tolist()

    cluster_of: List[int] = []
    n_clusters = 0
    for i in range(len(candidates)):
        near = [j for j in range(i) if linked[i][j]]
        if near:
            nearest = min(near, key=dist_rows[i].__getitem__)
            cluster_of.append(cluster_of[nearest])
        else:
            cluster_of.append(n_clusters)
            n_clusters += 1

    labels = np.array(cluster_of)
    # clusters whose members all report zero confidence fall back to a plain mean
    unweighted = np.bincount(labels, weights=confidence, minlength=n_clusters) <= 0
    weights = np.where(unweighted[labels], 1.0, confidence)
    total = np.bincount(labels, weights=weights, minlength=n_clusters)
    mean_x = (np.bincount(labels, weights=weights * xs, minlength=n_clusters) / total).tolist()
    mean_y = (np.bincount(labels, weights=weights * ys, minlength=n_clusters) / total).tolist()
    mean_speed = (np.bincount(labels, weights=weights * speeds, minlength=n_clusters) / total).tolist()

    members: List[List[Tuple[float, float, PerceivedObject, bool]]] = [[] for _ in range(n_clusters)]
    for candidate, cluster in zip(candidates, cluster_of):
        members[cluster].append(candidate)

    fused = []
    for cluster, group in enumerate(members):
        # own-sensor objects win confidence ties
        lead = max(group, key=lambda m: (m[2].confidence, m[3]))[2]
        fused.append(PerceivedObject(
            rel_position=Point(mean_x[cluster], mean_y[cluster]),
            speed=max(mean_speed[cluster], 0.0),
            heading=lead.heading,
            object_type=lead.object_type,
            confidence=max(m[2].confidence for m in group),
        ))

    logger.debug("fused %d objects into %d", len(candidates), len(fused))
    return fused
