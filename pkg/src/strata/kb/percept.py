"""Perception interpretation: raw detections into ontology-grounded VMRs."""
from __future__ import annotations

import logging
import math

from strata.kb.kbase import Kb
from strata.kb.types import VMR, VmrObject
from strata.sim.types import Detection

logger = logging.getLogger(__name__)

CONFIDENCE_FLOOR = 0.2
POSITION_QUANTUM = 0.5  # instance identity granularity in metres

# proximity hits are safety substrate, not world objects
_NON_OBJECT_LABELS = frozenset({"obstacle"})


def interpret_percept(
    detections: list[Detection],
    robot_id: str,
    kb: Kb,
    robot_pose: tuple[float, float, float],
    vmr_id: str = "vmr-0",
    tick: int = 0,
) -> VMR:
    """Map class labels to concepts, transform to world coordinates, drop
    low-confidence hits and merge duplicate instances keeping the best."""
    x0, y0, heading = robot_pose
    objects: dict[str, VmrObject] = {}
    for det in detections:
        if det.class_label in _NON_OBJECT_LABELS:
            continue
        if det.confidence < CONFIDENCE_FLOOR:
            continue
        concept = kb.concept_for_label(det.class_label)
        if concept is None:
            logger.warning("unknown class label %r from %s; detection dropped", det.class_label, robot_id)
            continue
        rng, bearing = det.relative_position
        wx = x0 + rng * math.cos(heading + bearing)
        wy = y0 + rng * math.sin(heading + bearing)
        qx = round(wx / POSITION_QUANTUM) * POSITION_QUANTUM
        qy = round(wy / POSITION_QUANTUM) * POSITION_QUANTUM
        instance_id = f"{concept.lower()}@{qx:.1f},{qy:.1f}"
        existing = objects.get(instance_id)
        if existing is None or det.confidence > existing.confidence:
            objects[instance_id] = VmrObject(
                instance_id=instance_id,
                concept=concept,
                position=(wx, wy),
                confidence=det.confidence,
            )
    return VMR(
        vmr_id=vmr_id,
        robot_id=robot_id,
        objects=[objects[k] for k in sorted(objects)],
        tick=tick,
    )
