"""Feature lifecycle: acquire in the center ROI, track, replace on loss.

Features are only ever acquired in the central half of the frame (per
axis), so the vehicle is never steered toward structure at the image
edges. The single best feature (highest detection response) drives the
displacement measurement; when too few features survive, the whole set
is replaced by a fresh acquisition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from flowhold.control import Displacement, displacement_from_center
from flowhold.corners import DetectParams, Rect, detect_corners
from flowhold.flow import FlowStatus, LkParams, Pyramid, build_pyramid, track_points
from flowhold.image import GrayImage

__all__ = [
    "Blind",
    "FeatureLost",
    "Reacquired",
    "TrackedFeature",
    "TrackerConfig",
    "TrackerState",
    "acquire",
    "advance",
    "best_displacement",
    "center_roi",
]


@dataclass(frozen=True)
class TrackerConfig:
    detect: DetectParams = field(default_factory=DetectParams)
    lk: LkParams = field(default_factory=LkParams)
    min_alive: int = 5

    def __post_init__(self) -> None:
        if not 1 <= self.min_alive <= self.detect.max_corners:
            raise ValueError("min_alive must lie in [1, detect.max_corners]")


@dataclass(frozen=True)
class TrackedFeature:
    id: int
    position: tuple[float, float]
    init_response: float
    age: int = 0
    alive: bool = True


@dataclass(frozen=True)
class TrackerState:
    """Snapshot of the feature set between frames; replaced by advance()."""

    width: int
    height: int
    features: tuple[TrackedFeature, ...]
    best_id: int | None
    generation: int
    blind: bool
    next_id: int

    def alive_features(self) -> tuple[TrackedFeature, ...]:
        return tuple(f for f in self.features if f.alive)

    @property
    def n_alive(self) -> int:
        return sum(1 for f in self.features if f.alive)


@dataclass(frozen=True)
class FeatureLost:
    feature_id: int
    reason: FlowStatus


@dataclass(frozen=True)
class Reacquired:
    pass


@dataclass(frozen=True)
class Blind:
    pass


TrackerEvent = FeatureLost | Reacquired | Blind


def center_roi(width: int, height: int) -> Rect:
    """Central half of the frame along each axis (the acquisition region)."""
    if width < 4 or height < 4:
        raise ValueError(f"image must be at least 4x4, got {width}x{height}")
    return Rect(x=width // 4, y=height // 4, w=width // 2, h=height // 2)


def _select_best(
    features: tuple[TrackedFeature, ...], width: int, height: int
) -> int | None:
    alive = [f for f in features if f.alive]
    if not alive:
        return None
    cx, cy = float(width // 2), float(height // 2)

    def key(f: TrackedFeature) -> tuple[float, float, int]:
        dx = f.position[0] - cx
        dy = f.position[1] - cy
        return (-f.init_response, dx * dx + dy * dy, f.id)

    return min(alive, key=key).id


def acquire(
    image: GrayImage, config: TrackerConfig, *, generation: int = 0, next_id: int = 0
) -> TrackerState:
    """Detect a fresh feature set in the center ROI of ``image``.

    Finding nothing is not an error: the returned state is blind and
    downstream control must hold attitude neutral.
    """
    roi = center_roi(image.width, image.height)
    corners = detect_corners(image, roi, config.detect)
    margin = config.lk.window_radius + 1
    corners = [
        c
        for c in corners
        if margin <= c.x <= image.width - 1 - margin
        and margin <= c.y <= image.height - 1 - margin
    ]
    features = tuple(
        TrackedFeature(
            id=next_id + i,
            position=(float(c.x), float(c.y)),
            init_response=c.response,
        )
        for i, c in enumerate(corners)
    )
    return TrackerState(
        width=image.width,
        height=image.height,
        features=features,
        best_id=_select_best(features, image.width, image.height),
        generation=generation + 1,
        blind=not features,
        next_id=next_id + len(features),
    )


def advance(
    state: TrackerState,
    prev: GrayImage,
    next_: GrayImage,
    config: TrackerConfig,
    *,
    prev_pyramid: Pyramid | None = None,
    next_pyramid: Pyramid | None = None,
) -> tuple[TrackerState, list[TrackerEvent]]:
    """Track every alive feature from ``prev`` into ``next_``.

    Survivors keep their ids and age; losses are reported as events. If
    the best feature died, the next best survivor takes over on the
    same frame. If fewer than min_alive survive, the entire set is
    replaced by a fresh acquisition on ``next_`` (Reacquired event);
    dropping to zero alive features additionally reports Blind.

    Pre-built pyramids for either frame may be passed to avoid
    recomputation in a streaming loop.
    """
    for img, name in ((prev, "prev"), (next_, "next")):
        if img.width != state.width or img.height != state.height:
            raise ValueError(
                f"{name} frame is {img.width}x{img.height}, state expects "
                f"{state.width}x{state.height}"
            )

    events: list[TrackerEvent] = []
    alive = state.alive_features()
    survivors: list[TrackedFeature] = []
    updated: list[TrackedFeature] = []
    if alive:
        if prev_pyramid is None:
            prev_pyramid = build_pyramid(prev, config.lk.pyramid_levels)
        if next_pyramid is None:
            next_pyramid = build_pyramid(next_, config.lk.pyramid_levels)
        points = np.asarray([f.position for f in alive], dtype=np.float64)
        results = track_points(prev_pyramid, next_pyramid, points, config.lk)
        for feat, res in zip(alive, results):
            if res.tracked:
                kept = replace(feat, position=res.point, age=feat.age + 1)
                survivors.append(kept)
                updated.append(kept)
            else:
                updated.append(replace(feat, alive=False))
                events.append(FeatureLost(feature_id=feat.id, reason=res.status))
    dead = tuple(f for f in state.features if not f.alive)
    features = tuple(updated) + dead

    if len(survivors) < config.min_alive:
        new_state = acquire(
            next_, config, generation=state.generation, next_id=state.next_id
        )
        events.append(Reacquired())
        if new_state.blind and not state.blind:
            events.append(Blind())
        return new_state, events

    best_id = state.best_id
    if best_id is not None and not any(f.id == best_id for f in survivors):
        best_id = _select_best(features, state.width, state.height)
    new_state = TrackerState(
        width=state.width,
        height=state.height,
        features=features,
        best_id=best_id,
        generation=state.generation,
        blind=False,
        next_id=state.next_id,
    )
    return new_state, events


def best_displacement(
    state: TrackerState, width: int, height: int
) -> Displacement | None:
    """Displacement of the best feature from the image center, or None when blind."""
    if state.best_id is None:
        return None
    for f in state.features:
        if f.id == state.best_id and f.alive:
            return displacement_from_center(f.position, width, height)
    return None
