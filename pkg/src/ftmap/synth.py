"""Synthetic scenes and an independent marching oracle for the matcher.

Scenes are axis-aligned, pairwise-disjoint rectangles plus a camera and
bearing, generated from an integer seed by the stdlib Mersenne Twister
(``random.Random``), which is bit-reproducible across platforms.  The
oracle walks the sight ray in 1 cm steps and reports the first rectangle
containing a sample point; it shares no code with the analytic geometry
it cross-checks.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geo, osm, photo
from .errors import SceneGenerationError

DEFAULT_AREA_M = 250.0
DEFAULT_MAX_RANGE_M = 200.0
MARCH_STEP_M = 0.01

# Default geotag used when a scene is serialized to pipeline files.
SCENE_ORIGIN = geo.GeoPoint(52.5, 13.4)


@dataclass(frozen=True)
class Rect:
    id: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def corners(self) -> tuple[tuple[float, float], ...]:
        return ((self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1))


@dataclass(frozen=True)
class SyntheticScene:
    footprints: tuple[Rect, ...]
    camera: geo.LocalPoint
    bearing: float
    truth_id: str | None
    seed: int


def _disjoint(a: Rect, b: Rect, gap: float) -> bool:
    return (
        a.x1 + gap <= b.x0
        or b.x1 + gap <= a.x0
        or a.y1 + gap <= b.y0
        or b.y1 + gap <= a.y0
    )


def generate_scene(
    seed: int,
    n_buildings: int,
    area: float = DEFAULT_AREA_M,
    *,
    min_size: float = 6.0,
    max_size: float = 30.0,
    gap: float = 0.5,
    max_range: float = DEFAULT_MAX_RANGE_M,
    max_attempts: int = 1000,
) -> SyntheticScene:
    """Deterministically generate one scene for the given seed.

    Rectangles are rejection-sampled until pairwise disjoint (with a
    minimum gap); the camera is uniform in the area, the bearing uniform
    in [0, 360).  Raises when a rectangle cannot be placed within
    ``max_attempts`` tries.
    """
    if n_buildings < 0:
        raise SceneGenerationError("n_buildings must be >= 0")
    rng = random.Random(seed)
    rects: list[Rect] = []
    for i in range(n_buildings):
        for attempt in range(max_attempts):
            w = rng.uniform(min_size, max_size)
            h = rng.uniform(min_size, max_size)
            x0 = rng.uniform(0.0, area - w)
            y0 = rng.uniform(0.0, area - h)
            rect = Rect(id=f"b{i:03d}", x0=x0, y0=y0, x1=x0 + w, y1=y0 + h)
            if all(_disjoint(rect, other, gap) for other in rects):
                rects.append(rect)
                break
        else:
            raise SceneGenerationError(
                f"seed {seed}: could not place building {i} after {max_attempts} attempts"
            )
    camera = geo.LocalPoint(rng.uniform(0.0, area), rng.uniform(0.0, area))
    bearing = rng.uniform(0.0, 360.0) % 360.0
    scene = SyntheticScene(
        footprints=tuple(rects), camera=camera, bearing=bearing, truth_id=None, seed=seed
    )
    truth = oracle_match(scene, max_range=max_range)
    return SyntheticScene(
        footprints=scene.footprints, camera=camera, bearing=bearing, truth_id=truth, seed=seed
    )


def oracle_match(
    scene: SyntheticScene,
    max_range: float = DEFAULT_MAX_RANGE_M,
    step: float = MARCH_STEP_M,
    chunk: int = 2000,
) -> str | None:
    """March along the ray in ``step`` meters and return the first hit.

    Sample points go from t = 0 to max_range inclusive; the first point
    contained in a rectangle decides.  Rectangles are disjoint, so at
    most one can contain any sample.
    """
    if not scene.footprints:
        return None
    rad = math.radians(scene.bearing)
    dx, dy = math.sin(rad), math.cos(rad)
    n_steps = int(math.floor(max_range / step)) + 1
    rects = scene.footprints
    for start in range(0, n_steps, chunk):
        t = np.arange(start, min(start + chunk, n_steps), dtype=np.float64) * step
        px = scene.camera.x + t * dx
        py = scene.camera.y + t * dy
        best_idx = None
        best_rect = None
        for rect in rects:
            mask = (px >= rect.x0) & (px <= rect.x1) & (py >= rect.y0) & (py <= rect.y1)
            if mask.any():
                idx = int(np.argmax(mask))
                if best_idx is None or idx < best_idx:
                    best_idx = idx
                    best_rect = rect.id
        if best_rect is not None:
            return best_rect
    return None


def analytic_match(
    scene: SyntheticScene, max_range: float = DEFAULT_MAX_RANGE_M
) -> tuple[str | None, float | None]:
    """Match via the production geometry: nearest ray intersection wins."""
    ray = geo.ray_from_bearing(scene.camera, scene.bearing)
    best: tuple[float, str] | None = None
    for rect in scene.footprints:
        poly = geo.Polygon2D(tuple(geo.LocalPoint(x, y) for x, y in rect.corners()))
        dist = geo.ray_polygon_distance(ray, poly)
        if dist is not None and dist <= max_range:
            key = (dist, rect.id)
            if best is None or key < best:
                best = key
    if best is None:
        return None, None
    return best[1], best[0]


def _ray_rect_span(
    camera: geo.LocalPoint, bearing: float, rect: Rect
) -> tuple[float, float] | None:
    """Slab-method (t_enter, t_exit) of the ray through the rectangle."""
    rad = math.radians(bearing)
    dx, dy = math.sin(rad), math.cos(rad)
    t0, t1 = -math.inf, math.inf
    for o, d, lo, hi in ((camera.x, dx, rect.x0, rect.x1), (camera.y, dy, rect.y0, rect.y1)):
        if abs(d) < 1e-15:
            if not lo <= o <= hi:
                return None
            continue
        ta, tb = (lo - o) / d, (hi - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
    if t1 < t0 or t1 < 0:
        return None
    return max(t0, 0.0), t1


def is_knife_edge(
    scene: SyntheticScene,
    max_range: float = DEFAULT_MAX_RANGE_M,
    step: float = MARCH_STEP_M,
) -> bool:
    """Scenes where a step-sized perturbation could flip the outcome.

    Flagged when the ray clips a rectangle over a chord shorter than two
    steps, when the two nearest entry distances nearly tie, or when an
    entry distance sits within two steps of the range limit.
    """
    band = 2.0 * step
    entries: list[float] = []
    for rect in scene.footprints:
        span = _ray_rect_span(scene.camera, scene.bearing, rect)
        if span is None:
            continue
        t_enter, t_exit = span
        if t_exit - t_enter < band:
            return True
        if abs(t_enter - max_range) < band:
            return True
        entries.append(t_enter)
    entries.sort()
    return len(entries) >= 2 and entries[1] - entries[0] < band


@dataclass(frozen=True)
class EvalResult:
    scenes: int
    knife_edges: int
    agreements: int
    disagreements: tuple[int, ...]  # offending seeds, knife edges excluded

    @property
    def eligible(self) -> int:
        return self.scenes - self.knife_edges

    @property
    def agreement_rate(self) -> float:
        return self.agreements / self.eligible if self.eligible else 1.0


def evaluate_matching(
    seeds: range,
    n_buildings: int = 12,
    area: float = DEFAULT_AREA_M,
    max_range: float = DEFAULT_MAX_RANGE_M,
    step: float = MARCH_STEP_M,
) -> EvalResult:
    """Cross-validate the analytic matcher against the marching oracle."""
    knife_edges = 0
    agreements = 0
    disagreements: list[int] = []
    for seed in seeds:
        scene = generate_scene(seed, n_buildings, area, max_range=max_range)
        if is_knife_edge(scene, max_range=max_range, step=step):
            knife_edges += 1
            continue
        analytic_id, _ = analytic_match(scene, max_range=max_range)
        if analytic_id == scene.truth_id:
            agreements += 1
        else:
            disagreements.append(seed)
    return EvalResult(
        scenes=len(seeds),
        knife_edges=knife_edges,
        agreements=agreements,
        disagreements=tuple(disagreements),
    )


def write_scene_files(
    scene: SyntheticScene,
    out_dir: str | Path,
    origin: geo.GeoPoint = SCENE_ORIGIN,
) -> tuple[Path, Path]:
    """Serialize a scene to the pipeline's footprint/photo file formats.

    Local coordinates are lifted to lat/lon around ``origin`` so the real
    ingest/match stages can run unchanged on synthetic input.  Returns
    (footprints_path, photos_path).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    footprints = []
    for rect in scene.footprints:
        ring = tuple(
            geo.unproject_local(origin, geo.LocalPoint(x, y)) for x, y in rect.corners()
        )
        footprints.append(
            osm.Footprint(
                id=rect.id,
                ring=ring,
                tags={"building": "apartments"},
                function=osm.FunctionClass.RESIDENTIAL,
            )
        )
    fp_path = out / "footprints.geojson"
    osm.write_footprints_geojson(footprints, fp_path)
    camera_geo = geo.unproject_local(origin, scene.camera)
    record = photo.PhotoRecord(
        id=f"synth-{scene.seed:06d}",
        position=camera_geo,
        direction=scene.bearing,
        uploader="synth",
    )
    photos_path = out / "photos.jsonl"
    photo.write_photo_records([record], photos_path)
    return fp_path, photos_path
