"""Workspace and scenario model, multi-robot reduction, and scenario JSON I/O.

A scenario bundles a rectangular workspace with polygonal obstacles and one
or more anchored tethers.  The tethers of non-focus robots are turned into
inflated obstacles on a decreasing trial ladder of radii, which reduces the
multi-robot case to the single-robot one.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.ndimage
import shapely
import shapely.geometry

from . import _kernels, geometry, homotopy
from .geometry import TOL, GeometryError, Polygon, Polyline

SCHEMA_VERSION = 1

# relative slack allowed when certifying a declared-taut tether
TAUT_REL_TOL = 1e-6

# inflation radii tried for other-robot tethers, as fractions of the
# bounding-box diagonal
EPSILON_LADDER = (0.05, 0.02, 0.01, 0.005)


class ScenarioError(ValueError):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class DefinitionParams:
    """Knobs of the parametric evaluators."""

    d_max: float = 2.0
    delta: float = math.inf
    beta_mode: str = "off"  # off | len-subpath
    safe_base: int = 7
    samples_per_unit: int = 20
    relaxed_base: int = 9

    def __post_init__(self):
        if self.d_max < 0:
            raise ScenarioError("bad-params", "d_max must be non-negative")
        if self.delta < 0:
            raise ScenarioError("bad-params", "delta must be non-negative")
        if self.beta_mode not in ("off", "len-subpath"):
            raise ScenarioError("bad-params", f"unknown beta_mode {self.beta_mode!r}")
        if self.safe_base not in (6, 7):
            raise ScenarioError("bad-params", "safe_base must be 6 or 7")
        if self.samples_per_unit < 2:
            raise ScenarioError("bad-params", "samples_per_unit must be >= 2")


class Environment:
    """Axis-aligned workspace box with disjoint polygonal obstacles."""

    def __init__(self, bounds_lo, bounds_hi, obstacles, check_connectivity=True):
        self.lo = np.asarray(bounds_lo, dtype=np.float64)
        self.hi = np.asarray(bounds_hi, dtype=np.float64)
        if not np.all(self.hi > self.lo + TOL):
            raise ScenarioError("bad-bounds", "bounding box is empty")
        self.obstacles = list(obstacles)
        margin = 1e-9 * float(np.linalg.norm(self.hi - self.lo))
        for k, obs in enumerate(self.obstacles):
            vlo, vhi = obs.bounds()
            if np.any(vlo <= self.lo + margin) or np.any(vhi >= self.hi - margin):
                raise ScenarioError(
                    "obstacle-outside-bounds",
                    f"obstacle {k} touches or leaves the bounding box",
                )
        for i in range(len(self.obstacles)):
            for j in range(i + 1, len(self.obstacles)):
                if geometry.polygon_interiors_intersect(self.obstacles[i], self.obstacles[j]):
                    raise ScenarioError("obstacles-overlap", f"obstacles {i} and {j} overlap")
        self.rings = geometry.pack_obstacles(self.obstacles)
        if check_connectivity and not free_space_connected(self):
            raise ScenarioError("free-space-disconnected", "free space is not path-connected")

    @property
    def diagonal(self):
        return float(np.linalg.norm(self.hi - self.lo))


def free_space_connected(env, resolution=None):
    """Flood-fill connectivity of the free cells of an occupancy grid."""
    if resolution is None:
        cells = 128
    else:
        if resolution <= 0:
            raise ScenarioError("bad-params", "resolution must be positive")
        cells = max(8, int(math.ceil(max(env.hi - env.lo) / resolution)))
    xs = np.linspace(env.lo[0], env.hi[0], cells, endpoint=False) + (env.hi[0] - env.lo[0]) / cells / 2
    ys = np.linspace(env.lo[1], env.hi[1], cells, endpoint=False) + (env.hi[1] - env.lo[1]) / cells / 2
    gx, gy = np.meshgrid(xs, ys)
    cls = _kernels.point_classes(gx.ravel(), gy.ravel(), env.rings, TOL)
    free = (cls != 2).reshape(cells, cells)
    if not free.any():
        return False
    _, count = scipy.ndimage.label(free)
    return count == 1


@dataclass(frozen=True)
class TetherConfig:
    path: Polyline
    taut: bool = False

    @property
    def anchor(self):
        return self.path.start

    @property
    def robot(self):
        return self.path.end


@dataclass(frozen=True)
class Scenario:
    id: str
    dimension: str  # "2D" | "3D-projected"
    environment: Environment
    robots: tuple  # ((robot_id, TetherConfig), ...)
    focus: str
    epsilon: float | None = None
    params: DefinitionParams = field(default_factory=DefinitionParams)

    @property
    def focus_tether(self):
        for rid, cfg in self.robots:
            if rid == self.focus:
                return cfg
        raise ScenarioError("focus-missing", f"no robot named {self.focus!r}")

    @property
    def others(self):
        return tuple((rid, cfg) for rid, cfg in self.robots if rid != self.focus)

    @property
    def is_multi_robot(self):
        return len(self.robots) > 1


@dataclass(frozen=True)
class EffectiveEnvironment:
    """Base workspace plus the inflated tethers of the non-focus robots."""

    base: Environment
    dimension: str
    inflated: tuple = ()  # ((owner_id, Polygon), ...)
    tether_chains: tuple = ()  # ((owner_id, Polyline), ...)
    epsilon: float | None = None

    @property
    def blocking_obstacles(self):
        """Obstacles a tether may not enter.  Projected scenarios keep only
        the static set; crossings of projected tethers are legitimate."""
        if self.dimension == "3D-projected":
            return list(self.base.obstacles)
        return list(self.base.obstacles) + [poly for _, poly in self.inflated]

    @property
    def leash_obstacles(self):
        """Obstacles constraining a deformation leash: always the full set."""
        return list(self.base.obstacles) + [poly for _, poly in self.inflated]

    def blocking_rings(self):
        return geometry.pack_obstacles(self.blocking_obstacles)

    def leash_rings(self):
        return geometry.pack_obstacles(self.leash_obstacles)


def _polyline_min_distance(a, b):
    best = np.inf
    va, vb = a.vertices, b.vertices
    for i in range(len(va) - 1):
        for j in range(len(vb) - 1):
            hit = geometry.segment_intersection((va[i], va[i + 1]), (vb[j], vb[j + 1]))
            if hit is not None:
                return 0.0
            best = min(best, homotopy._segment_gap(va[i], va[i + 1], vb[j], vb[j + 1]))
    return best


def effective_environment(scenario):
    """Inflate the non-focus tethers into obstacles.

    Uses the scenario's explicit radius when given, otherwise walks the
    decreasing ladder until the inflations stay clear of the focus tether.
    """
    others = scenario.others
    if not others:
        return EffectiveEnvironment(base=scenario.environment, dimension=scenario.dimension)
    chains = tuple((rid, cfg.path) for rid, cfg in others)
    diag = scenario.environment.diagonal
    if scenario.epsilon is not None:
        ladder = [float(scenario.epsilon)]
    else:
        ladder = [f * diag for f in EPSILON_LADDER]
    focus_path = scenario.focus_tether.path
    projected = scenario.dimension == "3D-projected"
    for eps in ladder:
        if not projected:
            gap = min(_polyline_min_distance(focus_path, path) for _, path in chains)
            if gap <= eps * 1.0000001:
                continue
        inflated = tuple((rid, geometry.inflate_polyline(path, eps)) for rid, path in chains)
        return EffectiveEnvironment(
            base=scenario.environment,
            dimension=scenario.dimension,
            inflated=inflated,
            tether_chains=chains,
            epsilon=eps,
        )
    raise ScenarioError("epsilon-exhausted", "no inflation radius keeps clear of the focus tether")


def _component_ray_items(polygons):
    """One ray anchor per connected component of the obstacle union.

    Inflated tethers may overlap static obstacles or each other; homotopy
    classes only see the merged component, so overlapping polygons share a
    letter.  Interior pockets of a merged ring are dropped.
    """
    if not polygons:
        return []
    shp = shapely.unary_union(
        [shapely.geometry.Polygon(p.vertices) for p in polygons]
    )
    geoms = [shp] if shp.geom_type == "Polygon" else list(shp.geoms)
    comps = [geometry.Polygon.from_trusted(np.asarray(g.exterior.coords)[:-1]) for g in geoms]
    comps.sort(key=lambda p: (p.bounds()[0][0], p.bounds()[0][1]))
    return [(f"z{k + 1}", comp) for k, comp in enumerate(comps)]


def representative_curves(eff, v=(0.0, 1.0)):
    """Curve set for crossing words on an effective environment.

    Obstacle-union components carry ray pairs; in projected scenarios the
    other tethers additionally become segment curves (their projected
    crossings are observable), while planar chains sit inside their own
    inflation and can never be crossed by a valid path.
    """
    if eff.dimension == "3D-projected":
        ray_items = _component_ray_items(eff.base.obstacles)
        chains = [(f"r{rid}", path) for rid, path in eff.tether_chains]
    else:
        ray_items = _component_ray_items(eff.blocking_obstacles)
        chains = []
    return homotopy.build_representative_curves((eff.base.lo, eff.base.hi), ray_items, chains, v=v)


def leash_curves(eff, v=(0.0, 1.0)):
    """Curve set for leash classes: every leash obstacle component gets rays."""
    ray_items = _component_ray_items(eff.leash_obstacles)
    return homotopy.build_representative_curves((eff.base.lo, eff.base.hi), ray_items, (), v=v)


# ---------------------------------------------------------------------------
# scenario JSON
# ---------------------------------------------------------------------------


def _parse_delta(value):
    if value is None or value == "inf":
        return math.inf
    return float(value)


def _params_from_json(obj):
    obj = obj or {}
    return DefinitionParams(
        d_max=float(obj.get("d_max", 2.0)),
        delta=_parse_delta(obj.get("delta", "inf")),
        beta_mode=obj.get("beta_mode", "off"),
        safe_base=int(obj.get("safe_base", 7)),
        samples_per_unit=int(obj.get("samples_per_unit", 20)),
        relaxed_base=int(obj.get("relaxed_base", 9)),
    )


def load_scenario(data, check_taut=True):
    """Parse and validate a scenario from JSON bytes, text, or a dict."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if isinstance(data, str):
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ScenarioError("parse-error", str(exc)) from exc
    else:
        raw = data
    if raw.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ScenarioError("parse-error", f"unsupported schema {raw.get('schema')!r}")
    try:
        dimension = raw.get("dimension", "2D")
        if dimension not in ("2D", "3D-projected"):
            raise ScenarioError("parse-error", f"unknown dimension {dimension!r}")
        bounds = raw["bounds"]
        obstacles = []
        for k, ring in enumerate(raw.get("obstacles", [])):
            try:
                obstacles.append(Polygon(ring))
            except GeometryError as exc:
                raise ScenarioError("bad-obstacle", f"obstacle {k}: {exc}") from exc
        env = Environment(bounds["min"], bounds["max"], obstacles)
        robots = []
        for spec in raw["robots"]:
            rid = str(spec["id"])
            try:
                path = Polyline(spec["tether"])
            except GeometryError as exc:
                raise ScenarioError("bad-tether", f"robot {rid}: {exc}") from exc
            anchor = np.asarray(spec["anchor"], dtype=np.float64)
            if np.linalg.norm(anchor - path.start) > 1e-7:
                raise ScenarioError(
                    "endpoints-mismatch", f"robot {rid}: anchor does not match the tether start"
                )
            robots.append((rid, TetherConfig(path=path, taut=bool(spec.get("taut", False)))))
        focus = str(raw["focus"])
        if focus not in {rid for rid, _ in robots}:
            raise ScenarioError("focus-missing", f"focus robot {focus!r} not present")
        eps = raw.get("epsilon")
        scenario = Scenario(
            id=str(raw.get("id", "scenario")),
            dimension=dimension,
            environment=env,
            robots=tuple(robots),
            focus=focus,
            epsilon=None if eps is None else float(eps),
            params=_params_from_json(raw.get("params")),
        )
    except KeyError as exc:
        raise ScenarioError("parse-error", f"missing field {exc}") from exc
    _validate_scenario(scenario, check_taut=check_taut)
    return scenario


def _validate_scenario(scenario, check_taut=True):
    env = scenario.environment
    for rid, cfg in scenario.robots:
        for p in cfg.path.vertices:
            if np.any(p < env.lo - TOL) or np.any(p > env.hi + TOL):
                raise ScenarioError("tether-outside-bounds", f"robot {rid} leaves the workspace")
        if not geometry.polyline_clear(cfg.path, env.obstacles, rings=env.rings):
            raise ScenarioError("path-enters-obstacle", f"tether of robot {rid} crosses an obstacle")
    if scenario.dimension != "3D-projected":
        robots = scenario.robots
        for i in range(len(robots)):
            for j in range(i + 1, len(robots)):
                if _polyline_min_distance(robots[i][1].path, robots[j][1].path) <= 0.0:
                    raise ScenarioError(
                        "tethers-intersect",
                        f"tethers of robots {robots[i][0]} and {robots[j][0]} touch",
                    )
        if check_taut and any(cfg.taut for _, cfg in scenario.robots):
            _verify_taut_flags(scenario)


def _verify_taut_flags(scenario):
    for rid, cfg in scenario.robots:
        if not cfg.taut:
            continue
        # tautness is judged from this robot's own perspective, with the
        # other tethers inflated into obstacles
        eff = effective_environment(replace(scenario, focus=rid))
        curves = representative_curves(eff)
        obstacles = eff.blocking_obstacles
        rings = eff.blocking_rings()
        taut = homotopy.taut_representative(cfg.path, obstacles, curves, rings=rings)
        if cfg.path.length > (1.0 + TAUT_REL_TOL) * max(taut.length, TOL):
            raise ScenarioError(
                "taut-flag-invalid",
                f"robot {rid} declared taut but is {cfg.path.length:.9g} long versus "
                f"{taut.length:.9g} when pulled tight",
            )


def scenario_to_dict(scenario):
    return {
        "schema": SCHEMA_VERSION,
        "id": scenario.id,
        "dimension": scenario.dimension,
        "bounds": {
            "min": [float(scenario.environment.lo[0]), float(scenario.environment.lo[1])],
            "max": [float(scenario.environment.hi[0]), float(scenario.environment.hi[1])],
        },
        "obstacles": [
            [[float(x), float(y)] for x, y in obs.vertices] for obs in scenario.environment.obstacles
        ],
        "robots": [
            {
                "id": rid,
                "anchor": [float(cfg.anchor[0]), float(cfg.anchor[1])],
                "tether": [[float(x), float(y)] for x, y in cfg.path.vertices],
                "taut": bool(cfg.taut),
            }
            for rid, cfg in scenario.robots
        ],
        "focus": scenario.focus,
        "epsilon": scenario.epsilon,
        "params": {
            "d_max": scenario.params.d_max,
            "delta": "inf" if math.isinf(scenario.params.delta) else scenario.params.delta,
            "beta_mode": scenario.params.beta_mode,
            "safe_base": scenario.params.safe_base,
            "samples_per_unit": scenario.params.samples_per_unit,
            "relaxed_base": scenario.params.relaxed_base,
        },
    }


def render_scenario(scenario):
    """Canonical JSON bytes; load_scenario(render_scenario(s)) round-trips."""
    return (json.dumps(scenario_to_dict(scenario), indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# 3D reduction
# ---------------------------------------------------------------------------


def _projection_basis(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n <= TOL:
        raise ScenarioError("bad-projection", "zero projection direction")
    v = v / n
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(v)))] = 1.0
    e1 = np.cross(v, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return e1, e2


def _segment_distance_3d(a0, a1, b0, b1):
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a <= TOL and e <= TOL:
        return float(np.linalg.norm(r))
    if a <= TOL:
        t = min(max(f / e, 0.0), 1.0)
        return float(np.linalg.norm(a0 - (b0 + t * d2)))
    c = float(d1 @ r)
    if e <= TOL:
        s = min(max(-c / a, 0.0), 1.0)
        return float(np.linalg.norm(a0 + s * d1 - b0))
    b = float(d1 @ d2)
    denom = a * e - b * b
    s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > TOL else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(max(-c / a, 0.0), 1.0)
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / a, 0.0), 1.0)
    return float(np.linalg.norm((a0 + s * d1) - (b0 + t * d2)))


def _polyline_distance_3d(pa, pb):
    best = np.inf
    for i in range(len(pa) - 1):
        for j in range(len(pb) - 1):
            best = min(best, _segment_distance_3d(pa[i], pa[i + 1], pb[j], pb[j + 1]))
    return best


def project_scenario_3d(
    scenario_id,
    robots_3d,
    v,
    focus,
    bounds=None,
    obstacles=None,
    epsilon=None,
    params=None,
):
    """Project 3D tethers along a shared direction into a planar scenario.

    robots_3d: list of (robot_id, (n,3) vertex array, taut flag).  Static
    obstacles, when given, are already expressed in projection coordinates.
    """
    e1, e2 = _projection_basis(v)
    tethers_3d = {rid: np.asarray(verts, dtype=np.float64) for rid, verts, _ in robots_3d}
    ids = list(tethers_3d)
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if _polyline_distance_3d(tethers_3d[ids[i]], tethers_3d[ids[j]]) <= TOL:
                raise ScenarioError(
                    "tethers-intersect", f"3D tethers of {ids[i]} and {ids[j]} touch"
                )
    robots = []
    all_pts = []
    for rid, verts, taut in robots_3d:
        verts = np.asarray(verts, dtype=np.float64)
        flat = np.stack([verts @ e1, verts @ e2], axis=1)
        keep = [flat[0]]
        for q in flat[1:]:
            if np.linalg.norm(q - keep[-1]) > 1e-9:
                keep.append(q)
        if len(keep) < 2:
            raise ScenarioError(
                "projection-degenerate", f"tether of robot {rid} collapses to a point"
            )
        path = Polyline(np.array(keep))
        robots.append((str(rid), TetherConfig(path=path, taut=bool(taut))))
        all_pts.append(path.vertices)
    pts = np.concatenate(all_pts)
    if obstacles:
        pts = np.concatenate([pts] + [np.asarray(o, dtype=np.float64) for o in obstacles])
    if bounds is None:
        lo = pts.min(axis=0) - 1.0
        hi = pts.max(axis=0) + 1.0
    else:
        lo, hi = np.asarray(bounds[0], float), np.asarray(bounds[1], float)
    env = Environment(lo, hi, [Polygon(o) for o in (obstacles or [])])
    scenario = Scenario(
        id=str(scenario_id),
        dimension="3D-projected",
        environment=env,
        robots=tuple(robots),
        focus=str(focus),
        epsilon=epsilon,
        params=params or DefinitionParams(),
    )
    _validate_scenario(scenario, check_taut=False)
    return scenario


def single_robot_scenario(scenario_id, env, path, taut=False, params=None, closed_ok=True):
    """Convenience constructor used by tests and the generator."""
    scenario = Scenario(
        id=scenario_id,
        dimension="2D",
        environment=env,
        robots=(("r1", TetherConfig(path=path, taut=taut)),),
        focus="r1",
        params=params or DefinitionParams(),
    )
    _validate_scenario(scenario, check_taut=False)
    return scenario
