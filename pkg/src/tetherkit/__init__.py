"""Entanglement-state analysis for tethered robots."""

from .definitions import (
    DEFINITION_IDS,
    ENTANGLED,
    NOT_APPLICABLE,
    NOT_ENTANGLED,
    ScenarioContext,
    Verdict,
    evaluate,
    evaluate_all,
)
from .environment import (
    DefinitionParams,
    EffectiveEnvironment,
    Environment,
    Scenario,
    ScenarioError,
    TetherConfig,
    effective_environment,
    free_space_connected,
    load_scenario,
    project_scenario_3d,
    render_scenario,
    representative_curves,
)
from .geometry import (
    TOL,
    GeometryError,
    Polygon,
    Polyline,
    convex_hull,
    inflate_polyline,
    orient,
    point_in_polygon,
    polygon_interiors_intersect,
    segment_clear,
    segment_intersection,
    self_intersections,
)
from .homotopy import (
    ClassSearchOverflow,
    HomotopyError,
    Letter,
    RepresentativeCurves,
    Word,
    build_representative_curves,
    homotopic_frechet_upper,
    loop_null_homotopic,
    path_homotopic,
    reduce_word,
    relatively_homotopic,
    shortest_path,
    signature,
    taut_representative,
)
from .relations import GenParams, ImplicationReport, random_scenario, run_matrix
from .workspace_map import (
    NEMap,
    check_inclusion_chain,
    map_for_definition,
    map_full_free,
    map_safe_reach,
    map_visibility,
)

__version__ = "0.1.0"
