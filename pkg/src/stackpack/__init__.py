"""Constructive 3D irregular-shape bin packing with static stability and
top-down gripper feasibility, plus an independent plan validator."""

from .containers import Container
from .geometry import Aabb, RigidTransform, TriangleMesh
from .heightmap import HeightMap, container_heightmap, lowest_z, raycast_heightmaps, update_heightmap
from .heuristics import PlacementCandidate, rank_candidates, score_dblf, score_hm, score_mta
from .manipulation import GraspCandidate, GripperModel, grasp_candidates, is_manip_feasible
from .orientation import StableOrientation, planar_stable_orientations
from .planner import (
    PackingPlan,
    PlanStep,
    SearchConfig,
    grid_search_3d,
    pack_all,
    pack_one_item,
    sequence_items,
)
from .stability import BodyState, Contact, cluster_contacts, detect_contacts, is_stable
from .validator import ValidationReport, validate_plan

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "BodyState",
    "Contact",
    "Container",
    "GraspCandidate",
    "GripperModel",
    "HeightMap",
    "PackingPlan",
    "PlacementCandidate",
    "PlanStep",
    "RigidTransform",
    "SearchConfig",
    "StableOrientation",
    "TriangleMesh",
    "ValidationReport",
    "cluster_contacts",
    "container_heightmap",
    "detect_contacts",
    "grasp_candidates",
    "grid_search_3d",
    "is_manip_feasible",
    "is_stable",
    "lowest_z",
    "pack_all",
    "pack_one_item",
    "planar_stable_orientations",
    "rank_candidates",
    "raycast_heightmaps",
    "score_dblf",
    "score_hm",
    "score_mta",
    "sequence_items",
    "update_heightmap",
    "validate_plan",
]
