"""rrforest: multi-tree sampling-based motion planning.

The core planner grows two rooted trees plus adaptively spawned local trees,
allocating effort across them with a mortal multi-armed bandit and growing
local trees by sequentially-learned directional sampling. RRT*, bidirectional
RRT*, and Informed RRT* baselines share the same scene, forest, and stats
machinery.
"""

from .bandit import Arm, BanditConfig, pick_arm, prune_check, reward, update_prob
from .cspace import (
    ContractError,
    OccupancyGrid,
    PlanarArm,
    PointRobot,
    Scene,
    SpaceExhaustedError,
    SpaceSpec,
    batch_distance,
    distance,
    forward_kinematics,
    load_pgm,
    steer,
    write_pgm,
)
from .forest import Forest, KIND_LOCAL, KIND_ROOT_INIT, KIND_ROOT_TARGET, Tree
from .planner import (
    BiRRTStarPlanner,
    InformedRRTStarPlanner,
    PLANNERS,
    PlannerConfig,
    RRFStarPlanner,
    RRTStarPlanner,
    RunStats,
    Solution,
    StartGoalCollisionError,
    plan,
    plan_birrt,
    plan_informed,
    plan_rrt_star,
)
from .proposal import (
    DirectionalPrior,
    KernelParams,
    LocalSamplerState,
    ProposalState,
    kernel_eval,
    vmf_sample,
)
from .proposer import FailureDensityMap, ProposalCandidate, accept_candidate

__version__ = "0.1.0"

__all__ = [
    "Arm",
    "BanditConfig",
    "BiRRTStarPlanner",
    "ContractError",
    "DirectionalPrior",
    "FailureDensityMap",
    "Forest",
    "InformedRRTStarPlanner",
    "KernelParams",
    "KIND_LOCAL",
    "KIND_ROOT_INIT",
    "KIND_ROOT_TARGET",
    "LocalSamplerState",
    "OccupancyGrid",
    "PLANNERS",
    "PlanarArm",
    "PlannerConfig",
    "PointRobot",
    "ProposalCandidate",
    "ProposalState",
    "RRFStarPlanner",
    "RRTStarPlanner",
    "RunStats",
    "Scene",
    "Solution",
    "SpaceExhaustedError",
    "SpaceSpec",
    "StartGoalCollisionError",
    "Tree",
    "accept_candidate",
    "batch_distance",
    "distance",
    "forward_kinematics",
    "kernel_eval",
    "load_pgm",
    "pick_arm",
    "plan",
    "plan_birrt",
    "plan_informed",
    "plan_rrt_star",
    "prune_check",
    "reward",
    "steer",
    "update_prob",
    "vmf_sample",
    "write_pgm",
]
