"""Animation planning: deterministic rules and the conversational path."""

from .lmm import (
    MalformedGroups,
    NonPartition,
    extract_code_block,
    lmm_pipeline,
    parse_groups,
)
from .rules import (
    AnimationPlan,
    Effect,
    GroupPlan,
    LayerGroup,
    PlannerError,
    codegen,
    group_layers,
    plan,
)

__all__ = [
    "AnimationPlan",
    "Effect",
    "GroupPlan",
    "LayerGroup",
    "MalformedGroups",
    "NonPartition",
    "PlannerError",
    "codegen",
    "extract_code_block",
    "group_layers",
    "lmm_pipeline",
    "parse_groups",
    "plan",
]
