from .expr import (
    And,
    Comparison,
    Or,
    RuleExpr,
    SustainedFor,
    TimeOutside,
    comparisons,
    depth,
    render,
)
from .loop import (
    ProposalStatus,
    RefineContext,
    RefinementProposal,
    refine_run,
    run_feedback_loop,
    select_cluster,
)
from .parser import parse_rule
from .patterns import NoiseCluster, PatternKind, RefineConfig, detect_patterns
from .policies import (
    Feedback,
    Policy,
    ProposalDraft,
    firing_overlap,
    propose,
    select_policy,
)
from .registry import RuleRegistry
from .rulefiles import load_rule_file, save_rule_file
from .simulate import ReplayHorizon, SimulationResult, simulate

__all__ = [
    "And",
    "Comparison",
    "Feedback",
    "NoiseCluster",
    "Or",
    "PatternKind",
    "Policy",
    "ProposalDraft",
    "ProposalStatus",
    "RefineConfig",
    "RefineContext",
    "RefinementProposal",
    "ReplayHorizon",
    "RuleExpr",
    "RuleRegistry",
    "SimulationResult",
    "SustainedFor",
    "TimeOutside",
    "comparisons",
    "depth",
    "detect_patterns",
    "firing_overlap",
    "load_rule_file",
    "parse_rule",
    "propose",
    "refine_run",
    "render",
    "run_feedback_loop",
    "save_rule_file",
    "select_cluster",
    "select_policy",
    "simulate",
]
