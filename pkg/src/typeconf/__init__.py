"""Static detection of type confusion in pointer conversions over a JSON
mid-level IR: misalignment, inconsistent layout and mismatched scope."""

from .alias import AliasGraph, build_alias_graph, descendants, may_alias
from .detectors import (
    BugKind,
    Finding,
    abi_compatible,
    check_inconsistent_layout,
    check_misalignment,
    check_mismatched_scope,
    run_detectors,
)
from .ir import PackageIR, parse_package, resolve_aggregate, serialize, validate
from .propgraph import (
    ConversionPair,
    PropertyGraph,
    build_property_graph,
    callees_of,
    callers_of,
    collect_conversion_pairs,
    find_constructors,
)
from .scan import Config, ScanSummary, run_scan
from .report import render_report
from .semantics import (
    ArchWidth,
    CandidateTypeSet,
    LayoutClass,
    PatternClass,
    TraitMap,
    alignment_of,
    candidate_types,
    extract_external_type_hint,
    get_trait_bounds,
    layout_class,
    pattern_class,
    visibility_of,
)
from .verification import (
    AccessEvidence,
    BugReport,
    Suppression,
    access_in_function,
    accessible_to_caller,
    has_dev_check,
    interprocedural_refine,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "AccessEvidence",
    "AliasGraph",
    "ArchWidth",
    "BugKind",
    "BugReport",
    "CandidateTypeSet",
    "Config",
    "ConversionPair",
    "Finding",
    "LayoutClass",
    "PackageIR",
    "PatternClass",
    "PropertyGraph",
    "ScanSummary",
    "Suppression",
    "TraitMap",
    "abi_compatible",
    "access_in_function",
    "accessible_to_caller",
    "alignment_of",
    "build_alias_graph",
    "build_property_graph",
    "callees_of",
    "callers_of",
    "candidate_types",
    "check_inconsistent_layout",
    "check_misalignment",
    "check_mismatched_scope",
    "collect_conversion_pairs",
    "descendants",
    "extract_external_type_hint",
    "find_constructors",
    "get_trait_bounds",
    "has_dev_check",
    "interprocedural_refine",
    "layout_class",
    "may_alias",
    "parse_package",
    "pattern_class",
    "render_report",
    "resolve_aggregate",
    "run_detectors",
    "run_scan",
    "serialize",
    "validate",
    "verify",
    "visibility_of",
]
