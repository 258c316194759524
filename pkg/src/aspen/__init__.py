"""Conflict-driven solver for ground normal logic programs, with pluggable
branching heuristics, two industrial configuration domains, and a wire
protocol for external heuristic processes."""

__version__ = "0.1.0"

from .ground import (
    FALSUM,
    GroundError,
    GroundProgram,
    Interpretation,
    ProgramBuilder,
    Rule,
    brute_force_answer_sets,
    encode_pigeonhole,
    is_answer_set,
    parse_program,
    parse_symbol,
    serialize_program,
)
from .engine import (
    CoherentWitness,
    EngineError,
    Incoherent,
    Limits,
    TimedOut,
    solve,
)
from .heuristics import (
    AddConstraint,
    Choose,
    DiagonalPigeonhole,
    Fallback,
    Heuristic,
    HeuristicProtocolError,
    SearchView,
    Unroll,
)
from .plugin import PluginHeuristic, PluginProtocolError, PluginSession
from .pup import (
    PupError,
    PupHeuristic,
    PupInstance,
    PupSolution,
    encode_e1,
    extract_pup,
    gen_pup,
    parse_pup,
    serialize_pup,
    verify_pup,
)
from .ccp import (
    CcpError,
    CcpHeuristic,
    CcpInstance,
    CcpSolution,
    encode_ccp,
    extract_ccp,
    gen_ccp_grid,
    parse_ccp,
    serialize_ccp,
    verify_ccp,
)

__all__ = [
    "FALSUM",
    "GroundError",
    "GroundProgram",
    "Interpretation",
    "ProgramBuilder",
    "Rule",
    "brute_force_answer_sets",
    "encode_pigeonhole",
    "is_answer_set",
    "parse_program",
    "parse_symbol",
    "serialize_program",
    "CoherentWitness",
    "EngineError",
    "Incoherent",
    "Limits",
    "TimedOut",
    "solve",
    "AddConstraint",
    "Choose",
    "DiagonalPigeonhole",
    "Fallback",
    "Heuristic",
    "HeuristicProtocolError",
    "SearchView",
    "Unroll",
    "PluginHeuristic",
    "PluginProtocolError",
    "PluginSession",
    "PupError",
    "PupHeuristic",
    "PupInstance",
    "PupSolution",
    "encode_e1",
    "extract_pup",
    "gen_pup",
    "parse_pup",
    "serialize_pup",
    "verify_pup",
    "CcpError",
    "CcpHeuristic",
    "CcpInstance",
    "CcpSolution",
    "encode_ccp",
    "extract_ccp",
    "gen_ccp_grid",
    "parse_ccp",
    "serialize_ccp",
    "verify_ccp",
    "__version__",
]
