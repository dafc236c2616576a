"""ratlog: exact-arithmetic logic engine, verifier, and self-training harness
for declarative counting/probability solutions."""

from .engine import Budget, QueryResult, eval_arith, solve_goal, solve_query, unify
from .errors import ParseError, PrologError
from .operators import apply_operator, default_registry, load_manifest, prompt_block
from .parser import canonical_text, parse_program, parse_query
from .rewrites import rewrite_variants
from .terms import (
    Atom,
    Clause,
    Compound,
    ListTerm,
    Number,
    Program,
    Var,
    canonicalize,
    render,
)
from .corpus import (
    FoldPlan,
    ProblemRecord,
    compute_reference_answer,
    load_corpus,
    split_folds,
    validate_corpus,
)
from .verify import AccuracyReport, Verdict, VerdictKind, accuracy, verify_candidate
from .selftrain import (
    LocalRewriteGenerator,
    RemoteGenerator,
    SelfTrainConfig,
    is_new_solution,
    render_prompt,
    run_cross_validation,
    run_self_training,
)
from .graph import ComputationGraph, export_dot, extract_graph

__version__ = "0.1.0"

__all__ = [
    "Atom", "Budget", "Clause", "Compound", "ComputationGraph", "FoldPlan",
    "ListTerm", "LocalRewriteGenerator", "Number", "ParseError", "ProblemRecord",
    "Program", "PrologError", "QueryResult", "RemoteGenerator", "SelfTrainConfig",
    "Var", "Verdict", "VerdictKind", "AccuracyReport",
    "accuracy", "apply_operator", "canonical_text", "canonicalize",
    "compute_reference_answer", "default_registry", "eval_arith", "export_dot",
    "extract_graph", "is_new_solution", "load_corpus", "load_manifest",
    "parse_program", "parse_query", "prompt_block", "render", "render_prompt",
    "rewrite_variants", "run_cross_validation", "run_self_training",
    "solve_goal", "solve_query", "split_folds", "unify", "validate_corpus",
    "verify_candidate",
]
