"""The modelling minilanguage: parsing, elaboration, execution."""

from .syntax import (
    Const,
    Func,
    Pair,
    Pre,
    Program,
    SEq,
    SInit,
    SObserve,
    SOn,
    SPar,
    SPrior,
    VarRef,
    parse,
    pre_vars,
    print_expr,
    print_program,
    print_stmt,
    statements,
)
from .elaborate import (
    elaborate_dynamic,
    elaborate_graph,
    program_factor_graph,
    elaborate_static,
    eval_expr,
    pre_name,
    program_guards,
)
from .run import ProgramRun, active_observes, run_program

__all__ = [
    "Const",
    "Func",
    "Pair",
    "Pre",
    "Program",
    "pre_vars",
    "ProgramRun",
    "SEq",
    "SInit",
    "SObserve",
    "SOn",
    "SPar",
    "SPrior",
    "VarRef",
    "active_observes",
    "elaborate_dynamic",
    "elaborate_graph",
    "program_factor_graph",
    "elaborate_static",
    "eval_expr",
    "parse",
    "pre_name",
    "print_expr",
    "print_program",
    "print_stmt",
    "program_guards",
    "run_program",
    "statements",
]
