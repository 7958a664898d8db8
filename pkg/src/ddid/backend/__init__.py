from .engines import CbcEngine, EngineNotFoundError, HighsEngine, get_engine, solve
from .loop import CutLoopLimitError, solve_with_separation
from .lpformat import emit_model_file, parse_model_file, parse_solution_file
from .model import BINARY, CONTINUOUS, MilpModel, MilpSolution, ModelError, SolveParams

__all__ = [
    "BINARY", "CONTINUOUS", "CbcEngine", "CutLoopLimitError", "EngineNotFoundError",
    "HighsEngine", "MilpModel", "MilpSolution", "ModelError", "SolveParams",
    "emit_model_file", "get_engine", "parse_model_file", "parse_solution_file", "solve",
    "solve_with_separation",
]
