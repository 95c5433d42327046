"""Method dispatch for single solves and a concurrent runner for batches of model files."""

import asyncio
import time
from dataclasses import dataclass, field
from typing import List, Optional

from .andor_search import BoundViolation, SolveStats, plan_search_order, search
from .config import DEFAULT_JOBS, DEFAULT_METHOD, JOINTREE_MAX_MEMORY_MB, METHODS
from .influence_diagram import apply_no_forgetting, ensure_valid, partial_order
from .log import get_logger
from .model_io import load_model
from .policy import PolicyTree
from .propagation import JoinTreeEngine
from .strong_jointree import build_strong_join_tree
from .upper_bound import SisResult, build_upper_bound_id

logger = get_logger()


@dataclass
class SolveReport:
    method: str
    meu: float
    policy: Optional[PolicyTree]
    stats: SolveStats
    sis: List[SisResult] = field(default_factory=list)
    violations: List[BoundViolation] = field(default_factory=list)
    source: Optional[str] = None

    def stats_line(self):
        """Tab-separated method, time_ms, policy, #bounds, #zeros."""
        return "\t".join(
            [
                self.method,
                f"{self.stats.elapsed_ms:.1f}",
                str(self.stats.policy),
                str(self.stats.bounds),
                str(self.stats.zeros),
            ]
        )


STATS_HEADER = "method\ttime_ms\tpolicy\t#bounds\t#zeros"


def solve_diagram(
    diagram, method=DEFAULT_METHOD, max_memory_mb=JOINTREE_MAX_MEMORY_MB, verify_bounds=False
):
    """Solve one diagram with the join tree, exhaustive search or branch and bound."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    started = time.perf_counter()
    ensure_valid(diagram)
    diagram = apply_no_forgetting(diagram)
    po = partial_order(diagram)

    if method == "jointree":
        tree = build_strong_join_tree(diagram, po, max_memory_mb)
        meu = JoinTreeEngine(tree).value()
        stats = SolveStats(elapsed_ms=(time.perf_counter() - started) * 1000.0)
        logger.info(f"Join tree MEU {meu:.9g}")
        return SolveReport(method, meu, None, stats)

    upper, sis = build_upper_bound_id(diagram)
    tree = build_strong_join_tree(upper, partial_order(upper), max_memory_mb)
    engine = JoinTreeEngine(tree)
    plan = plan_search_order(diagram, tree, po)
    result = search(engine, plan, method, verify_bounds)
    result.stats.elapsed_ms = (time.perf_counter() - started) * 1000.0
    return SolveReport(method, result.meu, result.policy, result.stats, sis, result.violations)


async def _solve_file(path, method, max_memory_mb, semaphore):
    logger.info(f"Queued model: {path}")
    async with semaphore:
        logger.info(f"Solving model: {path}")
        try:
            diagram = await asyncio.to_thread(load_model, path)
            report = await asyncio.to_thread(solve_diagram, diagram, method, max_memory_mb)
            report.source = path
            return report
        except Exception as e:
            logger.error(f"Error solving {path}: {str(e)}")
            return e


async def solve_files(
    paths, method=DEFAULT_METHOD, jobs=DEFAULT_JOBS, max_memory_mb=JOINTREE_MAX_MEMORY_MB
):
    """Solve independent model files, at most ``jobs`` at a time, in input order."""
    semaphore = asyncio.Semaphore(max(1, jobs))
    tasks = [_solve_file(path, method, max_memory_mb, semaphore) for path in paths]
    return await asyncio.gather(*tasks)
