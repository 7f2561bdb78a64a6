from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, TypeVar

from src.config import settings
from src.errors import CampaignError, ProbeError
from src.logging.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(seed: int, index: int) -> int:
    """Seed of census item ``index``: one splitmix64 output on seed + (index + 1) * gamma."""
    if seed < 0 or index < 0:
        raise CampaignError("seed and item index must be non-negative")
    z = (seed + (index + 1) * _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class CensusExecutor:
    """Runs census items on a bounded thread pool.

    Results come back in submission order whatever the completion order, so
    reductions over a census are deterministic.
    """

    def __init__(self, workers: Optional[int] = None):
        self.workers = max(1, workers or settings.workers)
        logger.debug("census executor ready", workers=self.workers)

    def map(self, fn: Callable[[T], R], items: Iterable[T], label: str = "census") -> List[R]:
        items = list(items)
        logger.info("census started", label=label, items=len(items), workers=self.workers)
        if self.workers == 1 or len(items) <= 1:
            results = [self._run_one(fn, item, i, label) for i, item in enumerate(items)]
        else:
            with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="census") as pool:
                futures = [pool.submit(self._run_one, fn, item, i, label) for i, item in enumerate(items)]
                results = [f.result() for f in futures]
        logger.info("census finished", label=label, items=len(results))
        return results

    @staticmethod
    def _run_one(fn: Callable[[Any], Any], item: Any, index: int, label: str) -> Any:
        try:
            return fn(item)
        except ProbeError as e:
            logger.error("census item failed", label=label, index=index, error=str(e))
            raise
        except Exception as e:
            logger.exception("unexpected failure in census item", label=label, index=index)
            raise CampaignError(f"{label} item {index} failed: {type(e).__name__}: {e}") from e


# Global instance
census_executor = CensusExecutor()


def get_census_executor() -> CensusExecutor:
    """Accessor for the process-wide census executor."""
    return census_executor
