import functools
import time
from typing import Callable


def timed[**P, R](func: Callable[P, R]) -> Callable[P, tuple[R, float]]:
    """
    Decorator that will time a function. The wrapped function returns (result, wall milliseconds).
    """

    @functools.wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> tuple[R, float]:
        start = time.perf_counter()
        result = func(*args, **kwargs)
        return result, (time.perf_counter() - start) * 1000.0

    return wrapper
