import multiprocessing
import resource
from typing import Any, Callable

from .errors import VcgsError


def run_isolated(func: Callable[[], Any], *, timeout: int = 5, max_memory: int = 512 * 1024 * 1024) -> Any:
    """Run callable in a forked subprocess with an address-space limit.

    Toolkit errors raised by ``func`` are re-raised in the parent unchanged;
    anything else surfaces as ``RuntimeError``.
    """
    ctx = multiprocessing.get_context("fork")
    q = ctx.Queue()

    def target() -> None:
        try:
            if max_memory:
                resource.setrlimit(resource.RLIMIT_AS, (max_memory, max_memory))
            q.put((True, func()))
        except VcgsError as exc:  # pragma: no cover - forwarded to parent
            q.put((False, exc))
        except Exception as exc:  # pragma: no cover - forwarded to parent
            q.put((False, RuntimeError(str(exc))))

    p = ctx.Process(target=target)
    p.start()
    p.join(timeout)
    if p.is_alive():
        p.terminate()
        p.join()
        raise TimeoutError("Operation timed out")

    if not q.empty():
        ok, data = q.get()
        if ok:
            return data
        raise data
    raise RuntimeError("No result from subprocess")
