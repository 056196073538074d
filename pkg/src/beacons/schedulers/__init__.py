"""Co-scheduling policies."""

from .base import Scheduler
from .bes import BesScheduler
from .cfs import CfsScheduler
from .fifo import FifoScheduler
from .reactive import ReactiveScheduler

SCHEDULERS = {
    "bes": BesScheduler,
    "cfs": CfsScheduler,
    "fifo": FifoScheduler,
    "reactive": ReactiveScheduler,
}


def make_scheduler(name: str, **params) -> Scheduler:
    try:
        cls = SCHEDULERS[name]
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {sorted(SCHEDULERS)}") from None
    return cls(**params)


__all__ = ["Scheduler", "BesScheduler", "CfsScheduler", "FifoScheduler", "ReactiveScheduler",
           "SCHEDULERS", "make_scheduler"]
