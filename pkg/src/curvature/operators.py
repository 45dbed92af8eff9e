"""Instrumented Hessian-vector product operators."""

import threading
from typing import Callable

import numpy as np

from src.loss_family.base import LossFamily, WeightsLike
from src.numerics.arrays import Vector

HvpFn = Callable[[Vector], Vector]


class CountingOperator:
    """Wraps v -> H v and counts invocations."""

    def __init__(self, fn: HvpFn, n: int):
        self._fn = fn
        self.n = n
        self._calls = 0
        self._lock = threading.Lock()

    def __call__(self, v: Vector) -> Vector:
        with self._lock:
            self._calls += 1
        return np.asarray(self._fn(v), dtype=np.float64)

    @property
    def calls(self) -> int:
        return self._calls


def matrix_operator(matrix) -> CountingOperator:
    matrix = np.asarray(matrix, dtype=np.float64)
    return CountingOperator(lambda v: matrix @ v, matrix.shape[0])


def family_operator(family: LossFamily, k: int, w: WeightsLike) -> CountingOperator:
    """v -> H^(k)(w) v for a loss family."""
    point = family.point(w)
    return CountingOperator(lambda v: family.hvp(k, point, v), family.dimension)
