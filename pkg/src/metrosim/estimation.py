"""One-dimensional minimization over a bounded interval.

Used to locate optimal interrogation times numerically, independently of the
closed forms in :py:mod:`metrosim.metrology`."""

import math
from typing import Callable, NamedTuple

import numpy
from scipy.optimize import minimize_scalar

from .errors import DomainError, OptimizationError, check_option


class SearchResult(NamedTuple):
    x: float
    value: float
    evaluations: int


class IntervalSearch:
    """Minimizes a unimodal function on a closed interval. Ternary, dichotomous,
    Fibonacci and golden-section searches are implemented here; ``"bounded"`` and
    ``"brent"`` delegate to :py:func:`scipy.optimize.minimize_scalar`.

    Functions that are only unimodal near their minimum can first be bracketed with
    :py:meth:`scan`, a logarithmically spaced grid scan.

    :param precision: number of decimal points of precision, defaults to 12
    :param method: one of `'ternary'`, `'dichotomous'`, `'fibonacci'`, `'golden'`,
                   `'bounded'` and `'brent'`, defaults to golden
    :param verbose: whether to print every iteration
    """

    methods = ["ternary", "dichotomous", "fibonacci", "golden", "bounded", "brent"]
    golden_ratio = (1 + 5**0.5) / 2

    def __init__(self, precision: int = 12, method: str = "golden", verbose: bool = False):
        if precision < 1:
            raise DomainError(
                "precision must be an integer larger than 1, {0} was passed".format(precision)
            )
        self._epsilon = float("1e-" + str(precision))
        self._method = check_option("method", method, IntervalSearch.methods)
        self._verbose = verbose
        self._evaluations = 0

    def __str__(self):
        return "Interval Search ({0})".format(self._method)

    @property
    def method(self) -> str:
        return self._method

    @property
    def epsilon(self) -> float:
        return self._epsilon

    def _evaluate(self, func: Callable[[float], float], x: float) -> float:
        self._evaluations += 1
        return float(func(x))

    def minimize(self, func: Callable[[float], float], lower: float, upper: float) -> SearchResult:
        """Returns the point of ``[lower, upper]`` minimizing ``func``.

        :param func: the function to minimize
        :param lower: lower end of the interval
        :param upper: upper end of the interval
        :returns: a :py:class:`SearchResult` with the minimizer, the minimum and the
                  number of function evaluations
        """
        if not lower < upper:
            raise DomainError("empty search interval [{0}, {1}]".format(lower, upper))

        self._evaluations = 0
        # relative tolerance, so that tiny intervals (short interrogation times) keep their digits
        tol = self._epsilon * max(abs(lower), abs(upper))

        if self._method in ["ternary", "dichotomous"]:
            x = self._solve_ternary_dichotomous(func, lower, upper, tol)
        elif self._method == "fibonacci":
            x = self._solve_fibonacci(func, lower, upper, tol)
        elif self._method == "golden":
            x = self._solve_golden_section(func, lower, upper, tol)
        else:
            res = minimize_scalar(
                func,
                bracket=(lower, upper) if self._method == "brent" else None,
                bounds=(lower, upper) if self._method == "bounded" else None,
                method=self._method,
                options={"xatol": tol} if self._method == "bounded" else None,
                tol=self._epsilon if self._method == "brent" else None,
            )
            self._evaluations = res.nfev
            x = float(numpy.clip(res.x, lower, upper))

        value = self._evaluate(func, x)
        if self._verbose:
            print("{0}: x = {1}, f(x) = {2}, {3} evaluations".format(self, x, value, self._evaluations))
        return SearchResult(x, value, self._evaluations)

    def _solve_ternary_dichotomous(self, func, a: float, b: float, tol: float) -> float:
        # points closer than sqrt(eps) of the interval scale tie on functions flat near their minimum
        offset = max(tol / 4, math.sqrt(numpy.finfo(float).eps) * max(abs(a), abs(b)))
        if self._method == "dichotomous":
            tol = max(tol, 4 * offset)
        error = float("inf")
        candidate = (a + b) / 2
        while error >= tol:
            if self._method == "ternary":
                c = (b + 2 * a) / 3
                d = (2 * b + a) / 3
            else:
                m = (a + b) / 2
                c = m - offset
                d = m + offset

            left, right = self._evaluate(func, c), self._evaluate(func, d)
            if left <= right:
                b = d
            else:
                a = c

            candidate = (b + a) / 2
            error = abs(b - a)
        return candidate

    def _solve_fibonacci(self, func, a: float, b: float, tol: float) -> float:
        fib = [1, 1]
        n = 1
        while (b - a) / fib[-1] > tol:
            n += 1
            fib.append(fib[-1] + fib[-2])
        if n < 3:
            return (a + b) / 2

        c = a + (fib[n - 2] / fib[n]) * (b - a)
        d = a + (fib[n - 1] / fib[n]) * (b - a)
        left, right = self._evaluate(func, c), self._evaluate(func, d)

        while n != 2:
            n -= 1
            if left <= right:
                b, d = d, c
                c = a + (fib[n - 2] / fib[n]) * (b - a)
                right = left
                left = self._evaluate(func, c)
            else:
                a, c = c, d
                d = a + (fib[n - 1] / fib[n]) * (b - a)
                left = right
                right = self._evaluate(func, d)
        return (b + a) / 2

    def _solve_golden_section(self, func, a: float, b: float, tol: float) -> float:
        ratio = IntervalSearch.golden_ratio
        c = b + (a - b) / ratio
        d = a + (b - a) / ratio
        left, right = self._evaluate(func, c), self._evaluate(func, d)

        while abs(b - a) > tol:
            if left <= right:
                b, d = d, c
                c = b + (a - b) / ratio
                right = left
                left = self._evaluate(func, c)
            else:
                a, c = c, d
                d = a + (b - a) / ratio
                left = right
                right = self._evaluate(func, d)
        return (b + a) / 2

    def scan(
        self,
        func: Callable[[float], float],
        upper: float,
        points: int = 64,
        lower_ratio: float = 1e-6,
    ) -> SearchResult:
        """Brackets the minimum of ``func`` on :math:`(0, \\text{upper}]` with a logarithmically
        spaced scan and refines it inside the bracketing cell.

        A minimum at the right end is accepted and returned as ``upper``; a minimum at the
        left end means the function keeps decreasing towards zero, which is an error.

        :param func: the function to minimize
        :param upper: right end of the interval, included
        :param points: number of scan points
        :param lower_ratio: first scan point as a fraction of ``upper``
        """
        if upper <= 0:
            raise DomainError("the upper bound must be positive, {0} was passed".format(upper))

        grid = numpy.geomspace(upper * lower_ratio, upper, points)
        with numpy.errstate(all="ignore"):
            values = numpy.array([float(func(x)) for x in grid])
        if numpy.any(numpy.isnan(values)):
            raise OptimizationError(
                "the objective is undefined on the scan grid, first failure at x = {0}".format(
                    grid[numpy.argmax(numpy.isnan(values))]
                )
            )
        # overflow away from the minimum is tolerated
        if not numpy.isfinite(values.min()):
            raise OptimizationError("the objective is infinite on the whole scan grid")

        best = int(numpy.argmin(values))
        if best == 0:
            raise OptimizationError(
                "the objective keeps decreasing towards x = 0 (f({0}) = {1}), "
                "no minimum in (0, {2}]".format(grid[0], values[0], upper)
            )
        if best == points - 1:
            refined = self.minimize(func, grid[-2], upper)
            if refined.value < values[-1]:
                return SearchResult(refined.x, refined.value, refined.evaluations + points)
            return SearchResult(float(upper), float(values[-1]), points)

        refined = self.minimize(func, grid[best - 1], grid[best + 1])
        return SearchResult(refined.x, refined.value, refined.evaluations + points)
