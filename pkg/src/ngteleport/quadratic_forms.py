"""Exact manipulation of complex quadratic exponents.

A :class:`QuadraticExponent` represents

    exp(log_prefactor) * exp(const + lin . x + x . quad . x)

over a named tuple of variables.  Three capabilities drive everything else in
the package:

* closed-form Gaussian integration over any subset of (real) variables,
* linear variable substitution (symplectic evolution of characteristic
  functions),
* extraction of mixed partial derivatives at the origin, which turns
  generating-function exponents into photon-number moments.

Derivatives at zero are available through two independent algorithms: a
recursive polynomial-carry differentiation (:func:`derivative_at_zero`) and a
brute-force truncated Taylor expansion (:func:`derivative_at_zero_series`)
kept as a test oracle.  A third route, :func:`pairing_moment`, evaluates the
same quantity by a memoized pair-contraction recursion and broadcasts over
numpy arrays; it is the throughput path for parameter sweeps and quadrature
grids and is cross-checked against the other two in the test suite.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadraticExponent",
    "DivergenceError",
    "DerivativeCapError",
    "gaussian_integrate",
    "derivative_at_zero",
    "derivative_at_zero_series",
    "pairing_moment",
    "extract_moment",
    "DEFAULT_ORDER_CAP",
]

DEFAULT_ORDER_CAP = 16


class DivergenceError(ValueError):
    """Gaussian integral does not converge for the requested variables."""

    def __init__(self, variables, message=None):
        self.variables = tuple(variables)
        super().__init__(message or f"non-convergent Gaussian integral over {self.variables}")


class DerivativeCapError(ValueError):
    """Requested total derivative order exceeds the configured cap."""


@dataclass(frozen=True)
class QuadraticExponent:
    """Complex quadratic exponent over named variables.

    Attributes:
        variables: ordered variable names.
        quad: complex symmetric (k, k) coefficient matrix of ``x . quad . x``.
        lin: complex (k,) coefficients of ``lin . x``.
        const: complex additive constant in the exponent.
        log_prefactor: log of the accumulated scalar prefactor (kept as a log
            so chained Gaussian-integral factors cannot underflow).
    """

    variables: tuple[str, ...]
    quad: np.ndarray
    lin: np.ndarray
    const: complex = 0.0
    log_prefactor: complex = 0.0

    def __post_init__(self):
        variables = tuple(self.variables)
        k = len(variables)
        if len(set(variables)) != k:
            raise ValueError(f"duplicate variable names in {variables}")
        quad = np.asarray(self.quad, dtype=complex)
        lin = np.asarray(self.lin, dtype=complex)
        if quad.shape != (k, k):
            raise ValueError(f"quadratic block shape {quad.shape} does not match {k} variables")
        if lin.shape != (k,):
            raise ValueError(f"linear block shape {lin.shape} does not match {k} variables")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "quad", 0.5 * (quad + quad.T))
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "const", complex(self.const))
        object.__setattr__(self, "log_prefactor", complex(self.log_prefactor))

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value_log: complex = 0.0) -> "QuadraticExponent":
        return cls((), np.zeros((0, 0)), np.zeros(0), 0.0, value_log)

    @classmethod
    def from_terms(cls, variables, quad_terms=(), lin_terms=(), const=0.0) -> "QuadraticExponent":
        """Build from sparse term lists ``{(a, b): coeff}`` and ``{a: coeff}``.

        A quadratic term ``((a, b), c)`` contributes ``c * x_a * x_b`` to the
        exponent (so the stored symmetric matrix gets ``c/2`` off-diagonal).
        """
        variables = tuple(variables)
        idx = {v: i for i, v in enumerate(variables)}
        k = len(variables)
        quad = np.zeros((k, k), dtype=complex)
        lin = np.zeros(k, dtype=complex)
        for (a, b), coeff in dict(quad_terms).items():
            i, j = idx[a], idx[b]
            if i == j:
                quad[i, i] += coeff
            else:
                quad[i, j] += coeff / 2.0
                quad[j, i] += coeff / 2.0
        for a, coeff in dict(lin_terms).items():
            lin[idx[a]] += coeff
        return cls(variables, quad, lin, const)

    # -- basic accessors ----------------------------------------------------

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {self.variables}") from None

    def block(self, rows, cols) -> np.ndarray:
        """Sub-matrix of ``quad`` for the named row/column variables."""
        ri = [self.index(v) for v in rows]
        ci = [self.index(v) for v in cols]
        return self.quad[np.ix_(ri, ci)]

    def scaled(self, extra_log: complex) -> "QuadraticExponent":
        return QuadraticExponent(self.variables, self.quad, self.lin, self.const, self.log_prefactor + extra_log)

    # -- algebra ------------------------------------------------------------

    def __mul__(self, other: "QuadraticExponent") -> "QuadraticExponent":
        """Product of two exponentials; variable sets are merged by name."""
        variables = self.variables + tuple(v for v in other.variables if v not in self.variables)
        idx = {v: i for i, v in enumerate(variables)}
        k = len(variables)
        quad = np.zeros((k, k), dtype=complex)
        lin = np.zeros(k, dtype=complex)
        for form in (self, other):
            sel = [idx[v] for v in form.variables]
            quad[np.ix_(sel, sel)] += form.quad
            lin[sel] += form.lin
        return QuadraticExponent(
            variables, quad, lin, self.const + other.const, self.log_prefactor + other.log_prefactor
        )

    def evaluate(self, values: dict[str, complex]) -> complex:
        """Value of the full expression with every variable assigned."""
        x = np.array([values[v] for v in self.variables], dtype=complex)
        return cmath.exp(self.log_prefactor + self.const + self.lin @ x + x @ self.quad @ x)

    def substitute_values(self, assignments: dict[str, complex]) -> "QuadraticExponent":
        """Fix a subset of variables to numeric values."""
        fixed = [self.index(v) for v in assignments]
        vals = np.array([complex(assignments[v]) for v in assignments], dtype=complex)
        keep = [i for i in range(len(self.variables)) if i not in set(fixed)]
        const = self.const + self.lin[fixed] @ vals + vals @ self.quad[np.ix_(fixed, fixed)] @ vals
        lin = self.lin[keep] + 2.0 * self.quad[np.ix_(keep, fixed)] @ vals
        quad = self.quad[np.ix_(keep, keep)]
        return QuadraticExponent(tuple(self.variables[i] for i in keep), quad, lin, const, self.log_prefactor)

    def substitute_linear(self, old_vars, matrix, new_vars) -> "QuadraticExponent":
        """Replace ``old_vars`` by linear combinations of ``new_vars``.

        ``matrix`` has shape ``(len(old_vars), len(new_vars))`` and encodes
        ``old = matrix @ new``.  Variables not listed in ``old_vars`` are kept;
        names may be reused between the two lists (the usual case for
        characteristic-function evolution, where the phase variables map onto
        combinations of themselves).
        """
        old_vars = tuple(old_vars)
        new_vars = tuple(new_vars)
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (len(old_vars), len(new_vars)):
            raise ValueError(f"substitution matrix shape {matrix.shape} does not match ({len(old_vars)}, {len(new_vars)})")
        old_idx = {v: self.index(v) for v in old_vars}
        kept = tuple(v for v in self.variables if v not in old_idx)
        result_vars = kept + tuple(v for v in new_vars if v not in kept)
        col = {v: i for i, v in enumerate(result_vars)}
        transform = np.zeros((len(self.variables), len(result_vars)), dtype=complex)
        for i, v in enumerate(self.variables):
            if v in old_idx:
                row = old_vars.index(v)
                for jn, nv in enumerate(new_vars):
                    transform[i, col[nv]] += matrix[row, jn]
            else:
                transform[i, col[v]] = 1.0
        quad = transform.T @ self.quad @ transform
        lin = transform.T @ self.lin
        return QuadraticExponent(result_vars, quad, lin, self.const, self.log_prefactor)


# -- Gaussian integration ---------------------------------------------------


def _integrate_one(form: QuadraticExponent, var: str) -> QuadraticExponent:
    i = form.index(var)
    a = form.quad[i, i]
    q = -a
    if q.real <= 0.0:
        raise DivergenceError((var,), f"integral over {var!r} diverges: Re(-quad) = {q.real:.3e} <= 0")
    keep = [j for j in range(len(form.variables)) if j != i]
    cross = form.quad[i, keep]
    lin_i = form.lin[i]
    const = form.const + lin_i * lin_i / (4.0 * q)
    lin = form.lin[keep] + lin_i * cross / q
    quad = form.quad[np.ix_(keep, keep)] + np.outer(cross, cross) / q
    # principal branch; q has positive real part so log is single-valued here
    log_pref = form.log_prefactor + 0.5 * (math.log(math.pi) - cmath.log(q))
    return QuadraticExponent(tuple(form.variables[j] for j in keep), quad, lin, const, log_pref)


def gaussian_integrate(form: QuadraticExponent, variables, measure_log: complex = 0.0) -> QuadraticExponent:
    """Integrate ``form`` over the listed variables along the real line.

    Each variable is integrated in turn with
    ``int exp(-q x^2 + L x) dx = sqrt(pi / q) exp(L^2 / (4 q))``; convergence
    requires ``Re(q) > 0`` at every step, otherwise :class:`DivergenceError`
    names the offending variable.  ``measure_log`` is added to the prefactor
    (e.g. ``-2 log(2 pi)`` for a double phase-space measure).
    """
    result = form
    for v in variables:
        result = _integrate_one(result, v)
    if measure_log:
        result = result.scaled(measure_log)
    return result


# -- derivative extraction --------------------------------------------------


def _order_vector(form: QuadraticExponent, orders: dict[str, int], cap: int) -> np.ndarray:
    target = np.zeros(len(form.variables), dtype=int)
    for name, n in orders.items():
        if n < 0:
            raise ValueError(f"negative derivative order for {name!r}")
        target[form.index(name)] = n
    total = int(target.sum())
    if total > cap:
        raise DerivativeCapError(f"total derivative order {total} exceeds cap {cap}")
    return target


def derivative_at_zero(form: QuadraticExponent, orders: dict[str, int], cap: int = DEFAULT_ORDER_CAP) -> complex:
    """Mixed partial derivative of the full expression at the origin.

    Differentiation is carried on an explicit polynomial coefficient table:
    each step maps ``P exp(g)`` to ``(dP + P dg) exp(g)``.  Monomials whose
    degree can no longer be brought back to zero by the remaining derivative
    steps are pruned, which keeps the table small even at total order 16.
    """
    target = _order_vector(form, orders, cap)
    k = len(form.variables)
    lin = form.lin
    lin_zero = not np.any(lin)
    nz_cols = [np.flatnonzero(form.quad[i]) for i in range(k)]
    seq: list[int] = []
    for i in range(k):
        seq.extend([i] * target[i])

    poly: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 + 0.0j}
    remaining = len(seq)
    for i in seq:
        remaining -= 1
        new: dict[tuple[int, ...], complex] = {}
        for mono, coeff in poly.items():
            deg = sum(mono)
            if mono[i]:
                m = list(mono)
                m[i] -= 1
                key = tuple(m)
                new[key] = new.get(key, 0.0) + coeff * mono[i]
            if lin[i] != 0.0 and deg <= remaining:
                new[mono] = new.get(mono, 0.0) + coeff * lin[i]
            if deg < remaining:
                for j in nz_cols[i]:
                    m = list(mono)
                    m[j] += 1
                    key = tuple(m)
                    new[key] = new.get(key, 0.0) + 2.0 * form.quad[i, j] * coeff
        if lin_zero:
            poly = {m: c for m, c in new.items() if (sum(m) - remaining) % 2 == 0 and c != 0.0}
        else:
            poly = {m: c for m, c in new.items() if c != 0.0}
    value = poly.get((0,) * k, 0.0 + 0.0j)
    return value * cmath.exp(form.log_prefactor + form.const)


def _poly_multiply(p, q, max_degree):
    out: dict[tuple[int, ...], complex] = {}
    for m1, c1 in p.items():
        d1 = sum(m1)
        for m2, c2 in q.items():
            if d1 + sum(m2) > max_degree:
                continue
            key = tuple(a + b for a, b in zip(m1, m2))
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def derivative_at_zero_series(form: QuadraticExponent, orders: dict[str, int], cap: int = DEFAULT_ORDER_CAP) -> complex:
    """Same derivative via truncated multivariate Taylor expansion (test oracle)."""
    target = _order_vector(form, orders, cap)
    k = len(form.variables)
    total = int(target.sum())
    base: dict[tuple[int, ...], complex] = {}
    for i in range(k):
        if form.lin[i] != 0.0:
            mono = [0] * k
            mono[i] = 1
            base[tuple(mono)] = base.get(tuple(mono), 0.0) + form.lin[i]
    for i in range(k):
        for j in range(i, k):
            coeff = form.quad[i, j] if i == j else 2.0 * form.quad[i, j]
            if coeff != 0.0:
                mono = [0] * k
                mono[i] += 1
                mono[j] += 1
                base[tuple(mono)] = base.get(tuple(mono), 0.0) + coeff

    series: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 + 0.0j}
    power: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 + 0.0j}
    factorial = 1.0
    for n in range(1, total + 1):
        power = _poly_multiply(power, base, total)
        factorial *= n
        for mono, coeff in power.items():
            series[mono] = series.get(mono, 0.0) + coeff / factorial
    coeff = series.get(tuple(target), 0.0 + 0.0j)
    scale = 1.0
    for n in target:
        scale *= math.factorial(int(n))
    return coeff * scale * cmath.exp(form.log_prefactor + form.const)


# -- pair-contraction recursion ---------------------------------------------


@lru_cache(maxsize=512)
def _pairing_schedule(counts: tuple[int, ...]):
    """Topologically ordered contraction schedule for the given slot counts.

    Each state (a vector of remaining derivative slots) resolves by removing
    one slot of its first occupied variable ``i``: either against the linear
    coefficient ``lin[i]`` or paired with one of the remaining slots ``j``
    (weight ``mult * 2 quad[i, j]``).  The schedule is reused across all
    numeric evaluations with the same count signature.
    """
    index: dict[tuple[int, ...], int] = {}
    instructions: list[tuple[int, int, tuple[tuple[int, int, int], ...]]] = []

    def visit(state: tuple[int, ...]) -> int:
        if state in index:
            return index[state]
        if not any(state):
            index[state] = 0
            return 0
        i = next(n for n, c in enumerate(state) if c)
        reduced = list(state)
        reduced[i] -= 1
        lin_target = visit(tuple(reduced))
        pairs = []
        for j, cnt in enumerate(reduced):
            if cnt:
                nxt = list(reduced)
                nxt[j] -= 1
                pairs.append((j, cnt, visit(tuple(nxt))))
        instructions.append((i, lin_target, tuple(pairs)))
        idx = len(instructions)  # slot 0 is the empty state
        index[state] = idx
        return idx

    visit(counts)
    return tuple(instructions)


def pairing_moment(quad: np.ndarray, lin: np.ndarray | None, counts) -> np.ndarray | complex:
    """Derivative of ``exp(lin . x + x . quad . x)`` at zero via pair contraction.

    ``quad`` may carry leading broadcast axes ``(..., k, k)`` and ``lin``
    ``(..., k)``; the recursion then evaluates every lane at once, which is
    how transmissivity grids and quadrature grids are swept.  ``lin=None``
    short-circuits the linear contribution.
    """
    counts = tuple(int(c) for c in counts)
    quad = np.asarray(quad)
    if quad.shape[-1] != len(counts):
        raise ValueError(f"quad trailing dimension {quad.shape[-1]} does not match {len(counts)} counts")
    schedule = _pairing_schedule(counts)
    ones = np.ones(quad.shape[:-2], dtype=complex) if quad.ndim > 2 else 1.0 + 0.0j
    values = [ones]
    for i, lin_target, pairs in schedule:
        acc = lin[..., i] * values[lin_target] if lin is not None else 0.0
        for j, mult, target in pairs:
            acc = acc + (2.0 * mult) * quad[..., i, j] * values[target]
        values.append(acc)
    return values[-1]


def extract_moment(form: QuadraticExponent, orders: dict[str, int], cap: int = DEFAULT_ORDER_CAP) -> complex:
    """Derivative at zero via the pairing recursion, including the prefactor.

    Equivalent to :func:`derivative_at_zero`; preferred when the same counts
    signature is evaluated many times.
    """
    target = _order_vector(form, orders, cap)
    lin = form.lin if np.any(form.lin) else None
    value = pairing_moment(form.quad, lin, tuple(target))
    return complex(value) * cmath.exp(form.log_prefactor + form.const)
