"""
Truncated multivariate jets

A JetTable stores a quantity together with its partial derivatives with
respect to a few differentiation variables, up to total order 3. Entries are
keyed by MultiIndex in normal form (per-variable exponents), so d/dt d/dx and
d/dx d/dt are one and the same entry.

Arithmetic on jets is exact for the stored entries:
  - sums act entry by entry,
  - products use the Leibniz rule,
  - composition with a scalar function uses Faa di Bruno's formula, e.g.
        d_ij  phi(u) = phi'' u_i u_j + phi' u_ij
        d_ijk phi(u) = phi''' u_i u_j u_k
                       + phi'' (u_ij u_k + u_ik u_j + u_jk u_i) + phi' u_ijk
  - derivative(v) shifts every entry one order along variable v.

A result keeps only the multi-indices every operand can support, so the
available order drops as expressions are differentiated.
"""

import itertools
from functools import lru_cache
from math import comb, prod
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import torch

MAX_ORDER = 3
DTYPE = torch.float64

Scalar = Union[int, float, torch.Tensor]


class MultiIndex(tuple):
    """Per-variable derivative exponents, e.g. (1, 2, 0) is d^3/(dt dx^2) on inputs (t, x, mu)."""

    def __new__(cls, exponents: Iterable[int]):
        values = tuple(int(e) for e in exponents)
        if any(e < 0 for e in values):
            raise ValueError(f"Multi-index exponents must be nonnegative, got {values}")
        return super().__new__(cls, values)

    @classmethod
    def zero(cls, n_vars: int) -> "MultiIndex":
        return cls((0,) * n_vars)

    @classmethod
    def unit(cls, var: int, n_vars: int) -> "MultiIndex":
        return cls(1 if k == var else 0 for k in range(n_vars))

    @classmethod
    def from_variables(cls, variables: Iterable[int], n_vars: int) -> "MultiIndex":
        """Normal form of a differentiation sequence: [0, 1] and [1, 0] both give (1, 1, ...)."""
        counts = [0] * n_vars
        for var in variables:
            if not 0 <= var < n_vars:
                raise ValueError(f"Variable {var} out of range for {n_vars} inputs")
            counts[var] += 1
        return cls(counts)

    @property
    def order(self) -> int:
        return sum(self)

    def plus(self, var: int) -> "MultiIndex":
        return MultiIndex(e + 1 if k == var else e for k, e in enumerate(self))

    def minus(self, var: int) -> "MultiIndex":
        return MultiIndex(e - 1 if k == var else e for k, e in enumerate(self))

    def variables(self) -> Tuple[int, ...]:
        """Expanded differentiation sequence, e.g. (1, 2) -> (0, 1, 1)."""
        return tuple(itertools.chain.from_iterable([v] * e for v, e in enumerate(self)))

    def __repr__(self) -> str:
        return f"MultiIndex{tuple(self)}"


def multi_indices(n_vars: int, max_order: int) -> List[MultiIndex]:
    """All multi-indices over n_vars variables with total order <= max_order."""
    if max_order > MAX_ORDER:
        raise ValueError(f"Derivative order {max_order} exceeds the supported maximum {MAX_ORDER}")
    indices = [
        MultiIndex(c)
        for c in itertools.product(range(max_order + 1), repeat=n_vars)
        if sum(c) <= max_order
    ]
    return sorted(indices, key=_index_sort_key)


def downward_closure(indices: Iterable[Sequence[int]]) -> List[MultiIndex]:
    """Every multi-index needed to compute the given ones (all componentwise-smaller indices)."""
    seen = set()
    stack = [MultiIndex(a) for a in indices]
    while stack:
        alpha = stack.pop()
        if alpha in seen:
            continue
        if alpha.order > MAX_ORDER:
            raise ValueError(f"Requested derivative {alpha!r} has order {alpha.order} > {MAX_ORDER}")
        seen.add(alpha)
        stack.extend(alpha.minus(v) for v, e in enumerate(alpha) if e)
    return sorted(seen, key=_index_sort_key)


def _index_sort_key(alpha: MultiIndex):
    return (alpha.order, tuple(-e for e in alpha))


@lru_cache(maxsize=None)
def _leibniz_terms(alpha: MultiIndex) -> Tuple[Tuple[MultiIndex, MultiIndex, int], ...]:
    terms = []
    for beta in itertools.product(*(range(e + 1) for e in alpha)):
        gamma = tuple(a - b for a, b in zip(alpha, beta))
        coefficient = prod(comb(a, b) for a, b in zip(alpha, beta))
        terms.append((MultiIndex(beta), MultiIndex(gamma), coefficient))
    return tuple(terms)


def _set_partitions(items: List[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]
        yield [[first]] + partition


@lru_cache(maxsize=None)
def _faa_di_bruno_terms(alpha: MultiIndex) -> Tuple[Tuple[int, Tuple[MultiIndex, ...], int], ...]:
    # One term per set partition of the differentiation sequence, grouped by
    # (derivative order of phi, multiset of inner derivatives).
    sequence = alpha.variables()
    n_vars = len(alpha)
    grouped: Dict[Tuple[int, Tuple[MultiIndex, ...]], int] = {}
    for partition in _set_partitions(list(range(len(sequence)))):
        blocks = tuple(sorted(
            MultiIndex.from_variables([sequence[p] for p in block], n_vars) for block in partition
        ))
        key = (len(partition), blocks)
        grouped[key] = grouped.get(key, 0) + 1
    return tuple((k, blocks, count) for (k, blocks), count in grouped.items())


class JetTable:
    """A quantity and its partial derivatives, keyed by MultiIndex."""

    def __init__(self, entries: Dict[Sequence[int], torch.Tensor], n_vars: int,
                 point: Optional[torch.Tensor] = None):
        self.n_vars = n_vars
        self.entries: Dict[MultiIndex, torch.Tensor] = {MultiIndex(k): v for k, v in entries.items()}
        self.point = point
        if MultiIndex.zero(n_vars) not in self.entries:
            raise ValueError("A jet must contain the zeroth multi-index")

    @classmethod
    def constant(cls, value: torch.Tensor, n_vars: int, max_order: int) -> "JetTable":
        zeros = torch.zeros_like(value)
        return cls({a: value if a.order == 0 else zeros for a in multi_indices(n_vars, max_order)}, n_vars)

    @classmethod
    def variable(cls, value: torch.Tensor, var: int, n_vars: int, max_order: int) -> "JetTable":
        """The jet of the coordinate function x_var itself."""
        zeros = torch.zeros_like(value)
        ones = torch.ones_like(value)
        unit = MultiIndex.unit(var, n_vars)
        entries = {}
        for alpha in multi_indices(n_vars, max_order):
            if alpha.order == 0:
                entries[alpha] = value
            elif alpha == unit:
                entries[alpha] = ones
            else:
                entries[alpha] = zeros
        return cls(entries, n_vars)

    @classmethod
    def stack(cls, columns: Sequence["JetTable"]) -> "JetTable":
        """Stack scalar jets into one jet whose entries have a trailing feature axis."""
        if not columns:
            raise ValueError("Cannot stack an empty list of jets")
        n_vars = columns[0].n_vars
        keys = [k for k in columns[0].keys() if all(k in c.entries for c in columns[1:])]
        return cls({k: torch.stack([c.entries[k] for c in columns], dim=-1) for k in keys}, n_vars)

    # Access

    def __getitem__(self, index: Sequence[int]) -> torch.Tensor:
        key = index if isinstance(index, MultiIndex) else MultiIndex(index)
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(f"Jet has no entry {key!r} (available up to order {self.max_order})") from None

    def __contains__(self, index: Sequence[int]) -> bool:
        return MultiIndex(index) in self.entries

    def keys(self) -> List[MultiIndex]:
        return sorted(self.entries, key=_index_sort_key)

    @property
    def value(self) -> torch.Tensor:
        return self.entries[MultiIndex.zero(self.n_vars)]

    @property
    def max_order(self) -> int:
        return max(a.order for a in self.entries)

    def __repr__(self) -> str:
        return f"JetTable(n_vars={self.n_vars}, keys={[tuple(k) for k in self.keys()]})"

    # Arithmetic

    def _check_compatible(self, other: "JetTable"):
        if other.n_vars != self.n_vars:
            raise ValueError(f"Jets over {self.n_vars} and {other.n_vars} variables cannot be combined")

    def __add__(self, other: Union["JetTable", Scalar]) -> "JetTable":
        if isinstance(other, JetTable):
            self._check_compatible(other)
            return JetTable({k: v + other.entries[k] for k, v in self.entries.items() if k in other.entries},
                            self.n_vars)
        entries = dict(self.entries)
        zero = MultiIndex.zero(self.n_vars)
        entries[zero] = entries[zero] + other
        return JetTable(entries, self.n_vars)

    __radd__ = __add__

    def __neg__(self) -> "JetTable":
        return JetTable({k: -v for k, v in self.entries.items()}, self.n_vars)

    def __sub__(self, other: Union["JetTable", Scalar]) -> "JetTable":
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "JetTable":
        return (-self) + other

    def __mul__(self, other: Union["JetTable", Scalar]) -> "JetTable":
        if not isinstance(other, JetTable):
            return JetTable({k: v * other for k, v in self.entries.items()}, self.n_vars)
        self._check_compatible(other)
        entries = {}
        for alpha in self.entries:
            if alpha not in other.entries:
                continue
            total = None
            for beta, gamma, coefficient in _leibniz_terms(alpha):
                term = self.entries[beta] * other.entries[gamma]
                if coefficient != 1:
                    term = coefficient * term
                total = term if total is None else total + term
            entries[alpha] = total
        return JetTable(entries, self.n_vars)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["JetTable", Scalar]) -> "JetTable":
        if isinstance(other, JetTable):
            return self * other.reciprocal()
        return JetTable({k: v / other for k, v in self.entries.items()}, self.n_vars)

    def __rtruediv__(self, other: Scalar) -> "JetTable":
        return self.reciprocal() * other

    def derivative(self, var: int) -> "JetTable":
        """The jet of d/d(var) of this quantity; one order less is available."""
        if not 0 <= var < self.n_vars:
            raise ValueError(f"Variable {var} out of range for {self.n_vars} variables")
        entries = {}
        for alpha in self.entries:
            shifted = alpha.plus(var)
            if shifted in self.entries:
                entries[alpha] = self.entries[shifted]
        if MultiIndex.zero(self.n_vars) not in entries:
            raise ValueError(f"Jet of order {self.max_order} cannot be differentiated along variable {var}")
        return JetTable(entries, self.n_vars)

    def compose(self, derivatives: Sequence[torch.Tensor]) -> "JetTable":
        """Jet of phi(u) given phi and its derivatives evaluated at u = self.value."""
        if len(derivatives) <= self.max_order:
            raise ValueError(f"Composition needs {self.max_order + 1} derivatives, got {len(derivatives)}")
        entries = {}
        for alpha in self.entries:
            total = None
            for k, blocks, count in _faa_di_bruno_terms(alpha):
                term = derivatives[k]
                for block in blocks:
                    term = term * self.entries[block]
                if count != 1:
                    term = count * term
                total = term if total is None else total + term
            entries[alpha] = total
        return JetTable(entries, self.n_vars)

    def apply(self, function: Callable[[torch.Tensor, int], List[torch.Tensor]]) -> "JetTable":
        """Compose with a function given as `function(u, order) -> [phi(u), phi'(u), ...]`."""
        return self.compose(function(self.value, self.max_order))

    def reciprocal(self) -> "JetTable":
        return self.apply(reciprocal_derivatives)

    def map(self, fn: Callable[[torch.Tensor], torch.Tensor]) -> "JetTable":
        """Apply a linear map to every entry (affine layers, reshapes, angular averages)."""
        return JetTable({k: fn(v) for k, v in self.entries.items()}, self.n_vars)

    def restrict(self, keys: Iterable[Sequence[int]]) -> "JetTable":
        wanted = {MultiIndex(k) for k in keys} | {MultiIndex.zero(self.n_vars)}
        return JetTable({k: v for k, v in self.entries.items() if k in wanted}, self.n_vars, self.point)


def tanh_derivatives(u: torch.Tensor, order: int) -> List[torch.Tensor]:
    t = torch.tanh(u)
    derivatives = [t]
    if order >= 1:
        d1 = 1.0 - t * t
        derivatives.append(d1)
    if order >= 2:
        d2 = -2.0 * t * d1
        derivatives.append(d2)
    if order >= 3:
        derivatives.append(-2.0 * d1 * d1 - 2.0 * t * d2)
    return derivatives


def exp_negative_derivatives(u: torch.Tensor, order: int) -> List[torch.Tensor]:
    e = torch.exp(-u)
    return [e if k % 2 == 0 else -e for k in range(order + 1)]


def identity_derivatives(u: torch.Tensor, order: int) -> List[torch.Tensor]:
    derivatives = [u, torch.ones_like(u), torch.zeros_like(u), torch.zeros_like(u)]
    return derivatives[:order + 1]


def reciprocal_derivatives(u: torch.Tensor, order: int) -> List[torch.Tensor]:
    r = 1.0 / u
    derivatives = [r, -r * r, 2.0 * r ** 3, -6.0 * r ** 4]
    return derivatives[:order + 1]


def sin_derivatives(u: torch.Tensor, order: int) -> List[torch.Tensor]:
    s, c = torch.sin(u), torch.cos(u)
    return [s, c, -s, -c][:order + 1]


def cos_derivatives(u: torch.Tensor, order: int) -> List[torch.Tensor]:
    s, c = torch.sin(u), torch.cos(u)
    return [c, -s, -c, s][:order + 1]
