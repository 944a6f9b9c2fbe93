"""Functional finite-change sensitivity indices and their exact decomposition.

The change of a model output curve between a reference input state and a
fully shifted one splits uniquely into orthogonal terms indexed by input
subsets, given a product measure on the discrete input levels. The
two-run shortcut indices are slices of that expansion:

    phi1_i(t) = f(only i shifted, t) - f(reference, t)
    phiT_i(t) = f(all shifted, t) - f(all but i shifted, t)
    phiI_i(t) = phiT_i(t) - phi1_i(t)     (every interaction touching i)

with normalized variants dividing by the total change delta_y(t) wherever
the denominator is usefully away from zero.

full_decomposition() computes every subset term by recursive
marginalization under a discrete product measure; check_sum() certifies
the reconstruction identity f(x) = sum of terms on every corner. Subsets
are encoded as bitmasks over input positions; the input count is capped
at 12 to keep the 2^p enumeration bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import ContrastSet
from .errors import DecompositionError, DomainError, GridMismatchError
from .smoothing import TimeGrid

MAX_DECOMPOSITION_INPUTS = 12

#: Normalization cutoff relative to the largest |delta_y| on the grid.
DEFAULT_EPSILON_REL = 1e-8


@dataclass(frozen=True)
class SensitivityIndexSet:
    """Per-input index curves of one model on a shared grid."""

    model_id: str
    grid: TimeGrid
    phi1: dict[str, np.ndarray]
    phiT: dict[str, np.ndarray]
    phiI: dict[str, np.ndarray]
    total_delta: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        vectors = [self.total_delta, *self.phi1.values(), *self.phiT.values(), *self.phiI.values()]
        if any(np.shape(v) != (n,) for v in vectors):
            raise GridMismatchError("index vectors must all match the grid length")

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(self.phi1)


@dataclass(frozen=True)
class NormalizedIndexSet:
    """Index curves as fractions of the total change, with a validity mask.

    Points where |delta_y| falls under the cutoff are flagged False in
    `mask` and carry NaN, never a silent zero.
    """

    model_id: str
    grid: TimeGrid
    phi1: dict[str, np.ndarray]
    phiT: dict[str, np.ndarray]
    phiI: dict[str, np.ndarray]
    total_delta: np.ndarray
    mask: np.ndarray
    epsilon: float

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(self.phi1)


def first_order_index(contrasts: ContrastSet) -> dict[str, np.ndarray]:
    """Only-shifted minus reference, per input (the contrasts, relabeled)."""
    return dict(contrasts.first_order)


def total_order_index(contrasts: ContrastSet) -> dict[str, np.ndarray]:
    """Fully shifted minus all-but-one-shifted, per input."""
    return dict(contrasts.total_order)


def interaction_index(
    phi1: dict[str, np.ndarray], phiT: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Pointwise phiT - phi1; inputs and grids must line up."""
    if tuple(phi1) != tuple(phiT):
        raise GridMismatchError(f"input sets differ: {tuple(phi1)} vs {tuple(phiT)}")
    for name in phi1:
        if np.shape(phi1[name]) != np.shape(phiT[name]):
            raise GridMismatchError(f"grid length differs for input {name!r}")
    return {name: phiT[name] - phi1[name] for name in phi1}


def index_set(contrasts: ContrastSet) -> SensitivityIndexSet:
    """Bundle all three index families of one model's contrast set."""
    phi1 = first_order_index(contrasts)
    phiT = total_order_index(contrasts)
    return SensitivityIndexSet(
        model_id=contrasts.model_id,
        grid=contrasts.grid,
        phi1=phi1,
        phiT=phiT,
        phiI=interaction_index(phi1, phiT),
        total_delta=contrasts.total_delta,
    )


def normalize(
    indices: SensitivityIndexSet,
    epsilon: float | None = None,
    epsilon_rel: float = DEFAULT_EPSILON_REL,
) -> NormalizedIndexSet:
    """Divide every index by the total change where that is defined.

    With epsilon=None the cutoff is epsilon_rel * max|delta_y| over the
    grid, so it scales with the data's units.
    """
    delta = indices.total_delta
    if epsilon is None:
        epsilon = epsilon_rel * float(np.abs(delta).max())
    elif epsilon <= 0:
        raise DomainError("normalization epsilon must be positive")
    mask = np.abs(delta) >= epsilon if epsilon > 0 else np.zeros(delta.shape, dtype=bool)
    safe = np.where(mask, delta, 1.0)

    def ratio(vec):
        return np.where(mask, vec / safe, np.nan)

    return NormalizedIndexSet(
        model_id=indices.model_id,
        grid=indices.grid,
        phi1={n: ratio(v) for n, v in indices.phi1.items()},
        phiT={n: ratio(v) for n, v in indices.phiT.items()},
        phiI={n: ratio(v) for n, v in indices.phiI.items()},
        total_delta=delta,
        mask=mask,
        epsilon=float(epsilon),
    )


# --------------------------------------------------------------------------
# Exact decomposition over discrete product measures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteProductMeasure:
    """Product measure over discrete input levels: per input, (level, weight) pairs."""

    pairs: tuple[tuple[tuple[object, float], ...], ...]

    def __post_init__(self):
        pairs = tuple(tuple((lvl, float(w)) for lvl, w in per_input) for per_input in self.pairs)
        for i, per_input in enumerate(pairs):
            if not per_input:
                raise DecompositionError(f"input {i} has no levels")
            weights = np.array([w for _, w in per_input])
            if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
                raise DecompositionError(
                    f"input {i}: weights must be nonnegative and sum to 1, got {weights}"
                )
        object.__setattr__(self, "pairs", pairs)

    @property
    def n_inputs(self) -> int:
        return len(self.pairs)

    @property
    def level_counts(self) -> tuple[int, ...]:
        return tuple(len(per_input) for per_input in self.pairs)

    def weights(self, i: int) -> np.ndarray:
        return np.array([w for _, w in self.pairs[i]])

    def corner_weights(self) -> np.ndarray:
        """Product weight of every level combination, shape = level_counts."""
        W = np.ones(())
        for i in range(self.n_inputs):
            W = np.multiply.outer(W, self.weights(i))
        return W

    @classmethod
    def dirac(cls, p: int, at: int = 0) -> "DiscreteProductMeasure":
        """Unit mass on one of two levels (0/1) for each of p inputs."""
        per_input = tuple((lvl, 1.0 if lvl == at else 0.0) for lvl in (0, 1))
        return cls(pairs=(per_input,) * p)

    @classmethod
    def uniform_two_level(cls, p: int) -> "DiscreteProductMeasure":
        return cls(pairs=(((0, 0.5), (1, 0.5)),) * p)


def _subset_indices(mask: int, p: int) -> tuple[int, ...]:
    return tuple(i for i in range(p) if mask >> i & 1)


@dataclass(frozen=True)
class DecompositionTable:
    """All 2^p orthogonal terms of one decomposition.

    terms[mask] holds the term's values over the level combinations of the
    subset's own inputs (axes in input order), with a trailing grid axis
    when the corner values were vectors. The empty subset holds the
    measure-weighted mean of f.
    """

    measure: DiscreteProductMeasure
    terms: dict[int, np.ndarray]
    scalar: bool = field(default=True)

    @property
    def p(self) -> int:
        return self.measure.n_inputs

    def subset_inputs(self, mask: int) -> tuple[int, ...]:
        return _subset_indices(mask, self.p)

    def _as_mask(self, subset) -> int:
        if isinstance(subset, (int, np.integer)):
            return int(subset)
        mask = 0
        for i in subset:
            mask |= 1 << int(i)
        return mask

    def delta(self, subset):
        """Term value at the all-shifted corner (level index 1 per member).

        For the Dirac-at-reference measure this is the finite-change
        contribution of exactly this interaction.
        """
        mask = self._as_mask(subset)
        members = self.subset_inputs(mask)
        if any(len(self.measure.pairs[i]) < 2 for i in members):
            raise DecompositionError("delta() needs at least two levels per member input")
        value = self.terms[mask][(1,) * len(members)]
        return float(value[0]) if self.scalar else value

    def total_for_input(self, i: int):
        """Sum of delta() over every subset containing input i."""
        total = 0.0
        for mask in self.terms:
            if mask >> i & 1:
                total = total + self.delta(mask)
        return total

    def total_change(self):
        """Sum of delta() over every nonempty subset."""
        total = 0.0
        for mask in self.terms:
            if mask:
                total = total + self.delta(mask)
        return total

    def term_on_corners(self, subset) -> np.ndarray:
        """Term broadcast over the full corner lattice (plus grid axis)."""
        mask = self._as_mask(subset)
        members = self.subset_inputs(mask)
        counts = self.measure.level_counts
        term = self.terms[mask]
        expanded = term
        pos = 0
        for i in range(self.p):
            if i in members:
                pos += 1
            else:
                expanded = np.expand_dims(expanded, axis=pos)
                pos += 1
        return np.broadcast_to(expanded, counts + term.shape[len(members) :])

    def reconstruction(self) -> np.ndarray:
        """Sum of all terms on every corner; equals f up to roundoff."""
        total = np.zeros(self.measure.level_counts + self.terms[0].shape)
        for mask in self.terms:
            total = total + self.term_on_corners(mask)
        return total


def _corner_array(corner_values, measure: DiscreteProductMeasure):
    """Validate the corner table and pack it into a dense array."""
    counts = measure.level_counts
    width = None
    packed = None
    scalar = True
    for corner in np.ndindex(*counts):
        if corner not in corner_values:
            raise DecompositionError(f"missing corner {corner} in the value table")
        value = np.atleast_1d(np.asarray(corner_values[corner], dtype=float))
        if value.ndim != 1:
            raise DecompositionError(f"corner {corner}: values must be scalars or 1-D arrays")
        if width is None:
            width = value.size
            scalar = np.ndim(corner_values[corner]) == 0
            packed = np.empty(counts + (width,))
        elif value.size != width:
            raise DecompositionError(f"corner {corner}: value length {value.size} != {width}")
        packed[corner] = value
    return packed, scalar


def full_decomposition(corner_values, measure: DiscreteProductMeasure) -> DecompositionTable:
    """Recursive orthogonal terms of f over the measure's corner lattice.

    corner_values maps level-index tuples (one index per input) to scalars
    or equal-length 1-D arrays. Each subset term is the marginalization of
    f over the complementary inputs minus every strict-subset term, which
    makes the terms measure-orthogonal with zero marginal means.
    """
    p = measure.n_inputs
    if p > MAX_DECOMPOSITION_INPUTS:
        raise DecompositionError(
            f"p={p} exceeds the 2^p enumeration cap ({MAX_DECOMPOSITION_INPUTS})"
        )
    F, scalar = _corner_array(corner_values, measure)
    terms: dict[int, np.ndarray] = {}
    for mask in sorted(range(2**p), key=lambda m: (bin(m).count("1"), m)):
        members = _subset_indices(mask, p)
        marginal = F
        for i in reversed(range(p)):
            if not mask >> i & 1:
                marginal = np.tensordot(marginal, measure.weights(i), axes=([i], [0]))
        term = marginal.copy()
        for sub_mask, sub_term in terms.items():
            if sub_mask & mask == sub_mask and sub_mask != mask:
                expanded = sub_term
                pos = 0
                for i in members:
                    if not sub_mask >> i & 1:
                        expanded = np.expand_dims(expanded, axis=pos)
                    pos += 1
                term = term - expanded
        terms[mask] = term
    return DecompositionTable(measure=measure, terms=terms, scalar=scalar)


def check_sum(table: DecompositionTable, corner_values) -> float:
    """Largest |f(corner) - sum of terms(corner)| over all corners."""
    F, _ = _corner_array(corner_values, table.measure)
    return float(np.abs(F - table.reconstruction()).max())
