"""Density matrices, labeled ensembles and the samplers that build them."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from rtlab import numerics as nx
from rtlab.errors import EmptyPartitionError, OracleError, TieError, ValidationError

WEIGHT_ATOL = 1e-12
FEATURE_TIE_ATOL = 1e-12

GroundTruthOracle = Callable[["DensityMatrix"], int]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state.

    The stored matrix is a read-only complex copy.  Construction fails
    unless the input is Hermitian within 1e-12, has unit trace within
    1e-12 and no eigenvalue below -1e-10.
    """

    matrix: np.ndarray

    def __post_init__(self):
        arr = nx.check_hermitian(self.matrix, "density matrix")
        tr = np.trace(arr)
        if abs(tr - 1) > nx.TRACE_ATOL:
            raise ValidationError(f"density matrix trace {tr.real:.15g} differs from 1")
        lo = float(np.linalg.eigvalsh((arr + arr.conj().T) / 2)[0])
        if lo < -nx.PSD_ATOL:
            raise ValidationError(f"density matrix has negative eigenvalue {lo:.3e}")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix.copy() if copy else self.matrix
        return self.matrix.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, diag={np.round(np.diag(self.matrix).real, 6).tolist()})"

    @classmethod
    def from_array(cls, m, repair: bool = False) -> "DensityMatrix":
        """Build from an array, optionally symmetrizing it first."""
        return cls(nx.check_hermitian(m, "density matrix", repair=repair))

    @classmethod
    def from_ket(cls, vec) -> "DensityMatrix":
        return cls(nx.ket_projector(vec))

    @classmethod
    def from_bloch(cls, theta: float, phi: float = 0.0) -> "DensityMatrix":
        """Pure qubit ``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``."""
        return cls.from_ket([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])

    @classmethod
    def from_bloch_vector(cls, r) -> "DensityMatrix":
        x, y, z = (float(c) for c in r)
        if x * x + y * y + z * z > 1 + 1e-10:
            raise ValidationError(f"Bloch vector norm exceeds 1: {(x, y, z)}")
        return cls(0.5 * (nx.I2 + x * nx.PAULI_X + y * nx.PAULI_Y + z * nx.PAULI_Z))

    @classmethod
    def diagonal(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=complex)))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence["DensityMatrix"]) -> "DensityMatrix":
        """Convex combination; ``weights`` are renormalized to sum to one."""
        w = np.asarray(weights, dtype=float)
        if len(w) != len(states) or len(w) == 0:
            raise ValidationError("mixture needs one weight per state and at least one state")
        total = w.sum()
        if np.any(w < 0) or total <= 0:
            raise ValidationError("mixture weights must be nonnegative with positive sum")
        acc = sum(wi * s.matrix for wi, s in zip(w / total, states))
        return cls(acc)

    def bloch_vector(self) -> np.ndarray:
        if self.dim != 2:
            raise ValidationError("Bloch vectors exist only for qubits")
        return np.array([nx.expectation(p, self.matrix) for p in (nx.PAULI_X, nx.PAULI_Y, nx.PAULI_Z)])

    def expectation(self, op) -> float:
        return nx.expectation(op, self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, np.asarray(other), rtol=0, atol=atol))


class EnsembleItem(NamedTuple):
    weight: float
    state: DensityMatrix
    label: int


def _as_state(s) -> DensityMatrix:
    return s if isinstance(s, DensityMatrix) else DensityMatrix(s)


@dataclass(frozen=True, eq=False)
class LabeledEnsemble:
    """Finite weighted collection of (weight, state, true class) triples.

    ``classes`` lists the admissible labels; it defaults to the sorted set
    of labels present.  Binary problems use the labels ``+1`` and ``-1``.
    """

    items: tuple[EnsembleItem, ...]
    classes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        items = tuple(EnsembleItem(float(w), _as_state(s), int(c)) for w, s, c in self.items)
        if not items:
            raise ValidationError("ensemble is empty")
        weights = np.array([it.weight for it in items])
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("ensemble weights must be finite and nonnegative")
        if abs(weights.sum() - 1) > WEIGHT_ATOL:
            raise ValidationError(f"ensemble weights sum to {weights.sum():.15g}, not 1")
        dims = {it.state.dim for it in items}
        if len(dims) != 1:
            raise ValidationError(f"ensemble states have mixed dimensions {sorted(dims)}")
        classes = tuple(self.classes) if self.classes else tuple(sorted({it.label for it in items}))
        if len(set(classes)) != len(classes):
            raise ValidationError(f"duplicate class labels {classes}")
        stray = sorted({it.label for it in items} - set(classes))
        if stray:
            raise ValidationError(f"labels {stray} not among declared classes {classes}")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "classes", tuple(int(c) for c in classes))

    @classmethod
    def from_lists(cls, weights, states, labels, classes=()) -> "LabeledEnsemble":
        if not (len(weights) == len(states) == len(labels)):
            raise ValidationError("weights, states and labels must have equal length")
        return cls(tuple(zip(weights, states, labels)), tuple(classes))

    @classmethod
    def uniform(cls, states, labels, classes=()) -> "LabeledEnsemble":
        n = len(states)
        return cls.from_lists([1.0 / n] * n, states, labels, classes)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[EnsembleItem]:
        return iter(self.items)

    @property
    def dim(self) -> int:
        return self.items[0].state.dim

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def weights(self) -> np.ndarray:
        return np.array([it.weight for it in self.items])

    @property
    def states(self) -> tuple[DensityMatrix, ...]:
        return tuple(it.state for it in self.items)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(it.label for it in self.items)

    @property
    def is_binary(self) -> bool:
        return set(self.classes) == {1, -1}

    def require_binary(self) -> None:
        if not self.is_binary:
            raise ValidationError(f"binary labels {{+1, -1}} required, ensemble has classes {self.classes}")

    def class_weight(self, label: int) -> float:
        return float(sum(it.weight for it in self.items if it.label == label))

    def is_unbiased(self, atol: float = WEIGHT_ATOL) -> bool:
        target = 1.0 / self.num_classes
        return all(abs(self.class_weight(c) - target) <= atol for c in self.classes)

    def with_states(self, states: Sequence[DensityMatrix]) -> "LabeledEnsemble":
        if len(states) != len(self.items):
            raise ValidationError(f"expected {len(self.items)} states, got {len(states)}")
        return LabeledEnsemble(
            tuple(EnsembleItem(it.weight, s, it.label) for it, s in zip(self.items, states)),
            self.classes)

    def with_labels(self, labels: Sequence[int], classes=None) -> "LabeledEnsemble":
        return LabeledEnsemble(
            tuple(EnsembleItem(it.weight, it.state, int(c)) for it, c in zip(self.items, labels)),
            self.classes if classes is None else tuple(classes))


def class_aggregate(e: LabeledEnsemble, label: int) -> DensityMatrix:
    """Weight-normalized mixture of the states carrying ``label``."""
    members = [it for it in e.items if it.label == label]
    total = sum(it.weight for it in members)
    if not members or total <= 0:
        raise EmptyPartitionError(f"empty class aggregate for label {label}")
    return DensityMatrix.mixture([it.weight for it in members], [it.state for it in members])


@dataclass(frozen=True, eq=False)
class FeatureOperator:
    """A feature ``sigma -> Tr(operator @ sigma)`` or the nonlinear purity tag."""

    name: str
    operator: np.ndarray | None = None
    kind: str = "linear"
    weight: float = 1.0

    def __post_init__(self):
        if self.kind == "linear":
            if self.operator is None:
                raise ValidationError(f"linear feature {self.name!r} needs an operator")
            op = nx.check_hermitian(self.operator, f"feature {self.name!r}")
            op.setflags(write=False)
            object.__setattr__(self, "operator", op)
        elif self.kind == "purity":
            if self.operator is not None:
                raise ValidationError("purity feature takes no operator")
        else:
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        if not np.isfinite(self.weight):
            raise ValidationError("feature weight must be finite")

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"


@dataclass(frozen=True)
class FeaturePartition:
    """Aggregates of one binary ensemble split by (label, feature sign).

    Keys of every mapping are ``(label, sign)`` with both entries in
    ``{+1, -1}``.  ``fractions[(c, s)]`` is the weight of the partition
    inside class ``c``, so mixing the aggregates of class ``c`` with these
    fractions gives the class aggregate.  Empty partitions carry ``None``
    and fraction 0 (only with ``allow_empty``).
    """

    aggregates: dict
    fractions: dict
    members: dict

    def agreement(self, label: int) -> float:
        """Within-class weight fraction whose feature sign equals the label."""
        return self.fractions[(label, label)]


def feature_values(e: LabeledEnsemble, f0: FeatureOperator) -> np.ndarray:
    if not f0.is_linear:
        raise ValidationError("feature partitions need a linear feature")
    if f0.operator.shape[0] != e.dim:
        raise ValidationError(f"feature dimension {f0.operator.shape[0]} != ensemble dimension {e.dim}")
    return np.array([it.state.expectation(f0.operator) for it in e.items])


def feature_partition_aggregates(e: LabeledEnsemble, f0: FeatureOperator,
                                 allow_empty: bool = False) -> FeaturePartition:
    """Split a binary ensemble by label and by the sign of a linear feature."""
    e.require_binary()
    vals = feature_values(e, f0)
    ties = [i for i, v in enumerate(vals) if abs(v) < FEATURE_TIE_ATOL]
    if ties:
        raise TieError(f"feature {f0.name!r} vanishes on items {ties}", ties)
    aggregates, fractions, members = {}, {}, {}
    for label in (1, -1):
        class_w = e.class_weight(label)
        if class_w <= 0:
            raise EmptyPartitionError(f"empty class aggregate for label {label}")
        for sign in (1, -1):
            idx = tuple(i for i, it in enumerate(e.items)
                        if it.label == label and np.sign(vals[i]) == sign and it.weight > 0)
            members[(label, sign)] = idx
            w = sum(e.items[i].weight for i in idx)
            if not idx:
                if not allow_empty:
                    raise EmptyPartitionError(f"empty partition (label {label:+d}, sign {sign:+d})")
                aggregates[(label, sign)] = None
                fractions[(label, sign)] = 0.0
                continue
            aggregates[(label, sign)] = DensityMatrix.mixture(
                [e.items[i].weight for i in idx], [e.items[i].state for i in idx])
            fractions[(label, sign)] = w / class_w
    return FeaturePartition(aggregates, fractions, members)


REGIONS = ("full-sphere", "upper-hemisphere", "lower-hemisphere", "equator-band")


def _z_interval(region: str, half_width: float | None) -> tuple[float, float]:
    if region == "full-sphere":
        return -1.0, 1.0
    if region == "upper-hemisphere":
        return 0.0, 1.0
    if region == "lower-hemisphere":
        return -1.0, 0.0
    if region == "equator-band":
        if half_width is None:
            raise ValidationError("equator-band needs a half-width")
        if not (0 <= half_width <= np.pi / 2) or not np.isfinite(half_width):
            raise ValidationError(f"band half-width {half_width} outside [0, pi/2]")
        s = float(np.sin(half_width))
        return -s, s
    raise ValidationError(f"unknown region {region!r}; choose from {REGIONS}")


def sample_bloch_vectors(rng: np.random.Generator, n: int, region: str = "full-sphere",
                         half_width: float | None = None) -> np.ndarray:
    """``n`` unit Bloch vectors, uniform (area measure) on a sphere region.

    Uniform area on the sphere means ``z`` uniform and the azimuth uniform.
    Hemispheres exclude the equator: the upper one has ``z > 0`` and the
    lower one ``z < 0``.
    """
    lo, hi = _z_interval(region, half_width)
    u = rng.random(n)
    if region == "upper-hemisphere":
        z = 1.0 - u          # (0, 1]
    elif region == "lower-hemisphere":
        z = u - 1.0          # [-1, 0)
    else:
        z = lo + (hi - lo) * u
    phi = 2 * np.pi * rng.random(n)
    rxy = np.sqrt(np.clip(1 - z * z, 0.0, None))
    return np.column_stack([rxy * np.cos(phi), rxy * np.sin(phi), z])


def bloch_vector_to_state(r) -> DensityMatrix:
    """State ``(I + r.sigma)/2``; keeps ``<0|rho|0> = (1+z)/2`` exact."""
    return DensityMatrix.from_bloch_vector(r)


def sample_bloch_qubit(rng_seed: int, region: str = "full-sphere",
                       half_width: float | None = None) -> DensityMatrix:
    """One pure qubit drawn uniformly from ``region``; deterministic per seed."""
    rng = np.random.default_rng(rng_seed)
    r = sample_bloch_vectors(rng, 1, region, half_width)[0]
    return bloch_vector_to_state(r)


def pushforward_ensemble(e: LabeledEnsemble, n, relabel: GroundTruthOracle | None = None) -> LabeledEnsemble:
    """Map every state through a perturbation, keeping weights.

    ``n`` is anything with an ``images(ensemble)`` method returning one
    state per item (a :class:`rtlab.channels.KrausChannel` or
    :class:`rtlab.channels.PerturbationSpec`).  With ``relabel`` the labels
    are recomputed on the images; otherwise the original labels stay.
    """
    images = n.images(e)
    if relabel is None:
        return e.with_states(images)
    labels = []
    for i, s in enumerate(images):
        try:
            labels.append(int(relabel(s)))
        except OracleError as exc:
            raise OracleError(f"oracle undefined on image of item {i}: {exc}") from exc
    classes = tuple(sorted(set(e.classes) | set(labels)))
    return LabeledEnsemble(
        tuple(EnsembleItem(it.weight, s, c) for it, s, c in zip(e.items, images, labels)), classes)


def hemisphere_oracle(site: int = 0, n_qubits: int = 1) -> GroundTruthOracle:
    """+1 when qubit ``site`` has ``<0|rho|0>`` above 1/2, else -1.

    States on the equator are assigned -1 (the lower class includes its
    boundary).
    """
    proj = nx.embed_local(nx.PROJ_0, site, n_qubits)

    def oracle(sigma: DensityMatrix) -> int:
        if sigma.dim != proj.shape[0]:
            raise OracleError(f"hemisphere oracle expects dimension {proj.shape[0]}, got {sigma.dim}")
        return 1 if sigma.expectation(proj) > 0.5 + 1e-12 else -1

    oracle.description = {"type": "hemisphere", "site": site, "n_qubits": n_qubits}
    return oracle


def observable_sign_oracle(op) -> GroundTruthOracle:
    """Class given by the sign of ``Tr(op sigma)``; zero is undefined."""
    arr = nx.check_hermitian(op, "oracle observable")

    def oracle(sigma: DensityMatrix) -> int:
        v = sigma.expectation(arr)
        if abs(v) <= 1e-12:
            raise OracleError(f"observable expectation {v:.3e} is zero; class undefined")
        return 1 if v > 0 else -1

    oracle.description = {"type": "observable-sign"}
    return oracle


def lookup_oracle(pairs: Iterable[tuple[DensityMatrix, int]], atol: float = 1e-9) -> GroundTruthOracle:
    """Class of the nearest listed state, defined only within ``atol``.

    Conflicting labels for coincident states raise at lookup time.
    """
    table = [(np.asarray(s), int(c)) for s, c in pairs]

    def oracle(sigma: DensityMatrix) -> int:
        hits = {c for m, c in table if np.max(np.abs(m - sigma.matrix)) <= atol}
        if not hits:
            raise OracleError("state not in the lookup table")
        if len(hits) > 1:
            raise OracleError(f"state listed with conflicting labels {sorted(hits)}")
        return hits.pop()

    oracle.description = {"type": "lookup"}
    return oracle


def ensemble_lookup_oracle(*ensembles: LabeledEnsemble, atol: float = 1e-9) -> GroundTruthOracle:
    return lookup_oracle([(it.state, it.label) for e in ensembles for it in e.items], atol)
