"""Kraus channels, named noise families and ensemble-level perturbations."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from rtlab import numerics as nx
from rtlab.errors import ValidationError
from rtlab.states import DensityMatrix, FeatureOperator, LabeledEnsemble, feature_values

COMPLETENESS_ATOL = 1e-10
PARAM_ATOL = 1e-12
DEFAULT_EPSILON_MAX = 0.05

DECLARED_TYPES = ("relevant", "irrelevant", "unknown")


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CPTP map ``rho -> sum_l E_l rho E_l^dagger``.

    Completeness ``sum_l E_l^dagger E_l = I`` is enforced within 1e-10.
    """

    kraus_ops: tuple
    name: str = "kraus"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        ops = tuple(nx.as_square(e, "Kraus operator") for e in self.kraus_ops)
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        dims = {e.shape[0] for e in ops}
        if len(dims) != 1:
            raise ValidationError(f"Kraus operators have mixed dimensions {sorted(dims)}")
        dim = dims.pop()
        completeness = sum(e.conj().T @ e for e in ops)
        err = float(np.max(np.abs(completeness - np.eye(dim))))
        if err > COMPLETENESS_ATOL:
            raise ValidationError(f"Kraus completeness violated by {err:.3e}")
        for e in ops:
            e.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def _check_dim(self, d: int) -> None:
        if d != self.dim:
            raise ValidationError(f"channel dimension {self.dim} does not match input dimension {d}")

    def apply(self, rho) -> DensityMatrix:
        m = np.asarray(rho, dtype=complex)
        self._check_dim(m.shape[0])
        out = sum(e @ m @ e.conj().T for e in self.kraus_ops)
        return DensityMatrix((out + out.conj().T) / 2)

    def adjoint(self, effect) -> np.ndarray:
        """Heisenberg action ``sum_l E_l^dagger X E_l`` on an operator."""
        m = np.asarray(effect, dtype=complex)
        self._check_dim(m.shape[0])
        out = sum(e.conj().T @ m @ e for e in self.kraus_ops)
        return (out + out.conj().T) / 2

    def images(self, e: LabeledEnsemble) -> list[DensityMatrix]:
        return [self.apply(it.state) for it in e.items]

    def compose(self, first: "KrausChannel") -> "KrausChannel":
        """The channel ``self after first``."""
        if first.dim != self.dim:
            raise ValidationError("cannot compose channels of different dimension")
        ops = [a @ b for a in self.kraus_ops for b in first.kraus_ops]
        return KrausChannel(tuple(ops), f"{self.name}*{first.name}")

    def is_unital(self, atol: float = 1e-10) -> bool:
        out = sum(e @ e.conj().T for e in self.kraus_ops)
        return bool(np.max(np.abs(out - np.eye(self.dim))) <= atol)


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),), "identity")


def unitary_channel(u, name: str = "unitary") -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),), name)


def _probability(name: str, p) -> float:
    p = float(p)
    if not (-PARAM_ATOL <= p <= 1 + PARAM_ATOL) or not np.isfinite(p):
        raise ValidationError(f"{name} must lie in [0, 1], got {p}")
    return min(max(p, 0.0), 1.0)


def _weyl_operators(dim: int) -> list[np.ndarray]:
    """The ``dim**2`` clock-and-shift unitaries, identity first."""
    omega = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** np.arange(dim))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            for a in range(dim) for b in range(dim)]


def make_named_channel(name: str, **params) -> KrausChannel:
    """Build one of the standard noise families.

    Supported names and parameters:

    * ``identity`` (optional ``dim``)
    * ``bit-flip`` / ``phase-flip`` with flip probability ``p``
    * ``pauli`` with ``p = (p0, p1, p2, p3)`` weights on I, X, Y, Z
    * ``depolarizing`` with ``p`` and optional ``dim`` (default 2);
      realizes ``(1 - p) rho + p I/d``
    """
    key = name.lower().replace("_", "-")
    if key == "identity":
        return identity_channel(int(params.get("dim", 2)))
    if key in ("bit-flip", "bitflip", "phase-flip", "phaseflip"):
        p = _probability("flip probability", params["p"])
        flip = nx.PAULI_X if key.startswith("bit") else nx.PAULI_Z
        canon = "bit-flip" if key.startswith("bit") else "phase-flip"
        return KrausChannel((np.sqrt(1 - p) * nx.I2, np.sqrt(p) * flip), canon, {"p": p})
    if key == "pauli":
        probs = np.asarray(params["p"], dtype=float)
        if probs.shape != (4,) or np.any(probs < -PARAM_ATOL) or abs(probs.sum() - 1) > PARAM_ATOL:
            raise ValidationError(f"pauli weights must be four nonnegative numbers summing to 1, got {probs.tolist()}")
        probs = np.clip(probs, 0.0, None)
        paulis = (nx.I2, nx.PAULI_X, nx.PAULI_Y, nx.PAULI_Z)
        return KrausChannel(tuple(np.sqrt(q) * s for q, s in zip(probs, paulis)), "pauli",
                            {f"p{k}": float(q) for k, q in enumerate(probs)})
    if key in ("depolarizing", "depolarising"):
        p = _probability("depolarizing probability", params["p"])
        dim = int(params.get("dim", 2))
        if dim == 2:
            ops = (np.sqrt(1 - 3 * p / 4) * nx.I2, np.sqrt(p / 4) * nx.PAULI_X,
                   np.sqrt(p / 4) * nx.PAULI_Y, np.sqrt(p / 4) * nx.PAULI_Z)
        else:
            # (1/d^2) sum_W W rho W^dagger = I/d over the Weyl basis.
            weyl = _weyl_operators(dim)
            ops = (np.sqrt(1 - p + p / dim ** 2) * weyl[0],) + tuple(np.sqrt(p) / dim * w for w in weyl[1:])
        return KrausChannel(ops, "depolarizing", {"p": p, "dim": dim})
    raise ValidationError(f"unknown channel family {name!r}")


def apply_channel(n: KrausChannel, rho) -> DensityMatrix:
    return n.apply(rho)


def apply_channel_to_measurement(n: KrausChannel, povm_effect) -> np.ndarray:
    """Heisenberg-picture effect ``sum_l E_l^dagger Pi E_l``.

    This is the dual of :func:`apply_channel`, so
    ``Tr(Pi n(rho)) == Tr(apply_channel_to_measurement(n, Pi) rho)``.
    """
    effect = nx.check_effect(povm_effect, "POVM effect")
    return n.adjoint(effect)


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """A perturbation of a labeled ensemble.

    Exactly one representation is set:

    ``channel``
        a :class:`KrausChannel` applied to every item;
    ``index_map``
        item ``i`` is replaced by the current state of item ``index_map[i]``
        (swaps and other rearrangements of the ensemble's own states);
    ``targets``
        item ``i`` is replaced by the explicit state ``targets[i]``.

    ``declared_type`` records whether the perturbation is meant to preserve
    the true class (``irrelevant``), change it (``relevant``) or neither is
    claimed (``unknown``).
    """

    channel: KrausChannel | None = None
    index_map: tuple | None = None
    targets: tuple | None = None
    declared_type: str = "unknown"
    name: str = ""

    def __post_init__(self):
        given = [x is not None for x in (self.channel, self.index_map, self.targets)]
        if sum(given) != 1:
            raise ValidationError("a perturbation needs exactly one of channel, index_map or targets")
        if self.declared_type not in DECLARED_TYPES:
            raise ValidationError(f"declared_type must be one of {DECLARED_TYPES}")
        if self.index_map is not None:
            object.__setattr__(self, "index_map", tuple(int(j) for j in self.index_map))
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(
                t if isinstance(t, DensityMatrix) else DensityMatrix(t) for t in self.targets))
        if not self.name:
            label = self.channel.name if self.channel is not None else "ensemble-map"
            object.__setattr__(self, "name", label)

    @property
    def kind(self) -> str:
        return "channel" if self.channel is not None else "ensemble-map"

    def images(self, e: LabeledEnsemble) -> list[DensityMatrix]:
        """Perturbed state of every item of ``e``, in item order."""
        if self.channel is not None:
            return self.channel.images(e)
        table = self.index_map if self.index_map is not None else self.targets
        if len(table) != len(e):
            raise ValidationError(
                f"ensemble-map covers {len(table)} items but the ensemble has {len(e)}; map is not total")
        if self.targets is not None:
            if self.targets[0].dim != e.dim:
                raise ValidationError("ensemble-map target dimension does not match the ensemble")
            return list(self.targets)
        bad = [j for j in self.index_map if not 0 <= j < len(e)]
        if bad:
            raise ValidationError(f"ensemble-map refers to missing items {bad}")
        return [e.items[j].state for j in self.index_map]

    def apply(self, rho) -> DensityMatrix:
        if self.channel is None:
            raise ValidationError("an ensemble-map has no action on states outside its ensemble")
        return self.channel.apply(rho)


def as_perturbation(p) -> PerturbationSpec:
    if isinstance(p, PerturbationSpec):
        return p
    if isinstance(p, KrausChannel):
        return PerturbationSpec(channel=p)
    raise ValidationError(f"cannot interpret {type(p).__name__} as a perturbation")


def index_map_from_pairs(n_items: int, pairs) -> tuple[int, ...]:
    """Total index map from ``[[i, j], ...]`` pairs (item i takes state j)."""
    mapping: dict[int, int] = {}
    for pair in pairs:
        i, j = (int(x) for x in pair)
        if i in mapping:
            raise ValidationError(f"item {i} mapped twice")
        mapping[i] = j
    missing = [i for i in range(n_items) if i not in mapping]
    extra = sorted(set(mapping) - set(range(n_items)))
    if missing or extra:
        raise ValidationError(f"ensemble-map is not total: missing items {missing}, unknown items {extra}")
    return tuple(mapping[i] for i in range(n_items))


def _pair_up(first: list[int], second: list[int], what: str) -> list[tuple[int, int]]:
    if len(first) != len(second):
        longer, shorter = (first, second) if len(first) > len(second) else (second, first)
        residual = longer[len(shorter):]
        raise ValidationError(f"cannot pair {what}: sizes {len(first)} and {len(second)}, residual items {residual}")
    return list(zip(first, second))


def swap_perturbation(e: LabeledEnsemble, pairing: str = "class-swap",
                      f0: FeatureOperator | None = None) -> PerturbationSpec:
    """Pairwise exchange of ensemble states.

    ``class-swap`` pairs the k-th positive item with the k-th negative item
    and exchanges their states.  ``feature-swap`` exchanges states inside
    each class, pairing the k-th item with positive feature value with the
    k-th item with negative feature value.  Both are involutions.
    """
    e.require_binary()
    perm = list(range(len(e)))
    if pairing == "class-swap":
        pos = [i for i, it in enumerate(e.items) if it.label == 1]
        neg = [i for i, it in enumerate(e.items) if it.label == -1]
        pairs = _pair_up(pos, neg, "classes")
        declared = "relevant"
    elif pairing == "feature-swap":
        if f0 is None:
            raise ValidationError("feature-swap needs a feature operator")
        vals = feature_values(e, f0)
        pairs = []
        for label in (1, -1):
            up = [i for i, it in enumerate(e.items) if it.label == label and vals[i] > 0]
            down = [i for i, it in enumerate(e.items) if it.label == label and vals[i] < 0]
            if not up or not down:
                raise ValidationError(f"feature-swap needs both feature signs in class {label:+d}")
            pairs += _pair_up(up, down, f"feature partitions of class {label:+d}")
        declared = "irrelevant"
    else:
        raise ValidationError(f"unknown pairing {pairing!r}")
    for i, j in pairs:
        perm[i], perm[j] = j, i
    return PerturbationSpec(index_map=tuple(perm), declared_type=declared, name=pairing)


@dataclass(frozen=True)
class PerturbationClassification:
    type: str
    max_distance: float
    relevant: bool
    witness_index: int | None
    epsilon_max: float


def classify_perturbation(p, e: LabeledEnsemble, oracle, epsilon_max: float = DEFAULT_EPSILON_MAX
                          ) -> PerturbationClassification:
    """Size and relevance of a perturbation on an ensemble.

    Small means every item moves by at most ``epsilon_max`` in trace
    distance; relevant means the oracle assigns some image a class
    different from its source state.  Types: I small/irrelevant, II
    small/relevant, III large/irrelevant, IV large/relevant.
    """
    if epsilon_max < 0:
        raise ValidationError("epsilon_max must be nonnegative")
    spec = as_perturbation(p)
    images = spec.images(e)
    dist = max(nx.trace_distance(it.state, img) for it, img in zip(e.items, images))
    witness = None
    for i, (it, img) in enumerate(zip(e.items, images)):
        if oracle(img) != oracle(it.state):
            witness = i
            break
    relevant = witness is not None
    small = dist <= epsilon_max
    kind = {(True, False): "I", (True, True): "II", (False, False): "III", (False, True): "IV"}[(small, relevant)]
    return PerturbationClassification(kind, dist, relevant, witness, epsilon_max)
