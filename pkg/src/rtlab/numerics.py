"""Small dense complex linear algebra used by every other module.

Everything here works on plain ``numpy`` arrays (or objects exposing
``__array__``, such as :class:`rtlab.states.DensityMatrix`) and returns
fresh arrays or Python floats.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from contextvars import ContextVar
from functools import reduce

import numpy as np

from rtlab.errors import ValidationError

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
UNITARY_ATOL = 1e-10
MAX_DIM = 64
DEFAULT_EQUALITY_TOL = 1e-12
_TOLERANCE: ContextVar[float | None] = ContextVar("rtlab_tolerance", default=None)

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJ_0 = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ_1 = np.array([[0, 0], [0, 1]], dtype=complex)


def equality_tolerance() -> float:
    """Default absolute tolerance for identity checks.

    An active :func:`tolerance` block wins, then ``RTLAB_TOLERANCE`` in
    the environment, then the built-in 1e-12.
    """
    scoped = _TOLERANCE.get()
    if scoped is not None:
        return scoped
    raw = os.environ.get("RTLAB_TOLERANCE")
    if raw is None or raw.strip() == "":
        return DEFAULT_EQUALITY_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise ValidationError(f"RTLAB_TOLERANCE is not a number: {raw!r}") from exc
    if not np.isfinite(tol) or tol <= 0:
        raise ValidationError(f"RTLAB_TOLERANCE must be a positive finite number, got {raw!r}")
    return tol


@contextmanager
def tolerance(tol: float):
    """Use ``tol`` as the equality tolerance inside the ``with`` block."""
    tol = float(tol)
    if not np.isfinite(tol) or tol <= 0:
        raise ValidationError(f"tolerance must be a positive finite number, got {tol!r}")
    token = _TOLERANCE.set(tol)
    try:
        yield tol
    finally:
        _TOLERANCE.reset(token)


def as_square(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a complex square array, checking shape and size."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[0] > MAX_DIM:
        raise ValidationError(f"{name} dimension {arr.shape[0]} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def max_asymmetry(m) -> float:
    """Largest entrywise deviation max|m[i,j] - conj(m[j,i])|."""
    arr = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(arr - arr.conj().T)))


def check_hermitian(m, name: str = "matrix", atol: float = HERMITIAN_ATOL,
                    repair: bool = False) -> np.ndarray:
    """Validate Hermiticity and return a complex copy.

    Args:
        m: square array-like.
        name: label used in error messages.
        atol: allowed max entrywise asymmetry.
        repair: if true, return ``(m + m^dagger)/2`` instead of failing.
            Repair is opt-in because silently fixing inputs hides bugs.

    Raises:
        ValidationError: when the asymmetry exceeds ``atol`` and ``repair``
            is false.
    """
    arr = as_square(m, name)
    if repair:
        return (arr + arr.conj().T) / 2
    asym = max_asymmetry(arr)
    if asym > atol:
        raise ValidationError(f"{name} is not Hermitian: max asymmetry {asym:.3e} > {atol:.1e}")
    return arr.copy()


def hermitian_eigendecomposition(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    The columns of the returned matrix are the eigenvectors, so that
    ``V @ diag(w) @ V^dagger`` reconstructs ``m``.
    """
    arr = check_hermitian(m)
    # Symmetrize the last few ulps away so eigh sees an exactly Hermitian input.
    w, v = np.linalg.eigh((arr + arr.conj().T) / 2)
    return w, v


def _hermitian_eigvals(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    return np.linalg.eigvalsh((arr + arr.conj().T) / 2)


def trace_norm(m) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    arr = check_hermitian(m)
    return float(np.sum(np.abs(_hermitian_eigvals(arr))))


def check_density(m, name: str = "state") -> np.ndarray:
    """Validate unit trace and positivity; returns the complex array."""
    if hasattr(m, "matrix") and hasattr(m, "dim"):
        return np.asarray(m.matrix)
    arr = check_hermitian(m, name)
    tr = np.trace(arr)
    if abs(tr - 1) > TRACE_ATOL:
        raise ValidationError(f"{name} trace {tr.real:.15g} differs from 1")
    lo = float(_hermitian_eigvals(arr)[0])
    if lo < -PSD_ATOL:
        raise ValidationError(f"{name} has negative eigenvalue {lo:.3e}")
    return arr


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def trace_distance(a, b) -> float:
    """Trace distance ``(1/2) * sum |eig(a - b)|`` between two states."""
    ma, mb = check_density(a, "first state"), check_density(b, "second state")
    _same_dim(ma, mb)
    value = 0.5 * float(np.sum(np.abs(_hermitian_eigvals(ma - mb))))
    return min(max(value, 0.0), 1.0)


def _drop_roundoff(w: np.ndarray) -> np.ndarray:
    """Zero eigenvalues at the round-off floor; their square roots would be ~1e-8 noise."""
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    return np.where(w > floor, w, 0.0)


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh(np.asarray(m, dtype=complex))
    return (v * np.sqrt(_drop_roundoff(w))) @ v.conj().T


def fidelity(a, b) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``, clipped to [0, 1]."""
    ma, mb = check_density(a, "first state"), check_density(b, "second state")
    _same_dim(ma, mb)
    root = psd_sqrt(ma)
    inner = root @ mb @ root
    w = _drop_roundoff(_hermitian_eigvals(inner))
    value = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(value, 0.0), 1.0)


def is_effect(m, atol: float = PSD_ATOL) -> bool:
    """True when ``0 <= m <= I`` within ``atol``."""
    try:
        arr = check_hermitian(m, atol=max(atol, HERMITIAN_ATOL))
    except ValidationError:
        return False
    w = _hermitian_eigvals(arr)
    return bool(w[0] >= -atol and w[-1] <= 1 + atol)


def check_effect(m, name: str = "effect", atol: float = PSD_ATOL) -> np.ndarray:
    """Validate ``0 <= m <= I`` and return the array."""
    arr = check_hermitian(m, name)
    w = _hermitian_eigvals(arr)
    if w[0] < -atol or w[-1] > 1 + atol:
        raise ValidationError(
            f"{name} is not an effect: spectrum [{w[0]:.3e}, {w[-1]:.6g}] outside [0, 1]")
    return arr


def is_projector(m, atol: float = 1e-10) -> bool:
    arr = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(arr @ arr - arr)) <= atol and max_asymmetry(arr) <= atol)


def expectation(op, rho) -> float:
    """Real part of ``Tr(op @ rho)``."""
    return float(np.real(np.einsum("ij,ji->", np.asarray(op), np.asarray(rho))))


def ket_projector(vec) -> np.ndarray:
    """``|v><v|`` for a normalized copy of ``vec``."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValidationError("zero vector has no projector")
    v = v / norm
    return np.outer(v, v.conj())


def kron_all(*ops) -> np.ndarray:
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def embed_local(op, site: int, n_sites: int, local_dim: int = 2) -> np.ndarray:
    """Place ``op`` on one tensor factor with identities elsewhere."""
    if not 0 <= site < n_sites:
        raise ValidationError(f"site {site} outside 0..{n_sites - 1}")
    eye = np.eye(local_dim, dtype=complex)
    return kron_all(*[op if k == site else eye for k in range(n_sites)])


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_pure_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return ket_projector(v)


def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Ginibre) measure of the given rank."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2
