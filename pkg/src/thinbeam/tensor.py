"""Plane elastic tensors and the relaxed bending modulus.

A fourth-order tensor with minor and major symmetries acting on 2x2 matrices
is stored through its Voigt representation: a symmetric 3x3 matrix ``q``
operating on the coordinates ``(F11, F22, (F12 + F21)/sqrt(2))``.  The
sqrt(2) on the shear slot makes the Voigt inner product isometric to the
Frobenius product on symmetric matrices, so eigenvalues of ``q`` are exactly
the eigenvalues of the quadratic form restricted to symmetric matrices.

Only the symmetric part of the argument enters the form (minor symmetry);
the major symmetry is the symmetry of ``q`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidLame, NotCoercive

_SQRT2 = math.sqrt(2.0)


def voigt_vector(F) -> np.ndarray:
    """Voigt coordinates of the symmetric part of a 2x2 matrix."""
    F = np.asarray(F, dtype=float)
    if F.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {F.shape}")
    return np.array([F[0, 0], F[1, 1], (F[0, 1] + F[1, 0]) / _SQRT2])


@dataclass(frozen=True)
class ElasticTensor:
    """Cauchy tensor in Voigt form.

    Parameters
    ----------
    q : (3, 3) array
        Symmetric matrix; positive definiteness is required for coercive
        tensors but is only enforced where an operation needs it, so that
        inadmissible inputs are diagnosed by :func:`coercivity_constant`
        rather than at construction.
    """

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (3, 3):
            raise ValueError(f"Voigt matrix must be 3x3, got {q.shape}")
        if not np.allclose(q, q.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(q).max())):
            raise ValueError("Voigt matrix must be symmetric (major symmetry)")
        object.__setattr__(self, "q", 0.5 * (q + q.T))

    def quadratic_form(self, F) -> float:
        """Evaluate F : C F.  Depends on F only through its symmetric part."""
        v = voigt_vector(F)
        return float(v @ self.q @ v)

    def norm(self) -> float:
        """Spectral norm of the Voigt matrix."""
        return float(np.max(np.abs(np.linalg.eigvalsh(self.q))))


def isotropic_tensor(mu: float, lam: float) -> ElasticTensor:
    """Isotropic tensor with form 2 mu |sym F|^2 + lambda tr(F)^2.

    Raises
    ------
    InvalidLame
        If mu <= 0 or 2 mu + lambda <= 0.
    """
    if not (mu > 0.0 and 2.0 * mu + lam > 0.0):
        raise InvalidLame(f"need mu > 0 and 2*mu + lambda > 0, got mu={mu}, lambda={lam}")
    q = 2.0 * mu * np.eye(3)
    q[:2, :2] += lam
    return ElasticTensor(q)


def coercivity_constant(C: ElasticTensor) -> float:
    """Largest c with F : C F >= c |F + F^T|^2 for all 2x2 F.

    Since |F + F^T|^2 = 4 |sym F|^2 and the Voigt coordinates are isometric
    on symmetric matrices, this is a quarter of the smallest eigenvalue
    of ``q``.

    Raises
    ------
    NotCoercive
        If the smallest eigenvalue is <= 1e-12 * ||q||.
    """
    eigs = np.linalg.eigvalsh(C.q)
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    smallest = float(eigs[0])
    if smallest <= 1e-12 * scale or scale == 0.0:
        raise NotCoercive(f"smallest Voigt eigenvalue {smallest:.3e} is not positive")
    return 0.25 * smallest


@dataclass(frozen=True)
class BendingResult:
    """Relaxed bending modulus and the optimal relaxation pair.

    ``a`` is the minimum over (b, c) of the quadratic form at
    [[1, b], [0, c]]; ``residual`` is the max-norm residual of the 2x2
    stationarity system at the minimizer.
    """

    a: float
    b_star: float
    c_star: float
    residual: float


def bending_constant(C: ElasticTensor) -> BendingResult:
    """Minimize the quadratic form over matrices [[1, b], [0, c]].

    The objective is a strictly convex quadratic in (b, c) for coercive
    tensors, so the minimizer solves a 2x2 linear system exactly; no
    iterative optimization is involved.

    Raises
    ------
    NotCoercive
        Propagated from the coercivity check.
    """
    coercivity_constant(C)  # raises if inadmissible
    q = C.q
    # Voigt coordinates of [[1, b], [0, c]] are v0 + b*eb + c*ec.
    v0 = np.array([1.0, 0.0, 0.0])
    eb = np.array([0.0, 0.0, 1.0 / _SQRT2])
    ec = np.array([0.0, 1.0, 0.0])
    m = np.array(
        [
            [eb @ q @ eb, eb @ q @ ec],
            [ec @ q @ eb, ec @ q @ ec],
        ]
    )
    rhs = -np.array([eb @ q @ v0, ec @ q @ v0])
    b_star, c_star = np.linalg.solve(m, rhs)
    residual = float(np.max(np.abs(m @ np.array([b_star, c_star]) - rhs)))
    F = np.array([[1.0, b_star], [0.0, c_star]])
    a = C.quadratic_form(F)
    if a <= 0.0:
        raise NotCoercive(f"bending modulus {a:.3e} is not positive")
    return BendingResult(a=float(a), b_star=float(b_star), c_star=float(c_star), residual=residual)


def tensor_from_config(spec: dict) -> ElasticTensor:
    """Build a tensor from a config fragment.

    Accepts ``{"isotropic": {"mu": x, "lambda": y}}`` or
    ``{"voigt": [[...], [...], [...]]}``.
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError("tensor spec must be {'isotropic': {...}} or {'voigt': [[...]]}")
    if "isotropic" in spec:
        par = spec["isotropic"]
        unknown = set(par) - {"mu", "lambda"}
        if unknown:
            raise ValueError(f"unknown isotropic keys: {sorted(unknown)}")
        return isotropic_tensor(float(par["mu"]), float(par["lambda"]))
    if "voigt" in spec:
        return ElasticTensor(np.asarray(spec["voigt"], dtype=float))
    raise ValueError(f"unknown tensor kind: {list(spec)}")
