"""Square unlinked CC systems, hyperplane-section systems and monodromy seeds.

For a level set ``sigma`` the unknowns are ``lambda`` followed by the
amplitudes ``t_sigma``.  The equations are the rows of ``(H - lambda) psi(t)``
indexed by the coordinates whose level lies in ``sigma`` or is ``(0, 0)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import first_n, level_of
from .errors import CapacityError, SeedError
from .expparam import cluster_variables, forward_map
from .multipoly import CompiledPolynomials, PolynomialSystem, SparsePolynomial, format_var, lambda_var
from .truncation import LevelSet, _as_levels, dimension

HAMILTONIAN_MAX_ORBITALS = 10


def generator(seed: int) -> np.random.Generator:
    """Counter-based generator so that equal seeds give equal streams everywhere."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    seed: int | None = None

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0]).bit_length() - 1


def random_hamiltonian(n: int, seed: int) -> Hamiltonian:
    """Real symmetric ``2**n`` matrix, upper triangle iid uniform on [-1, 1]."""
    if not 0 <= n <= HAMILTONIAN_MAX_ORBITALS:
        raise CapacityError(f"Hamiltonians are capped at n={HAMILTONIAN_MAX_ORBITALS}")
    N = 1 << n
    iu = np.triu_indices(N)
    H = np.zeros((N, N))
    H[iu] = generator(seed).uniform(-1.0, 1.0, size=len(iu[0]))
    H = H + np.triu(H, 1).T
    return Hamiltonian(H, seed)


def random_complex_symmetric(N: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.uniform(-1, 1, (N, N)) + 1j * rng.uniform(-1, 1, (N, N))
    return (A + A.T) / 2


class ParamEvaluator:
    """Compiled nonzero coordinates of the truncated exponential map."""

    def __init__(self, d: int, n: int, sigma):
        self.d, self.n = d, n
        self.sigma = _as_levels(sigma)
        self.variables = cluster_variables(d, n, self.sigma)
        polys = forward_map(d, n, self.sigma)
        self.polys = polys
        self.support = [J for J, p in enumerate(polys) if not p.is_zero()]
        self.compiled = CompiledPolynomials([polys[J] for J in self.support], self.variables)
        self.degrees = {J: polys[J].degree() for J in self.support}

    def values(self, T: np.ndarray) -> np.ndarray:
        return self.compiled.evaluate(T)

    def values_with_jacobian(self, T: np.ndarray):
        return self.compiled.evaluate_with_jacobian(T)

    def full_vector(self, t: np.ndarray) -> np.ndarray:
        psi = np.zeros(1 << self.n, dtype=complex)
        psi[self.support] = self.values(np.atleast_2d(t))[0]
        return psi


class CCSystem:
    """``F(lambda, t) = P (H - lambda) psi(t)`` for a bound Hamiltonian.

    The Hamiltonian can be swapped (``with_hamiltonian``) without recompiling,
    which is what parameter homotopies and monodromy loops use.
    """

    def __init__(self, evaluator: ParamEvaluator, H: np.ndarray):
        self.ev = evaluator
        self.d, self.n, self.sigma = evaluator.d, evaluator.n, evaluator.sigma
        keep = self.sigma | {(0, 0)}
        self.projection = [J for J in range(1 << self.n) if level_of(J, self.d) in keep]
        pos = {J: k for k, J in enumerate(evaluator.support)}
        self._proj_pos = np.array([pos[J] for J in self.projection])
        self.unknowns = [lambda_var()] + list(evaluator.variables)
        self.H = np.asarray(H)
        self._Hp = self.restrict(self.H)

    def restrict(self, H: np.ndarray) -> np.ndarray:
        return np.asarray(H)[np.ix_(self.projection, self.ev.support)]

    def with_hamiltonian(self, H: np.ndarray) -> "CCSystem":
        out = object.__new__(CCSystem)
        out.__dict__.update(self.__dict__)
        out.H = np.asarray(H)
        out._Hp = self.restrict(H)
        return out

    @property
    def n_vars(self) -> int:
        return len(self.unknowns)

    @property
    def parameters(self) -> np.ndarray:
        return self.H

    def random_parameters(self, rng: np.random.Generator) -> np.ndarray:
        return random_complex_symmetric(self.H.shape[0], rng)

    def __len__(self) -> int:
        return len(self.projection)

    @property
    def degrees(self) -> list[int]:
        """Degree of each equation for generic ``H``."""
        dmax = max(self.ev.degrees.values())
        return [max(dmax, 1 + self.ev.degrees[J]) for J in self.projection]

    def evaluate(self, X: np.ndarray, Hp: np.ndarray | None = None) -> np.ndarray:
        X = np.atleast_2d(X)
        psi = self.ev.values(X[:, 1:])
        Hp = self._Hp if Hp is None else Hp
        return psi @ Hp.T - X[:, :1] * psi[:, self._proj_pos]

    def evaluate_with_jacobian(self, X: np.ndarray, Hp: np.ndarray | None = None):
        X = np.atleast_2d(X)
        psi, dpsi = self.ev.values_with_jacobian(X[:, 1:])
        Hp = self._Hp if Hp is None else Hp
        lam = X[:, :1]
        proj = psi[:, self._proj_pos]
        F = psi @ Hp.T - lam * proj
        Jt = np.einsum("rk,pkm->prm", Hp, dpsi) - lam[:, :, None] * dpsi[:, self._proj_pos, :]
        J = np.concatenate([-proj[:, :, None], Jt], axis=2)
        return F, J

    def psi(self, X: np.ndarray) -> np.ndarray:
        return self.ev.values(np.atleast_2d(X)[:, 1:])

    def full_residual(self, x: np.ndarray) -> np.ndarray:
        """All ``2**n`` rows of ``(H - lambda) psi``, projected or not."""
        psi = self.ev.full_vector(x[1:])
        return self.H @ psi - x[0] * psi

    def to_polynomial_system(self) -> PolynomialSystem:
        """Exact symbolic form; real float entries of ``H`` convert exactly to rationals."""
        lam = SparsePolynomial.variable(lambda_var())
        polys = []
        for J in self.projection:
            row = SparsePolynomial()
            for K in self.ev.support:
                h = self.H[J, K]
                coef = Fraction(float(h.real)) if np.isreal(h) else complex(h)
                if coef:
                    row = row + self.ev.polys[K] * coef
            polys.append(row - lam * self.ev.polys[J])
        return PolynomialSystem(polys, self.unknowns, metadata=self.metadata())

    def metadata(self) -> dict:
        return {"d": self.d, "n": self.n, "sigma": str(LevelSet(self.sigma)),
                "projection": self.projection}

    def to_json(self) -> str:
        data = self.metadata()
        data["unknowns"] = [format_var(v) for v in self.unknowns]
        data["hamiltonian_real"] = np.real(self.H).tolist()
        data["hamiltonian_imag"] = np.imag(self.H).tolist()
        return json.dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "CCSystem":
        data = json.loads(text)
        H = np.array(data["hamiltonian_real"]) + 1j * np.array(data["hamiltonian_imag"])
        if not np.any(np.imag(H)):
            H = np.real(H)
        sigma = LevelSet.parse(data["sigma"])
        return cls(ParamEvaluator(data["d"], data["n"], sigma), H)


def assemble_cc_system(H: Hamiltonian | np.ndarray, d: int, n: int, sigma,
                       evaluator: ParamEvaluator | None = None) -> CCSystem:
    sigma = _as_levels(sigma).check(d, n)
    mat = H.matrix if isinstance(H, Hamiltonian) else np.asarray(H)
    if mat.shape != (1 << n, 1 << n):
        raise ValueError(f"Hamiltonian must be {1 << n} x {1 << n}")
    return CCSystem(evaluator or ParamEvaluator(d, n, sigma), mat)


class SliceSystem:
    """``dim`` random affine combinations ``sum_J gamma_J psi_J(t) = 0``."""

    def __init__(self, evaluator: ParamEvaluator, gamma: np.ndarray, seed: int | None = None):
        self.ev = evaluator
        self.gamma = gamma
        self.seed = seed
        self.unknowns = list(evaluator.variables)

    @property
    def n_vars(self) -> int:
        return len(self.unknowns)

    def __len__(self) -> int:
        return self.gamma.shape[0]

    @property
    def degrees(self) -> list[int]:
        dmax = max(self.ev.degrees.values())
        return [dmax] * len(self)

    # the slice coefficients play the role of the Hamiltonian in monodromy
    @property
    def parameters(self) -> np.ndarray:
        return self.gamma

    def restrict(self, gamma: np.ndarray) -> np.ndarray:
        return np.asarray(gamma)

    def with_hamiltonian(self, gamma: np.ndarray) -> "SliceSystem":
        return SliceSystem(self.ev, np.asarray(gamma), self.seed)

    def random_parameters(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(size=self.gamma.shape) + 1j * rng.normal(size=self.gamma.shape)

    def evaluate(self, X, gamma: np.ndarray | None = None):
        gamma = self.gamma if gamma is None else gamma
        return self.ev.values(np.atleast_2d(X)) @ gamma.T

    def evaluate_with_jacobian(self, X, gamma: np.ndarray | None = None):
        gamma = self.gamma if gamma is None else gamma
        psi, dpsi = self.ev.values_with_jacobian(np.atleast_2d(X))
        return psi @ gamma.T, np.einsum("rk,pkm->prm", gamma, dpsi)

    def to_polynomial_system(self) -> PolynomialSystem:
        polys = []
        for row in self.gamma:
            p = SparsePolynomial()
            for g, J in zip(row, self.ev.support):
                p = p + self.ev.polys[J] * complex(g)
            polys.append(p)
        return PolynomialSystem(polys, self.unknowns, metadata={"seed": self.seed})


def assemble_degree_system(sigma, d: int, n: int, seed: int,
                           evaluator: ParamEvaluator | None = None) -> SliceSystem:
    """Pull back ``dim(V_sigma)`` generic hyperplanes through the chart."""
    sigma = _as_levels(sigma).check(d, n)
    ev = evaluator or ParamEvaluator(d, n, sigma)
    rng = generator(seed)
    m = dimension(sigma, d, n)
    k = len(ev.support)
    gamma = rng.normal(size=(m, k)) + 1j * rng.normal(size=(m, k))
    return SliceSystem(ev, gamma, seed)


@dataclass
class MonodromySeed:
    """Start pair for monodromy; ``lam`` is ``None`` for slice systems."""

    hamiltonian: np.ndarray
    lam: complex | None
    t: np.ndarray
    residual: float
    rank: int
    attempts: int = 1

    @property
    def point(self) -> np.ndarray:
        if self.lam is None:
            return np.asarray(self.t)
        return np.concatenate([[self.lam], self.t])


def _symmetric_constraints(psi: np.ndarray, projection: Sequence[int]) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Matrix ``A`` with ``A @ upper(H) = (H psi)[projection]`` for symmetric ``H``."""
    N = len(psi)
    iu = np.triu_indices(N)
    col = -np.ones((N, N), dtype=int)
    col[iu] = np.arange(len(iu[0]))
    col = np.maximum(col, col.T)
    A = np.zeros((len(projection), len(iu[0])), dtype=complex)
    for r, J in enumerate(projection):
        np.add.at(A[r], col[J], psi)
    return A, col, iu


def monodromy_seed(d: int, n: int, sigma, seed: int, evaluator: ParamEvaluator | None = None,
                   max_tries: int = 5, tol: float = 1e-12) -> MonodromySeed:
    """Random ``(t*, lambda*)`` and a symmetric ``H`` making them a solution.

    ``H`` is the least-norm correction of a random complex symmetric draw.
    """
    sigma = _as_levels(sigma).check(d, n)
    ev = evaluator or ParamEvaluator(d, n, sigma)
    sys0 = CCSystem(ev, np.zeros((1 << n, 1 << n)))
    rng = generator(seed)
    N = 1 << n
    for attempt in range(1, max_tries + 1):
        t = rng.normal(size=len(ev.variables)) + 1j * rng.normal(size=len(ev.variables))
        lam = complex(rng.normal(), rng.normal())
        psi = ev.full_vector(t)
        H0 = random_complex_symmetric(N, rng)
        A, col, iu = _symmetric_constraints(psi, sys0.projection)
        rank = np.linalg.matrix_rank(A)
        if rank < len(sys0.projection):
            continue
        target = lam * psi[sys0.projection]
        h0 = H0[iu]
        delta, *_ = np.linalg.lstsq(A, target - A @ h0, rcond=None)
        h = h0 + delta
        H = h[col]
        x = np.concatenate([[lam], t])
        res = float(np.max(np.abs(sys0.with_hamiltonian(H).evaluate(x))))
        scale = 1 + float(np.max(np.abs(psi)))
        if res <= tol * scale:
            return MonodromySeed(H, lam, t, res, int(rank), attempt)
    raise SeedError(f"could not build a seed after {max_tries} attempts")


def slice_seed(system: SliceSystem, seed: int) -> MonodromySeed:
    """A random chart point and slices moved to pass through it.

    Only the column of the constant coordinate ``psi_[d] = 1`` changes.
    """
    rng = generator(seed)
    ev = system.ev
    t = rng.normal(size=len(ev.variables)) + 1j * rng.normal(size=len(ev.variables))
    gamma = system.random_parameters(rng)
    ref = ev.support.index(first_n(ev.d))
    gamma[:, ref] -= gamma @ ev.values(t[None, :])[0]
    res = float(np.max(np.abs(system.with_hamiltonian(gamma).evaluate(t))))
    return MonodromySeed(gamma, None, t, res, len(t), 1)
