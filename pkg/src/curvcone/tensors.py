"""Multilinear algebra over a fixed m-dimensional inner-product space.

Everything in this package happens in one orthonormal frame of T = R^m.
This module provides the tensor types (quadratic forms, bivectors, biforms
on Lambda^2(T), elements of S^2(S^2(T)), totally symmetric 4-forms) and the
exact-algebra operations connecting them: wedge squares, squares of
quadratic forms in the curvature sense, the orthogonal splitting of a
biform into its curvature part (first Bianchi identity) and its Lambda^4
part, and the splitting of an S^2(S^2) tensor into a symmetric 4-form plus
a curvature tensor.

Conventions, fixed once and used by every other module:

* ``{e_i ^ e_j : i < j}`` in lexicographic order is an orthonormal basis of
  Lambda^2(T).  A biform is its symmetric N x N coefficient matrix,
  N = m(m-1)/2, and the pairing of biforms is the plain Frobenius product
  in this basis, so ``<(x^y)⊗(x^y), (x^y)⊗(x^y)> = 1`` for orthonormal x, y.
* S^2(T) carries the orthonormal basis ``{e_i⊗e_i}`` followed by
  ``{(e_i⊗e_j + e_j⊗e_i)/sqrt(2) : i < j}``; D = m(m+1)/2.  The inner
  product on S^2(S^2(T)) is then Frobenius on D x D matrices.
* A totally symmetric 4-form is stored as its full m^4 coefficient array;
  the quartic map ``x -> E(x,x,x,x)`` determines it and is the canonical
  accessor.  Its inner product is the full 4-index contraction.
* Wedge products expand multilinearly with no shuffle normalization:
  ``(e1^e2 + e3^e4) ^ (e1^e2 + e3^e4) = 2 e1^e2^e3^e4``.

All values are immutable after construction; every operation is a pure
function, so concurrent use needs no coordination.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "Sym2Form",
    "Bivector",
    "FourVector",
    "Biform",
    "AlgebraicCurvatureTensor",
    "PhiTensor",
    "Sym4Form",
    "pair_indices",
    "quad_indices",
    "sym2_basis",
    "wedge_product",
    "wedge_square",
    "is_simple",
    "kn_square",
    "bianchi_project",
    "curvature_from_biform",
    "phi_from_forms",
    "decompose_phi",
    "recompose_phi",
    "symmetric_square",
    "sectional",
    "pairing",
    "sphere_tensor",
    "product_s2_tensor",
    "volume_form",
    "conjugate",
    "tensor_to_json",
    "tensor_from_json",
]

DEFAULT_TOL = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# index bookkeeping for the wedge bases

@lru_cache(maxsize=None)
def pair_indices(dim):
    """Row/column arrays of the lexicographic pairs (i, j), i < j."""
    iu = np.triu_indices(dim, 1)
    return _frozen(iu[0], int), _frozen(iu[1], int)


@lru_cache(maxsize=None)
def _pair_lookup(dim):
    """(index, sign) tables: index[i, j] of the pair containing i, j."""
    idx = np.zeros((dim, dim), dtype=int)
    sgn = np.zeros((dim, dim))
    for p, (i, j) in enumerate(zip(*pair_indices(dim))):
        idx[i, j] = idx[j, i] = p
        sgn[i, j] = 1.0
        sgn[j, i] = -1.0
    return _frozen(idx, int), _frozen(sgn)


@lru_cache(maxsize=None)
def quad_indices(dim):
    """Lexicographic quadruples (i, j, k, l) indexing Lambda^4."""
    return tuple(combinations(range(dim), 4))


@lru_cache(maxsize=None)
def _lambda4_embedding(dim):
    """Sparse entries of each basis 4-vector embedded as a biform.

    e_i^e_j^e_k^e_l acts on pairs of bivectors through the antisymmetric
    extension; its biform matrix has the six entries
    B[(ij),(kl)] = +1, B[(ik),(jl)] = -1, B[(il),(jk)] = +1 (and symmetric
    mirrors), hence Frobenius norm sqrt(6).
    """
    idx, _ = _pair_lookup(dim)
    out = []
    for (i, j, k, l) in quad_indices(dim):
        rows = [idx[i, j], idx[i, k], idx[i, l]]
        cols = [idx[k, l], idx[j, l], idx[j, k]]
        vals = [1.0, -1.0, 1.0]
        r = np.array(rows + cols)
        c = np.array(cols + rows)
        v = np.array(vals + vals)
        out.append((r, c, v))
    return tuple(out)


@lru_cache(maxsize=None)
def sym2_basis(dim):
    """Orthonormal basis of S^2(T) as a (D, dim, dim) stack.

    Diagonal elements e_i⊗e_i first, then (e_i⊗e_j + e_j⊗e_i)/sqrt(2) in
    lexicographic pair order.  Orthonormal under the Frobenius product.
    """
    D = dim * (dim + 1) // 2
    basis = np.zeros((D, dim, dim))
    for i in range(dim):
        basis[i, i, i] = 1.0
    for p, (i, j) in enumerate(zip(*pair_indices(dim))):
        basis[dim + p, i, j] = basis[dim + p, j, i] = 1.0 / np.sqrt(2.0)
    return _frozen(basis)


def sym2_coords(s):
    """Coordinates of a symmetric matrix in the sym2_basis frame."""
    s = np.asarray(s, dtype=float)
    return np.einsum("uab,ab->u", sym2_basis(s.shape[0]), s)


def sym2_from_coords(v, dim):
    return np.einsum("u,uab->ab", np.asarray(v, dtype=float), sym2_basis(dim))


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class Sym2Form:
    """Quadratic form on T, stored as its symmetric matrix."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("Sym2Form needs a square matrix")
        if a.shape[0] < 2:
            raise ValueError("Sym2Form needs dim >= 2")
        object.__setattr__(self, "entries", _frozen((a + a.T) / 2.0))

    @property
    def dim(self):
        return self.entries.shape[0]

    @staticmethod
    def identity(dim):
        return Sym2Form(np.eye(dim))

    @staticmethod
    def diagonal(values):
        return Sym2Form(np.diag(np.asarray(values, dtype=float)))

    def __call__(self, x, y=None):
        y = x if y is None else y
        return float(np.asarray(x) @ self.entries @ np.asarray(y))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.entries)[0])

    def norm(self):
        return float(np.linalg.norm(self.entries))


@dataclass(frozen=True)
class Bivector:
    """Element of Lambda^2(T) in the orthonormal {e_i ^ e_j} coordinates."""

    dim: int
    coords: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("Bivector needs dim >= 2")
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        n = self.dim * (self.dim - 1) // 2
        if c.shape[0] != n:
            raise ValueError(f"expected {n} coordinates for dim {self.dim}")
        object.__setattr__(self, "coords", _frozen(c))

    @staticmethod
    def wedge(x, y):
        """x ^ y for vectors x, y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        m = x.shape[0]
        full = np.outer(x, y) - np.outer(y, x)
        return Bivector(m, full[np.triu_indices(m, 1)])

    def as_matrix(self):
        """Full antisymmetric m x m matrix of the bivector."""
        m = self.dim
        a = np.zeros((m, m))
        i, j = pair_indices(m)
        a[i, j] = self.coords
        a[j, i] = -self.coords
        return a

    def norm(self):
        return float(np.linalg.norm(self.coords))


@dataclass(frozen=True)
class FourVector:
    """Element of Lambda^4(T) over the lexicographic {e_i^e_j^e_k^e_l} basis."""

    dim: int
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        n = len(quad_indices(self.dim))
        if c.shape[0] != n:
            raise ValueError(f"expected {n} coordinates for dim {self.dim}")
        object.__setattr__(self, "coords", _frozen(c))

    @staticmethod
    def zero(dim):
        return FourVector(dim, np.zeros(len(quad_indices(dim))))

    def norm(self):
        return float(np.linalg.norm(self.coords))


@dataclass(frozen=True)
class Biform:
    """Symmetric bilinear form on Lambda^2(T) in the wedge basis."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("Biform needs a square matrix")
        object.__setattr__(self, "matrix", _frozen((a + a.T) / 2.0))
        m = _dim_from_pairs(a.shape[0])
        object.__setattr__(self, "_dim", m)

    @property
    def dim(self):
        return self._dim

    def norm(self):
        return float(np.linalg.norm(self.matrix))

    def __add__(self, other):
        return Biform(self.matrix + other.matrix)

    def __sub__(self, other):
        return Biform(self.matrix - other.matrix)

    def __mul__(self, c):
        return Biform(self.matrix * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return Biform(-self.matrix)


def _dim_from_pairs(n):
    m = int(round((1 + np.sqrt(1 + 8 * n)) / 2))
    if m * (m - 1) // 2 != n:
        raise ValueError(f"{n} is not m(m-1)/2 for any integer m")
    return m


@dataclass(frozen=True)
class AlgebraicCurvatureTensor:
    """Biform orthogonal to Lambda^4, i.e. satisfying the first Bianchi identity."""

    biform: Biform

    @property
    def dim(self):
        return self.biform.dim

    @property
    def matrix(self):
        return self.biform.matrix

    def norm(self):
        return self.biform.norm()

    def __add__(self, other):
        return AlgebraicCurvatureTensor(self.biform + other.biform)

    def __sub__(self, other):
        return AlgebraicCurvatureTensor(self.biform - other.biform)

    def __mul__(self, c):
        return AlgebraicCurvatureTensor(self.biform * c)

    __rmul__ = __mul__

    def __neg__(self):
        return AlgebraicCurvatureTensor(-self.biform)

    def evaluate(self, x, y, z, w):
        """Rm(x, y, z, w) through the wedge coordinates."""
        a = Bivector.wedge(x, y).coords
        b = Bivector.wedge(z, w).coords
        return float(a @ self.matrix @ b)


def curvature_from_biform(b, tol=DEFAULT_TOL):
    """Validate the Bianchi invariant and wrap a biform as a curvature tensor."""
    if isinstance(b, AlgebraicCurvatureTensor):
        return b
    if not isinstance(b, Biform):
        b = Biform(b)
    scale = b.norm()
    if scale > 0.0:
        _, l4 = bianchi_project(b)
        if l4.norm() > tol * scale:
            raise ValueError(
                f"biform violates the first Bianchi identity: "
                f"residual {l4.norm():.3e} > {tol:.1e} * {scale:.3e}"
            )
    return AlgebraicCurvatureTensor(b)


@dataclass(frozen=True)
class PhiTensor:
    """Element of S^2(S^2(T)) as a symmetric D x D matrix in sym2_basis."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        D = self.dim * (self.dim + 1) // 2
        if a.shape != (D, D):
            raise ValueError(f"expected a {D} x {D} matrix for dim {self.dim}")
        object.__setattr__(self, "matrix", _frozen((a + a.T) / 2.0))

    def evaluate(self, x, y, z, w):
        u = sym2_coords(_sym_pair(x, y))
        v = sym2_coords(_sym_pair(z, w))
        return float(u @ self.matrix @ v)

    def as_tensor4(self):
        bs = sym2_basis(self.dim)
        return np.einsum("uv,uab,vcd->abcd", self.matrix, bs, bs)

    @staticmethod
    def from_tensor4(t4):
        t4 = np.asarray(t4, dtype=float)
        dim = t4.shape[0]
        bs = sym2_basis(dim)
        return PhiTensor(dim, np.einsum("abcd,uab,vcd->uv", t4, bs, bs))

    def norm(self):
        return float(np.linalg.norm(self.matrix))

    def __add__(self, other):
        return PhiTensor(self.dim, self.matrix + other.matrix)

    def __sub__(self, other):
        return PhiTensor(self.dim, self.matrix - other.matrix)

    def __mul__(self, c):
        return PhiTensor(self.dim, self.matrix * float(c))

    __rmul__ = __mul__


def _sym_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (np.outer(x, y) + np.outer(y, x)) / 2.0


@dataclass(frozen=True)
class Sym4Form:
    """Totally symmetric 4-form, stored as the full m^4 coefficient array.

    The quartic x -> E(x,x,x,x) describes the form completely; the stored
    array gives full multilinear access.  Construction symmetrizes, so
    total symmetry holds exactly.
    """

    dim: int
    tensor: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=float)
        if t.shape != (self.dim,) * 4:
            raise ValueError(f"expected shape {(self.dim,) * 4}")
        object.__setattr__(self, "tensor", _frozen(_symmetrize4(t)))

    @staticmethod
    def zero(dim):
        return Sym4Form(dim, np.zeros((dim,) * 4))

    def quartic(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.einsum("abcd,a,b,c,d->", self.tensor, x, x, x, x))

    def multilinear(self, x, y, z, w):
        return float(np.einsum("abcd,a,b,c,d->", self.tensor,
                               np.asarray(x, float), np.asarray(y, float),
                               np.asarray(z, float), np.asarray(w, float)))

    def norm(self):
        return float(np.linalg.norm(self.tensor))

    def __add__(self, other):
        return Sym4Form(self.dim, self.tensor + other.tensor)

    def __sub__(self, other):
        return Sym4Form(self.dim, self.tensor - other.tensor)

    def __mul__(self, c):
        return Sym4Form(self.dim, self.tensor * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return Sym4Form(self.dim, -self.tensor)


_PERMS4 = [
    (0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 1, 3), (0, 2, 3, 1), (0, 3, 1, 2),
    (0, 3, 2, 1), (1, 0, 2, 3), (1, 0, 3, 2), (1, 2, 0, 3), (1, 2, 3, 0),
    (1, 3, 0, 2), (1, 3, 2, 0), (2, 0, 1, 3), (2, 0, 3, 1), (2, 1, 0, 3),
    (2, 1, 3, 0), (2, 3, 0, 1), (2, 3, 1, 0), (3, 0, 1, 2), (3, 0, 2, 1),
    (3, 1, 0, 2), (3, 1, 2, 0), (3, 2, 0, 1), (3, 2, 1, 0),
]


def _symmetrize4(t):
    return sum(np.transpose(t, p) for p in _PERMS4) / 24.0


# ---------------------------------------------------------------------------
# wedge operations

def wedge_product(phi: Bivector, psi: Bivector) -> FourVector:
    """The 4-vector phi ^ psi (bivectors commute, so this is symmetric).

    Coefficient on e_i^e_j^e_k^e_l (i<j<k<l): the signed sum over the three
    splittings of {i,j,k,l} into two increasing pairs, taken for both factor
    orders.  No shuffle normalization, so cross terms of a square double.
    """
    if phi.dim != psi.dim:
        raise ValueError("dim mismatch")
    m = phi.dim
    quads = quad_indices(m)
    out = np.zeros(len(quads))
    if m < 4:
        return FourVector(m, out)
    idx, _ = _pair_lookup(m)
    a, b = phi.coords, psi.coords
    for q, (i, j, k, l) in enumerate(quads):
        out[q] = (
            a[idx[i, j]] * b[idx[k, l]]
            - a[idx[i, k]] * b[idx[j, l]]
            + a[idx[i, l]] * b[idx[j, k]]
            + b[idx[i, j]] * a[idx[k, l]]
            - b[idx[i, k]] * a[idx[j, l]]
            + b[idx[i, l]] * a[idx[j, k]]
        )
    return FourVector(m, out)


def wedge_square(phi: Bivector) -> FourVector:
    """phi ^ phi; zero exactly on simple bivectors (Pluecker relations)."""
    return wedge_product(phi, phi)


def is_simple(phi: Bivector, tol: float) -> bool:
    """Whether phi is a wedge of two vectors, up to tol * |phi|^2."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    n2 = float(phi.coords @ phi.coords)
    return wedge_square(phi).norm() <= tol * n2


# ---------------------------------------------------------------------------
# curvature-type constructions

def kn_square(s: Sym2Form) -> AlgebraicCurvatureTensor:
    """Curvature tensor R(X,Y,Z,W) = s(X,Z)s(Y,W) - s(X,W)s(Y,Z).

    In the wedge basis this is the second compound matrix of s; for
    s = diag(lambda) it is sum_{i<j} lambda_i lambda_j (e_i^e_j)⊗(e_i^e_j)
    exactly.
    """
    a = s.entries
    i, j = pair_indices(s.dim)
    b = (a[np.ix_(i, i)] * a[np.ix_(j, j)] - a[np.ix_(i, j)] * a[np.ix_(j, i)])
    return AlgebraicCurvatureTensor(Biform(b))


def bianchi_project(b: Biform):
    """Orthogonal split of a biform into its curvature and Lambda^4 parts.

    Returns (AlgebraicCurvatureTensor, FourVector).  The two parts are
    orthogonal and sum to the input; the projection is idempotent.
    """
    if isinstance(b, AlgebraicCurvatureTensor):
        b = b.biform
    m = b.dim
    mat = b.matrix
    quads = quad_indices(m)
    coeffs = np.zeros(len(quads))
    w = np.zeros_like(mat)
    for q, (r, c, v) in enumerate(_lambda4_embedding(m)):
        coeffs[q] = float(np.dot(mat[r, c], v)) / 6.0
        w[r, c] += coeffs[q] * v
    return AlgebraicCurvatureTensor(Biform(mat - w)), FourVector(m, coeffs)


def phi_from_forms(forms) -> PhiTensor:
    """Phi = sum_i s_i ⊗ s_i for quadratic forms s_i, as an S^2(S^2) element."""
    forms = list(forms)
    if not forms:
        raise ValueError("no forms")
    dim = forms[0].dim
    if any(f.dim != dim for f in forms):
        raise ValueError("forms must share dim")
    D = dim * (dim + 1) // 2
    mat = np.zeros((D, D))
    for f in forms:
        v = sym2_coords(f.entries)
        mat += np.outer(v, v)
    return PhiTensor(dim, mat)


def decompose_phi(phi: PhiTensor):
    """Split Phi into its total symmetrization E and a curvature tensor Rm.

    E(X,Y,Z,W) = (Phi(X,Y,Z,W) + Phi(Y,Z,X,W) + Phi(Z,X,Y,W)) / 3 and
    Rm(X,Y,Z,W) = Phi(X,Z,Y,W) - Phi(X,W,Y,Z); recompose_phi inverts the
    pair exactly.
    """
    t4 = phi.as_tensor4()
    e4 = (t4 + np.transpose(t4, (1, 2, 0, 3)) + np.transpose(t4, (2, 0, 1, 3))) / 3.0
    # transpose axes are inverse permutations: (0,2,1,3) reads T[a,c,b,d],
    # (0,2,3,1) reads T[a,d,b,c]
    rm4 = np.transpose(t4, (0, 2, 1, 3)) - np.transpose(t4, (0, 2, 3, 1))
    i, j = pair_indices(phi.dim)
    bmat = rm4[i[:, None], j[:, None], i[None, :], j[None, :]]
    return Sym4Form(phi.dim, e4), AlgebraicCurvatureTensor(Biform(bmat))


def _curvature_tensor4(rm: AlgebraicCurvatureTensor):
    m = rm.dim
    idx, sgn = _pair_lookup(m)
    b = rm.matrix
    return (
        sgn[:, :, None, None]
        * sgn[None, None, :, :]
        * b[idx[:, :, None, None], idx[None, None, :, :]]
    )


def recompose_phi(e: Sym4Form, rm: AlgebraicCurvatureTensor) -> PhiTensor:
    """Phi(X,Y,Z,W) = E(X,Y,Z,W) + (Rm(X,Z,Y,W) + Rm(X,W,Y,Z)) / 3."""
    if e.dim != rm.dim:
        raise ValueError("dim mismatch")
    r4 = _curvature_tensor4(rm)
    t4 = e.tensor + (np.transpose(r4, (0, 2, 1, 3)) + np.transpose(r4, (0, 2, 3, 1))) / 3.0
    return PhiTensor.from_tensor4(t4)


def symmetric_square(s: Sym2Form) -> Sym4Form:
    """s∘s: the totally symmetric square, with diagonal s(X,X)^2."""
    a = s.entries
    t = (
        np.einsum("ab,cd->abcd", a, a)
        + np.einsum("ac,bd->abcd", a, a)
        + np.einsum("ad,bc->abcd", a, a)
    ) / 3.0
    return Sym4Form(s.dim, t)


def sectional(rm: AlgebraicCurvatureTensor, x, y) -> float:
    """Rm(x,y,x,y) / |x ^ y|^2; errors out on degenerate planes."""
    sigma = Bivector.wedge(x, y)
    n2 = float(sigma.coords @ sigma.coords)
    if np.sqrt(n2) < 1e-12:
        raise ValueError("degenerate plane")
    return float(sigma.coords @ rm.matrix @ sigma.coords) / n2


def pairing(a, b) -> float:
    """Induced inner product of biforms (Frobenius in the wedge basis)."""
    am = a.matrix if hasattr(a, "matrix") else np.asarray(a, dtype=float)
    bm = b.matrix if hasattr(b, "matrix") else np.asarray(b, dtype=float)
    if am.shape != bm.shape:
        raise ValueError("dim mismatch")
    return float(np.sum(am * bm))


def sphere_tensor(dim: int, kappa: float) -> AlgebraicCurvatureTensor:
    """Constant sectional curvature kappa: kappa * kn_square(identity)."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    n = dim * (dim - 1) // 2
    return AlgebraicCurvatureTensor(Biform(np.eye(n) * float(kappa)))


def product_s2_tensor(dim: int) -> AlgebraicCurvatureTensor:
    """Curvature tensor of the standard product of a round 2-sphere with flat
    space: (e_0 ^ e_1)⊗(e_0 ^ e_1)."""
    sigma = Bivector.wedge(np.eye(dim)[0], np.eye(dim)[1])
    return AlgebraicCurvatureTensor(Biform(np.outer(sigma.coords, sigma.coords)))


def volume_form(dim: int = 4) -> Biform:
    """The top 4-vector e_0^e_1^e_2^e_3 embedded as a biform (dim 4 only)."""
    if dim != 4:
        raise ValueError("volume-form biform is defined here for dim 4 only")
    quads = quad_indices(dim)
    coeffs = np.zeros(len(quads))
    coeffs[0] = 1.0
    mat = np.zeros((6, 6))
    r, c, v = _lambda4_embedding(dim)[0]
    mat[r, c] = v
    return Biform(mat)


# ---------------------------------------------------------------------------
# the O(m) action

def _check_orthogonal(q, tol=DEFAULT_TOL):
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("rotation must be a square matrix")
    if np.max(np.abs(q @ q.T - np.eye(q.shape[0]))) > tol:
        raise ValueError("matrix is not orthogonal within tolerance")
    return q


def _wedge_rep(q):
    """Induced orthogonal map on Lambda^2 coordinates: column (kl) is the
    coordinate vector of (q e_k) ^ (q e_l)."""
    m = q.shape[0]
    i, j = pair_indices(m)
    return q[np.ix_(i, i)] * q[np.ix_(j, j)] - q[np.ix_(i, j)] * q[np.ix_(j, i)]


def conjugate(t, q, tol=DEFAULT_TOL):
    """Pull back a tensor along an orthogonal map q of T.

    conjugate(kn_square(s), q) == kn_square(q^T s q); norms are preserved.
    Supports Biform, AlgebraicCurvatureTensor, Sym4Form and PhiTensor.
    """
    q = _check_orthogonal(q, tol)
    if isinstance(t, AlgebraicCurvatureTensor):
        w = _wedge_rep(q)
        return AlgebraicCurvatureTensor(Biform(w.T @ t.matrix @ w))
    if isinstance(t, Biform):
        w = _wedge_rep(q)
        return Biform(w.T @ t.matrix @ w)
    if isinstance(t, Sym4Form):
        out = np.einsum("abcd,ap,bq,cr,ds->pqrs", t.tensor, q, q, q, q)
        return Sym4Form(t.dim, out)
    if isinstance(t, PhiTensor):
        bs = sym2_basis(t.dim)
        s = np.einsum("uab,ac,vcd,bd->uv", bs, q, bs, q)
        return PhiTensor(t.dim, s.T @ t.matrix @ s)
    raise TypeError(f"cannot conjugate {type(t).__name__}")


# ---------------------------------------------------------------------------
# serialization

_KINDS = {"sym2", "biform", "phi", "sym4"}


def tensor_to_json(t) -> str:
    """Serialize a tensor as {"dim", "kind", "data"} with exact float round trip."""
    if isinstance(t, Sym2Form):
        kind, dim, data = "sym2", t.dim, t.entries
    elif isinstance(t, AlgebraicCurvatureTensor):
        kind, dim, data = "biform", t.dim, t.matrix
    elif isinstance(t, Biform):
        kind, dim, data = "biform", t.dim, t.matrix
    elif isinstance(t, PhiTensor):
        kind, dim, data = "phi", t.dim, t.matrix
    elif isinstance(t, Sym4Form):
        kind, dim, data = "sym4", t.dim, t.tensor
    else:
        raise TypeError(f"cannot serialize {type(t).__name__}")
    return json.dumps(
        {"dim": dim, "kind": kind, "data": np.asarray(data).reshape(-1).tolist()}
    )


def tensor_from_json(text: str):
    """Inverse of tensor_to_json."""
    obj = json.loads(text)
    try:
        dim = int(obj["dim"])
        kind = obj["kind"]
        data = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed tensor document: {exc}") from exc
    if kind not in _KINDS:
        raise ValueError(f"unknown tensor kind {kind!r}")
    if kind == "sym2":
        return Sym2Form(data.reshape(dim, dim))
    if kind == "biform":
        n = dim * (dim - 1) // 2
        return Biform(data.reshape(n, n))
    if kind == "phi":
        d = dim * (dim + 1) // 2
        return PhiTensor(dim, data.reshape(d, d))
    return Sym4Form(dim, data.reshape((dim,) * 4))
