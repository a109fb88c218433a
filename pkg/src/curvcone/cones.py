"""Membership, separation and bound computations for curvature-tensor cones.

Five families of checks live here:

* curvature-operator spectra (positivity on Lambda^2),
* extremal sectional curvature over 2-planes,
* conic-hull membership for the cone generated by squares of simple unit
  bivectors, with explicit certificates either way,
* the analogous sum-of-squares cones in S^2(S^2(T)) and S^4(T) whose
  generators are squares of positive semidefinite forms,
* the dimension-4 volume-form shift test for positive sectional curvature.

The conic solver is a fully corrective Frank-Wolfe loop: each round asks a
linear maximization oracle (LMO) for the generator best aligned with the
current residual, refits all collected generators by nonnegative least
squares, then lets every generator slide locally (a warm-started ascent on
its own alignment objective) before the next refit.  The residual never
increases, and a stalled LMO yields a candidate separating functional.
Non-membership is only reported after that functional passes an independent
re-verification; otherwise the verdict is "inconclusive".

The open cones of strictly positive decompositions cannot be decided at
floating-point scale, so membership is computed in the closures and the
achieved strictness margin (the smallest eigenvalue over the generators of
the decomposition) is reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from .tensors import (
    AlgebraicCurvatureTensor,
    Biform,
    Bivector,
    PhiTensor,
    Sym2Form,
    Sym4Form,
    pair_indices,
    sphere_tensor,
    sym2_coords,
    sym2_from_coords,
    symmetric_square,
    volume_form,
)

__all__ = [
    "SolverConfig",
    "ConicCertificate",
    "curvature_operator_spectrum",
    "min_sectional",
    "max_sectional",
    "cosec_membership",
    "cosec_lower_bound",
    "cosec_upper_bound",
    "phi_positive_membership",
    "sym4_sos_membership",
    "quartic_min",
    "thorpe_shift",
    "dual_separation",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the optimization-based checks.

    Results are deterministic given rng_seed; tol is an absolute residual /
    verdict tolerance (exact-algebra identities elsewhere use 1e-10, the
    optimization verdicts here default to 1e-6).  strictness_margin is the
    positive-definiteness margin demanded of decomposition generators for
    the open sum-of-squares cones.
    """

    max_iterations: int = 400
    tol: float = 1e-6
    multistart_count: int = 32
    rng_seed: int = 0
    strictness_margin: float = 0.0

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class ConicCertificate:
    """Outcome of a conic membership query.

    verdict is "member", "non_member" or "inconclusive".  A member carries
    a decomposition [(weight, generator), ...] whose conic combination
    reconstructs the input within `residual`.  A non-member carries a unit
    dual functional with nonnegative pairing against the generators (within
    tol) and strictly negative pairing against the input; boundary cases of
    the open cones (zero tensor) report non_member with no dual, since no
    strict separator exists there.
    """

    verdict: str
    residual: float
    iterations: int
    decomposition: list | None = None
    dual_functional: object | None = None
    margin: float | None = None
    dual_min_pairing: float | None = None
    dual_input_pairing: float | None = None
    trace: list = field(default_factory=list)

    def to_jsonable(self):
        out = {
            "verdict": self.verdict,
            "residual": self.residual,
            "iterations": self.iterations,
        }
        if self.margin is not None:
            out["margin"] = self.margin
        if self.decomposition is not None:
            out["decomposition"] = [
                {
                    "weight": w,
                    "generator": np.asarray(
                        g.coords if isinstance(g, Bivector) else g.entries
                    ).reshape(-1).tolist(),
                    "generator_kind": "bivector" if isinstance(g, Bivector) else "sym2",
                }
                for w, g in self.decomposition
            ]
        if self.dual_functional is not None:
            d = self.dual_functional
            data = d.matrix if hasattr(d, "matrix") else d.tensor
            out["dual_functional"] = np.asarray(data).reshape(-1).tolist()
            out["dual_min_pairing"] = self.dual_min_pairing
            out["dual_input_pairing"] = self.dual_input_pairing
        return out

    def trace_csv(self):
        lines = ["iteration,residual,step_size"]
        lines += [f"{i},{r!r},{s!r}" for i, r, s in self.trace]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# spectra

def curvature_operator_spectrum(rm: AlgebraicCurvatureTensor):
    """Eigenvalues of the biform on Lambda^2, ascending.

    The tensor lies in the cone of sums of squares of bivectors exactly
    when the smallest eigenvalue is nonnegative.
    """
    return [float(v) for v in np.linalg.eigvalsh(rm.matrix)]


# ---------------------------------------------------------------------------
# extremization of a biform over simple unit bivectors (planes)

def _dim_from_pairs(n):
    return int(round((1 + np.sqrt(1 + 8 * n)) / 2))


def _plane_from_bivector_matrix(a):
    """Dominant rotation plane of an antisymmetric matrix, via real Schur."""
    t, qm = scipy.linalg.schur(a, output="real")
    best, pair = -1.0, (0, 1)
    for k in range(a.shape[0] - 1):
        b = abs(t[k + 1, k])
        if b > best:
            best, pair = b, (k, k + 1)
    return qm[:, pair[0]].copy(), qm[:, pair[1]].copy()


def _batch_values(works, X, Y, I, J):
    full = X[:, :, None] * Y[:, None, :] - Y[:, :, None] * X[:, None, :]
    sig = full[:, I, J]
    return np.einsum("bp,bpq,bq->b", sig, works, sig), sig


def _batch_half_step(works, X, Y, I, J, update_first):
    """One exact eigen half-step for every start in the batch.

    Fixing one leg z of each plane, the objective is the quadratic form
    w^T (Wz^T work Wz) w over unit w orthogonal to z; the z direction is
    pushed away with a large penalty before the eigen solve.
    """
    B, m = X.shape
    n = len(I)
    Z = Y if update_first else X
    W = np.zeros((B, n, m))
    rows = np.arange(n)
    W[:, rows, I] = Z[:, J]
    W[:, rows, J] = -Z[:, I]
    C = np.einsum("bpa,bpq,bqc->bac", W, works, W)
    C = (C + np.transpose(C, (0, 2, 1))) / 2.0
    big = 10.0 * (1.0 + np.abs(C).max(axis=(1, 2)))
    C = C - big[:, None, None] * Z[:, :, None] * Z[:, None, :]
    _, vecs = np.linalg.eigh(C)
    cand = vecs[:, :, -1]
    cand = cand - Z * np.sum(cand * Z, axis=1, keepdims=True)
    nrm = np.linalg.norm(cand, axis=1, keepdims=True)
    bad = nrm[:, 0] < 1e-14
    cand = np.where(bad[:, None], X if update_first else Y, cand / np.maximum(nrm, 1e-300))
    if update_first:
        return cand, Y
    return X, cand


def _plane_ascent_batch(works, X, Y, I, J, sweeps):
    """Monotone batched alternating ascent; keeps the best plane per start.

    works is (B, N, N): each start may carry its own objective matrix.
    """
    val, _ = _batch_values(works, X, Y, I, J)
    for _ in range(sweeps):
        for update_first in (True, False):
            nx, ny = _batch_half_step(works, X, Y, I, J, update_first)
            nval, _ = _batch_values(works, nx, ny, I, J)
            better = nval > val
            X = np.where(better[:, None], nx, X)
            Y = np.where(better[:, None], ny, Y)
            val = np.where(better, nval, val)
    return val, X, Y


def _plane_extremum(mat, mode, rng, multistarts, sweeps=14):
    """Extremize sigma^T mat sigma over unit simple bivectors sigma = x ^ y.

    For dim <= 3 every bivector is simple and this is an eigenvalue
    problem; beyond that a batched multistart alternating ascent runs, with
    coordinate planes and the dominant rotation plane of the top
    eigen-bivector among the starts.  Deterministic given the rng.
    """
    mat = (mat + mat.T) / 2.0
    dim = _dim_from_pairs(mat.shape[0])
    work = mat if mode == "max" else -mat

    if dim <= 3:
        vals, vecs = np.linalg.eigh(work)
        if dim == 2:
            x, y = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        else:
            x, y = _plane_from_bivector_matrix(Bivector(3, vecs[:, -1]).as_matrix())
        val = float(vals[-1])
        return (val if mode == "max" else -val), x, y

    I, J = pair_indices(dim)
    eye = np.eye(dim)
    xs, ys = [], []
    vals, vecs = np.linalg.eigh(work)
    sx, sy = _plane_from_bivector_matrix(Bivector(dim, vecs[:, -1]).as_matrix())
    xs.append(sx)
    ys.append(sy)
    for i, j in zip(I, J):
        xs.append(eye[i])
        ys.append(eye[j])
    g = rng.standard_normal((multistarts, dim, 2))
    q, _ = np.linalg.qr(g)
    xs.extend(q[:, :, 0])
    ys.extend(q[:, :, 1])
    X = np.asarray(xs)
    Y = np.asarray(ys)

    works = np.broadcast_to(work, (X.shape[0],) + work.shape)
    val, X, Y = _plane_ascent_batch(works, X, Y, I, J, sweeps)
    k = int(np.argmax(val))
    out = float(val[k])
    return (out if mode == "max" else -out), X[k], Y[k]


def min_sectional(rm: AlgebraicCurvatureTensor, config: SolverConfig | None = None):
    """Smallest sectional curvature found over the 2-plane Grassmannian.

    Batched multistart alternating ascent; returns (value, (x, y)) with the
    witnessing orthonormal plane.  The value never exceeds the sectional
    curvature of any probed plane.
    """
    config = config or SolverConfig()
    rng = np.random.default_rng(config.rng_seed)
    val, x, y = _plane_extremum(rm.matrix, "min", rng, config.multistart_count,
                                sweeps=30)
    return val, (x, y)


def max_sectional(rm: AlgebraicCurvatureTensor, config: SolverConfig | None = None):
    config = config or SolverConfig()
    rng = np.random.default_rng(config.rng_seed)
    val, x, y = _plane_extremum(rm.matrix, "max", rng, config.multistart_count,
                                sweeps=30)
    return val, (x, y)


# ---------------------------------------------------------------------------
# fully corrective conic Frank-Wolfe with generator sliding

class _ConicFW:
    """Frank-Wolfe over the conic hull of a generator family.

    target: coordinate vector of the tensor to decompose.
    lmo(residual_vec) -> (value, vec, payload): unit-norm generator best
    aligned with the residual.
    slider(residual_vec, atoms, payloads, weights) -> [(vec, payload), ...]:
    locally improved copies of the active generators, re-ascended against
    the residual plus their own contribution.  Proposals are added next to
    the originals and the nonnegative refit keeps whichever win, so the
    residual stays monotone.
    """

    def __init__(self, target, lmo, config, initial_atoms=(), slider=None):
        self.target = np.asarray(target, dtype=float)
        self.lmo = lmo
        self.slider = slider
        self.config = config
        self.scale = float(np.linalg.norm(self.target))
        self.atoms = []
        self.payloads = []
        self.weights = np.zeros(0)
        self.trace = []
        self.iterations = 0
        for vec, payload in initial_atoms:
            self._add_atom(vec, payload, refit=False)
        if self.atoms:
            self._refit()

    def _add_atom(self, vec, payload, refit=True):
        self.atoms.append(np.asarray(vec, dtype=float))
        self.payloads.append(payload)
        self.weights = np.append(self.weights, 0.0)
        if refit:
            self._refit()

    def _refit(self):
        a = np.column_stack(self.atoms)
        w, _ = scipy.optimize.nnls(a, self.target)
        keep = w > 0.0
        if keep.any():
            self.atoms = [v for v, k in zip(self.atoms, keep) if k]
            self.payloads = [p for p, k in zip(self.payloads, keep) if k]
            self.weights = w[keep]
        else:
            self.atoms, self.payloads = [], []
            self.weights = np.zeros(0)

    def _slide_pass(self):
        if self.slider is None or not self.atoms:
            return
        proposals = self.slider(self.residual_vec(), self.atoms,
                                self.payloads, self.weights)
        for vec, payload in proposals:
            self._add_atom(vec, payload, refit=False)
        self._refit()

    def residual_vec(self):
        if not self.atoms:
            return self.target.copy()
        return self.target - np.column_stack(self.atoms) @ self.weights

    def residual_norm(self):
        return float(np.linalg.norm(self.residual_vec()))

    def _polish(self, rounds=200):
        """Slide-and-refit without new LMO atoms until improvement dies."""
        if self.slider is None:
            return
        prev = self.residual_norm()
        for _ in range(rounds):
            if prev <= self.config.tol:
                break
            self._slide_pass()
            r = self.residual_norm()
            if prev - r <= 1e-16 * max(1.0, self.scale):
                break
            prev = r

    def run(self, budget=None):
        cfg = self.config
        budget = cfg.max_iterations if budget is None else budget
        stall_tol = 1e-12 * max(1.0, self.scale)
        prev = np.inf
        plateau = 0
        reason = "exhausted"
        self.iterations = 0
        for it in range(budget):
            self.iterations = it + 1
            r = self.residual_norm()
            if r > prev + 1e-10 * max(1.0, self.scale):
                raise AssertionError(
                    f"Frank-Wolfe residual increased: {prev:.3e} -> {r:.3e}"
                )
            plateau = plateau + 1 if prev - r <= 1e-15 * max(1.0, self.scale) else 0
            prev = r
            if r <= cfg.tol:
                self.trace.append((it, r, 0.0))
                reason = "member"
                break
            value, vec, payload = self.lmo(self.residual_vec())
            if value <= stall_tol:
                self.trace.append((it, r, 0.0))
                reason = "stalled"
                break
            self._add_atom(vec, payload)
            self._slide_pass()
            if plateau >= 15:
                self.trace.append((it, r, 0.0))
                reason = "plateau"
                break
            step = self.weights[-1] if len(self.weights) else 0.0
            self.trace.append((it, r, float(step)))
        return reason, self.residual_norm()


def _solve_cone(fw, joint_polish, config):
    """Drive Frank-Wolfe in chunks with the joint polish interleaved.

    Each chunk of LMO steps globalizes (new atoms escape the polish's local
    minima); the polish then refines all generators at once.  Stops on
    membership, a stalled LMO, an exhausted budget, or no material progress
    across three consecutive rounds.
    """
    chunk = 20
    remaining = config.max_iterations
    best = np.inf
    stale = 0
    total = 0
    reason = "exhausted"
    while remaining > 0:
        reason, resid = fw.run(min(chunk, remaining))
        total += fw.iterations
        remaining -= fw.iterations
        if resid <= config.tol:
            fw.iterations = total
            return "member", resid
        if joint_polish is not None:
            joint_polish(fw)
            resid = fw.residual_norm()
            if resid <= config.tol:
                fw.iterations = total
                return "member", resid
        else:
            fw._polish(rounds=40)
            resid = fw.residual_norm()
            if resid <= config.tol:
                fw.iterations = total
                return "member", resid
        stale = stale + 1 if resid > 0.995 * best else 0
        best = min(best, resid)
        if reason == "stalled" or stale >= 3:
            break
    fw.iterations = total
    return reason, fw.residual_norm()


# -- joint refinement of a whole decomposition -----------------------------
#
# Frank-Wolfe locates the support; once the residual is small the exact
# positions are found by smooth least squares over all generator legs at
# once, weights absorbed into the leg scales (so the conic constraint is
# free).  Results are only accepted when they improve the residual.

def _joint_polish_planes(target_mat, payloads, weights, dim, maxiter=600):
    I, J = pair_indices(dim)
    k = len(payloads)
    c = np.asarray(weights, dtype=float) ** 0.25
    X0 = np.array([p[1][0] for p in payloads]) * c[:, None]
    Y0 = np.array([p[1][1] for p in payloads]) * c[:, None]
    p0 = np.concatenate([X0.reshape(-1), Y0.reshape(-1)])

    def fun(p):
        X = p[: k * dim].reshape(k, dim)
        Y = p[k * dim:].reshape(k, dim)
        full = X[:, :, None] * Y[:, None, :] - Y[:, :, None] * X[:, None, :]
        S = full[:, I, J]
        R = target_mat - S.T @ S
        f = float(np.sum(R * R))
        P = S @ R
        psi = np.zeros((k, dim, dim))
        psi[:, I, J] = P
        psi[:, J, I] = -P
        gx = -4.0 * np.einsum("kij,kj->ki", psi, Y)
        gy = 4.0 * np.einsum("kij,kj->ki", psi, X)
        return f, np.concatenate([gx.reshape(-1), gy.reshape(-1)])

    res = scipy.optimize.minimize(
        fun, p0, jac=True, method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-14},
    )
    X = res.x[: k * dim].reshape(k, dim)
    Y = res.x[k * dim:].reshape(k, dim)
    out = []
    for x, y in zip(X, Y):
        sig = Bivector.wedge(x, y)
        w = float(sig.coords @ sig.coords)
        if w <= 1e-16:
            continue
        sigma = Bivector(dim, sig.coords / np.sqrt(w))
        xe = x / np.linalg.norm(x)
        ye = y - xe * (xe @ y)
        ny = np.linalg.norm(ye)
        if ny < 1e-14:
            continue
        ye /= ny
        out.append((w, sigma, (xe, ye)))
    return out


def _apply_plane_polish(fw, target_mat, dim):
    if not fw.atoms:
        return
    polished = _joint_polish_planes(target_mat, fw.payloads, fw.weights, dim)
    if not polished:
        return
    vec_sum = np.zeros_like(fw.target)
    atoms, payloads, ws = [], [], []
    for w, sigma, legs in polished:
        vec = np.outer(sigma.coords, sigma.coords).reshape(-1)
        atoms.append(vec)
        payloads.append((sigma, legs))
        ws.append(w)
        vec_sum += w * vec
    new_res = float(np.linalg.norm(fw.target - vec_sum))
    if new_res < fw.residual_norm():
        fw.atoms, fw.payloads = atoms, payloads
        fw.weights = np.asarray(ws)
        fw._refit()


def _psd_factor(s, scale=1.0):
    vals, vecs = np.linalg.eigh((s + s.T) / 2.0)
    vals = np.clip(vals * scale, 0.0, None)
    return vecs * np.sqrt(vals)


def _joint_polish_psd(fun_builder, factors, dim, maxiter=600):
    """Shared L-BFGS loop for the PSD-square cones; factors is (k, dim, dim)."""
    k = len(factors)
    p0 = np.asarray(factors, dtype=float).reshape(-1)
    fun = fun_builder(k)
    res = scipy.optimize.minimize(
        fun, p0, jac=True, method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-14},
    )
    return res.x.reshape(k, dim, dim)


# -- the simple-square cone (closure of positive cosectional curvature) ----

def _coordinate_atoms(dim):
    eye = np.eye(dim)
    out = []
    for i, j in zip(*pair_indices(dim)):
        sig = Bivector.wedge(eye[i], eye[j])
        out.append((np.outer(sig.coords, sig.coords).reshape(-1),
                    (sig, (eye[i].copy(), eye[j].copy()))))
    return out


def _cosec_lmo(dim, rng, multistarts, sweeps=12):
    n = dim * (dim - 1) // 2

    def lmo(res_vec):
        g = res_vec.reshape(n, n)
        val, x, y = _plane_extremum(g, "max", rng, multistarts, sweeps=sweeps)
        sigma = Bivector.wedge(x, y)
        vec = np.outer(sigma.coords, sigma.coords).reshape(-1)
        return val, vec, (sigma, (x, y))

    return lmo


def _cosec_slider(dim, sweeps=6):
    n = dim * (dim - 1) // 2
    I, J = pair_indices(dim)

    def slider(res_vec, atoms, payloads, weights):
        works = np.empty((len(atoms), n, n))
        for j, (a, mu) in enumerate(zip(atoms, weights)):
            g = (res_vec + mu * a).reshape(n, n)
            works[j] = (g + g.T) / 2.0
        X = np.asarray([p[1][0] for p in payloads])
        Y = np.asarray([p[1][1] for p in payloads])
        _, X, Y = _plane_ascent_batch(works, X, Y, I, J, sweeps)
        out = []
        for x, y in zip(X, Y):
            sigma = Bivector.wedge(x, y)
            out.append((np.outer(sigma.coords, sigma.coords).reshape(-1),
                        (sigma, (x, y))))
        return out

    return slider


def cosec_membership(rm: AlgebraicCurvatureTensor,
                     config: SolverConfig | None = None,
                     keep_trace: bool = False) -> ConicCertificate:
    """Certificate for membership in the closed cone generated by squares of
    simple unit bivectors (the minimal closed convex rotation-invariant cone
    containing the product-metric tensor).

    Frank-Wolfe minimizes |rm - sum_j mu_j sigma_j⊗sigma_j| over the conic
    hull; the LMO maximizes the residual pairing over the Grassmannian of
    2-planes by batched multistart ascent.  member iff the final residual is
    at most config.tol; non_member only when the stalled residual yields a
    dual functional that independently re-verifies (nonnegative minimum
    sectional pairing, strictly negative pairing with the input); anything
    else is inconclusive.
    """
    if not isinstance(rm, AlgebraicCurvatureTensor):
        raise ValueError("cosec membership requires a Bianchi-valid curvature tensor")
    config = config or SolverConfig()
    dim = rm.dim
    rng = np.random.default_rng(config.rng_seed)

    target = rm.matrix.reshape(-1)
    if np.linalg.norm(target) == 0.0:
        return ConicCertificate("member", 0.0, 0, decomposition=[])

    fw = _ConicFW(
        target,
        _cosec_lmo(dim, rng, config.multistart_count),
        config,
        initial_atoms=_coordinate_atoms(dim),
        slider=_cosec_slider(dim),
    )
    _, resid = _solve_cone(fw, lambda f: _apply_plane_polish(f, rm.matrix, dim),
                           config)
    trace = fw.trace if keep_trace else []

    if resid <= config.tol:
        decomposition = [
            (float(w), payload[0]) for w, payload in zip(fw.weights, fw.payloads)
        ]
        return ConicCertificate("member", resid, fw.iterations,
                                decomposition=decomposition, trace=trace)

    res = fw.residual_vec()
    n = dim * (dim - 1) // 2
    dual_mat = -(res.reshape(n, n))
    dual_mat = (dual_mat + dual_mat.T) / 2.0
    dual_mat /= np.linalg.norm(dual_mat)
    verify_rng = np.random.default_rng(config.rng_seed + 1)
    min_pair, _, _ = _plane_extremum(dual_mat, "min", verify_rng,
                                     2 * config.multistart_count, sweeps=40)
    input_pair = float(np.sum(dual_mat * rm.matrix))
    if min_pair >= -config.tol and input_pair < -config.tol:
        return ConicCertificate(
            "non_member", resid, fw.iterations,
            dual_functional=Biform(dual_mat),
            dual_min_pairing=float(min_pair),
            dual_input_pairing=input_pair,
            trace=trace,
        )
    return ConicCertificate("inconclusive", resid, fw.iterations, trace=trace)


def dual_separation(rm: AlgebraicCurvatureTensor,
                    config: SolverConfig | None = None):
    """Separating biform for tensors outside the closed cosectional cone.

    Returns G with pairing(G, rm) < 0 and min sectional pairing >= -tol, or
    None when rm is a member (or the verdict stays inconclusive).
    """
    cert = cosec_membership(rm, config)
    if cert.verdict == "non_member":
        return cert.dual_functional
    return None


# -- cosectional curvature bounds by bisection -----------------------------

class _MembershipPool:
    """Feasibility probe along the affine path rm - kappa * Q, sharing the
    atom pool across probes (the cone does not change with kappa)."""

    def __init__(self, rm, config, probe_iterations=60):
        self.rm = rm
        self.config = config
        self.dim = rm.dim
        self.q = sphere_tensor(self.dim, 1.0)
        self.rng = np.random.default_rng(config.rng_seed)
        self.lmo = _cosec_lmo(self.dim, self.rng, config.multistart_count)
        self.slider = _cosec_slider(self.dim)
        self.probe_iterations = probe_iterations
        self.pool = list(_coordinate_atoms(self.dim))

    def _harvest(self, fw):
        for vec, payload in zip(fw.atoms, fw.payloads):
            if all(abs(float(v @ vec)) <= 1.0 - 1e-10 for v, _ in self.pool):
                self.pool.append((vec, payload))
        # keep the shared pool from growing without bound across probes
        if len(self.pool) > 600:
            self.pool = self.pool[:600]

    def feasible(self, kappa):
        shifted = self.rm - kappa * self.q
        target = shifted.matrix.reshape(-1)
        if np.linalg.norm(target) == 0.0:
            return True
        cfg = replace(self.config, max_iterations=self.probe_iterations)
        fw = _ConicFW(target, self.lmo, cfg, initial_atoms=self.pool,
                      slider=self.slider)
        _, resid = fw.run()
        if self.config.tol < resid <= 1e3 * self.config.tol:
            _apply_plane_polish(fw, shifted.matrix, self.dim)
            resid = fw.residual_norm()
        self._harvest(fw)
        return resid <= self.config.tol


def _bisect_sup_feasible(pool, base, iterations=60):
    """sup{kappa : feasible(kappa)} for a predicate that holds on a ray
    (-inf, kappa*]."""
    lo, hi = -base, base
    grow = 0
    while not pool.feasible(lo):
        lo *= 2.0
        grow += 1
        if grow > 40:
            return -np.inf
    grow = 0
    while pool.feasible(hi):
        hi *= 2.0
        grow += 1
        if grow > 40:
            return np.inf
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if pool.feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def cosec_lower_bound(rm: AlgebraicCurvatureTensor,
                      config: SolverConfig | None = None) -> float:
    """sup{kappa : rm - kappa * Q_sphere stays in the closed cosectional
    cone}, by bisection with a shared Frank-Wolfe atom pool.

    Returns -inf when no probed shift is a member.
    """
    config = config or SolverConfig()
    base = rm.dim ** 2 * max(1.0, rm.norm())
    pool = _MembershipPool(rm, config)
    return float(_bisect_sup_feasible(pool, base))


def cosec_upper_bound(rm: AlgebraicCurvatureTensor,
                      config: SolverConfig | None = None) -> float:
    """Mirror bound: sup{kappa : -rm - kappa * Q_sphere is a member}.

    This is the lower bound of the negated tensor; for c * Q_sphere it
    equals -c, so the zero tensor reports 0 and -Q_sphere reports 1.
    """
    return cosec_lower_bound(-rm, config)


# ---------------------------------------------------------------------------
# sum-of-squares cones in S^2(S^2) and S^4

def _psd_project(s):
    vals, vecs = np.linalg.eigh((s + s.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ vecs.T


def _psd_ascent(value_fn, grad_fn, s0, iterations):
    s = s0.copy()
    v = value_fn(s)
    step = 0.5
    for _ in range(iterations):
        g = grad_fn(s)
        cand = _psd_project(s + step * g)
        n = np.linalg.norm(cand)
        if n < 1e-14:
            step *= 0.5
            if step < 1e-14:
                break
            continue
        cand /= n
        vc = value_fn(cand)
        if vc > v + 1e-16 * (1.0 + abs(v)):
            s, v = cand, vc
            step *= 1.25
        else:
            step *= 0.5
            if step < 1e-14:
                break
    return v, s


def _psd_sphere_search(value_fn, grad_fn, dim, mode, rng, multistarts,
                       iterations=150):
    """Extremize a quadratic form over {s PSD, |s|_F = 1} by projected
    gradient with backtracking.  mode "max" or "min"."""
    sign = 1.0 if mode == "max" else -1.0

    def val(s):
        return sign * value_fn(s)

    def grad(s):
        return sign * grad_fn(s)

    starts = [np.eye(dim) / np.sqrt(dim)]
    for i in range(dim):
        e = np.zeros((dim, dim))
        e[i, i] = 1.0
        starts.append(e)
    probe = _psd_project(grad(np.eye(dim) / np.sqrt(dim)))
    if np.linalg.norm(probe) > 1e-12:
        starts.append(probe / np.linalg.norm(probe))
    for _ in range(multistarts):
        w = rng.standard_normal((dim, dim))
        s = w @ w.T
        starts.append(s / np.linalg.norm(s))

    best_v, best_s = -np.inf, starts[0]
    for s0 in starts:
        v, s = _psd_ascent(val, grad, s0, iterations)
        if v > best_v + 1e-15:
            best_v, best_s = v, s
    return sign * best_v, best_s


def _sos_membership(target_vec, dim, atom_vec, raw_vec, value_fn, grad_fn,
                    polish_builder, config, keep_trace, wrap_dual):
    """Shared FW driver for the PSD-square generator cones."""
    rng = np.random.default_rng(config.rng_seed)
    scale = float(np.linalg.norm(target_vec))
    if scale <= config.tol:
        # boundary of the open cone: no strict separator exists at 0
        return ConicCertificate("non_member", float(scale), 0, margin=0.0)

    def lmo(res_vec):
        val, s = _psd_sphere_search(
            lambda m: value_fn(res_vec, m),
            lambda m: grad_fn(res_vec, m),
            dim, "max", rng, config.multistart_count, iterations=80,
        )
        return val, atom_vec(s), Sym2Form(s)

    def slider(res_vec, atoms, payloads, weights):
        out = []
        for a, payload, mu in zip(atoms, payloads, weights):
            r_other = res_vec + mu * a
            _, s = _psd_ascent(
                lambda m: value_fn(r_other, m),
                lambda m: grad_fn(r_other, m),
                np.asarray(payload.entries), iterations=25,
            )
            out.append((atom_vec(s), Sym2Form(s)))
        return out

    def joint_polish(fw):
        # raw_vec is homogeneous of degree 2 in the generator, so weights
        # fold into factor scales and the PSD constraint is free
        if not fw.atoms:
            return
        factors = []
        for payload, w in zip(fw.payloads, fw.weights):
            s_hat = np.asarray(payload.entries)
            nu = float(np.linalg.norm(raw_vec(s_hat)))
            if nu <= 0.0:
                return
            factors.append(_psd_factor(s_hat, scale=np.sqrt(w / nu)))
        polished = _joint_polish_psd(polish_builder, factors, dim)
        atoms, payloads, ws = [], [], []
        vec_sum = np.zeros_like(fw.target)
        for L in polished:
            s = L @ L.T
            raw = raw_vec(s)
            w = float(np.linalg.norm(raw))
            if w <= 1e-16:
                continue
            atoms.append(raw / w)
            ns = float(np.linalg.norm(s))
            payloads.append(Sym2Form(s / ns))
            ws.append(w)
            vec_sum += raw
        if not atoms:
            return
        if float(np.linalg.norm(fw.target - vec_sum)) < fw.residual_norm():
            fw.atoms, fw.payloads = atoms, payloads
            fw.weights = np.asarray(ws)
            fw._refit()

    fw = _ConicFW(target_vec, lmo, config, slider=slider)
    _, resid = fw.run()
    if resid > config.tol:
        joint_polish(fw)
        resid = fw.residual_norm()
    trace = fw.trace if keep_trace else []

    if resid <= config.tol:
        decomposition = [(float(w), p) for w, p in zip(fw.weights, fw.payloads)]
        margin = min((p.min_eigenvalue() for _, p in decomposition), default=0.0)
        verdict = "member" if margin >= config.strictness_margin else "non_member"
        return ConicCertificate(verdict, resid, fw.iterations,
                                decomposition=decomposition,
                                margin=float(margin), trace=trace)

    res = fw.residual_vec()
    dual_vec = -res / np.linalg.norm(res)
    verify_rng = np.random.default_rng(config.rng_seed + 1)
    min_pair, _ = _psd_sphere_search(
        lambda m: value_fn(dual_vec, m),
        lambda m: grad_fn(dual_vec, m),
        dim, "min", verify_rng, 2 * config.multistart_count,
    )
    input_pair = float(dual_vec @ target_vec)
    if min_pair >= -config.tol and input_pair < -config.tol:
        return ConicCertificate(
            "non_member", resid, fw.iterations,
            dual_functional=wrap_dual(dual_vec),
            dual_min_pairing=float(min_pair),
            dual_input_pairing=input_pair,
            trace=trace,
        )
    return ConicCertificate("inconclusive", resid, fw.iterations, trace=trace)


def phi_positive_membership(phi: PhiTensor,
                            config: SolverConfig | None = None,
                            keep_trace: bool = False) -> ConicCertificate:
    """Membership of an S^2(S^2) tensor in the closed cone of sums s⊗s over
    positive semidefinite forms s, with the achieved PD margin reported.

    Generators are s⊗s for unit-Frobenius PSD s; the LMO runs projected
    ascent over the PSD sphere.  The strictness margin demanded of the
    decomposition comes from config.strictness_margin.
    """
    config = config or SolverConfig()
    dim = phi.dim
    D = dim * (dim + 1) // 2
    target = phi.matrix.reshape(-1)

    def raw_vec(s):
        v = sym2_coords(s)
        return np.outer(v, v).reshape(-1)

    def atom_vec(s):
        a = raw_vec(s)
        return a / np.linalg.norm(a)

    def value_fn(res_vec, s):
        g = res_vec.reshape(D, D)
        v = sym2_coords(s)
        return float(v @ g @ v)

    def grad_fn(res_vec, s):
        g = res_vec.reshape(D, D)
        g = (g + g.T) / 2.0
        v = sym2_coords(s)
        return sym2_from_coords(2.0 * (g @ v), dim)

    def wrap_dual(vec):
        return PhiTensor(dim, vec.reshape(D, D))

    bs = sym2_basis(dim)
    mt = phi.matrix

    def polish_builder(k):
        def fun(p):
            L = p.reshape(k, dim, dim)
            s = np.einsum("kab,kcb->kac", L, L)
            v = np.einsum("uab,kab->ku", bs, s)
            r = mt - v.T @ v
            f = float(np.sum(r * r))
            pr = v @ r
            gs = -4.0 * np.einsum("ku,uab->kab", pr, bs)
            gl = 2.0 * np.einsum("kab,kbc->kac", gs, L)
            return f, gl.reshape(-1)

        return fun

    return _sos_membership(target, dim, atom_vec, raw_vec, value_fn, grad_fn,
                           polish_builder, config, keep_trace, wrap_dual)


def sym4_sos_membership(e: Sym4Form,
                        config: SolverConfig | None = None,
                        keep_trace: bool = False) -> ConicCertificate:
    """Membership of a symmetric 4-form in the closed cone of sums of
    symmetric squares s∘s of positive semidefinite forms."""
    config = config or SolverConfig()
    dim = e.dim
    target = e.tensor.reshape(-1)

    def raw_vec(s):
        return symmetric_square(Sym2Form(s)).tensor.reshape(-1)

    def atom_vec(s):
        a = raw_vec(s)
        return a / np.linalg.norm(a)

    def value_fn(res_vec, s):
        # <res, s⊗s> equals <res, s∘s> by total symmetry of the residual
        g = res_vec.reshape(dim * dim, dim * dim)
        v = s.reshape(-1)
        return float(v @ g @ v)

    def grad_fn(res_vec, s):
        g = res_vec.reshape(dim * dim, dim * dim)
        g = (g + g.T) / 2.0
        h = (2.0 * (g @ s.reshape(-1))).reshape(dim, dim)
        return (h + h.T) / 2.0

    def wrap_dual(vec):
        return Sym4Form(dim, vec.reshape((dim,) * 4))

    e4 = e.tensor

    def polish_builder(k):
        def fun(p):
            L = p.reshape(k, dim, dim)
            s = np.einsum("kab,kcb->kac", L, L)
            t = (
                np.einsum("kab,kcd->abcd", s, s)
                + np.einsum("kac,kbd->abcd", s, s)
                + np.einsum("kad,kbc->abcd", s, s)
            ) / 3.0
            r4 = e4 - t
            f = float(np.sum(r4 * r4))
            kk = np.einsum("abcd,kcd->kab", r4, s)
            gl = -8.0 * np.einsum("kab,kbc->kac", kk, L)
            return f, gl.reshape(-1)

        return fun

    return _sos_membership(target, dim, atom_vec, raw_vec, value_fn, grad_fn,
                           polish_builder, config, keep_trace, wrap_dual)


# ---------------------------------------------------------------------------
# quartic minimum and the dimension-4 shift test

def quartic_min(e: Sym4Form, config: SolverConfig | None = None):
    """Multistart minimization of E(X,X,X,X) over the unit sphere.

    Positivity of the minimum characterizes the largest invariant cone of
    symmetric 4-forms.  Returns (value, argmin unit vector).
    """
    config = config or SolverConfig()
    rng = np.random.default_rng(config.rng_seed)
    dim = e.dim
    t = e.tensor

    def val(x):
        return float(np.einsum("abcd,a,b,c,d->", t, x, x, x, x))

    def grad(x):
        return 4.0 * np.einsum("abcd,b,c,d->a", t, x, x, x)

    starts = [np.eye(dim)[i] for i in range(dim)]
    starts += [v / np.linalg.norm(v) for v in rng.standard_normal(
        (config.multistart_count, dim))]
    best_v, best_x = np.inf, starts[0]
    for x0 in starts:
        x = x0.copy()
        v = val(x)
        step = 0.25
        for _ in range(300):
            g = grad(x)
            g = g - x * (x @ g)
            cand = x - step * g
            cand /= np.linalg.norm(cand)
            vc = val(cand)
            if vc < v - 1e-17 * (1.0 + abs(v)):
                x, v = cand, vc
                step *= 1.2
            else:
                step *= 0.5
                if step < 1e-13:
                    break
        if v < best_v - 1e-15:
            best_v, best_x = v, x
    return float(best_v), best_x


def thorpe_shift(rm: AlgebraicCurvatureTensor,
                 config: SolverConfig | None = None):
    """Best volume-form shift in dimension 4.

    Maximizes over f the smallest eigenvalue of rm + f * omega as a biform
    (omega the embedded top 4-vector); the objective is concave in f, so a
    golden-section search suffices.  Returns (f_star, min_eig).
    """
    if rm.dim != 4:
        raise ValueError("Thorpe test is dimension-4 only")
    config = config or SolverConfig()
    omega = volume_form(4).matrix
    b = rm.matrix

    def g(f):
        return float(np.linalg.eigvalsh(b + f * omega)[0])

    span = 2.0 * rm.norm() + 1.0
    lo, hi = -span, span
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    g1, g2 = g(x1), g(x2)
    for _ in range(200):
        if hi - lo < 1e-12 * span:
            break
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + phi * (hi - lo)
            g2 = g(x2)
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - phi * (hi - lo)
            g1 = g(x1)
    f_star = 0.5 * (lo + hi)
    return float(f_star), g(f_star)
