"""Transformation-operator kernels R, P+/-, K+/- and what they rebuild.

The kernel R solves the coupled integral system (a_k = 1/b_k,
gamma_k = b_j/b_k, alpha_k = b_j/(b_j-b_k), j = 3-k):

    R_kk(x,t) = -i b_k  int_{x-t}^{x} Q_kj(s) R_jk(s, s-x+t) ds,
    R_jk(x,t) = i b_j b_k/(b_j-b_k) * Q_jk(alpha_k x + alpha_j t)
                - i b_j int_{alpha_k x + alpha_j t}^{x}
                        Q_jk(s) R_kk(s, gamma_k (s-x) + t) ds,

by successive approximation; the diagonal matrices P+/- solve a
second-kind Volterra system driven by the t = 0 traces of R; finally

    K(x,t) = R(x,t) + P(x-t) + int_t^x R(x,s) P(s-t) ds.

Everything is discretized on the shared uniform grid.  The solver works in
"diagonal coordinates" (offset m = i-j, position j): the first equation's
integration path then runs along a single diagonal through exact grid
nodes, and the second one's path crosses each diagonal l = 0..m once, at a
fractional position handled by linear interpolation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryConditions, minors
from .gridfn import (
    GridMismatchError,
    IterationLimitError,
    PNorm,
    SampledFunction,
    TriangularKernel,
    lp_norm,
    x_norm,
)
from .ode import DiracSystem

__all__ = [
    "ComboKernels",
    "KernelSet",
    "assemble_K",
    "build_kernels",
    "combos",
    "det_via_kernels",
    "determinant_evaluator",
    "kernel_deviation_norms",
    "potential_diff_norm",
    "r_equation_residual",
    "read_kernel",
    "reconstruct_e",
    "solve_P",
    "solve_R",
    "write_kernel",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class KernelSet:
    """R, P+/- and K+/- for one system on one grid, with the residuals
    achieved by the iterative solves."""

    r: TriangularKernel
    pplus: SampledFunction   # samples shape (N+1, 2): diagonal entries
    pminus: SampledFunction
    kplus: TriangularKernel
    kminus: TriangularKernel
    residuals: dict

    @property
    def n(self) -> int:
        return self.r.n


@dataclass(frozen=True)
class ComboKernels:
    """Scalar kernels K_{jl,k} = (K+_{jl} + (-1)^{l+k} K-_{jl}) / 2."""

    data: np.ndarray  # shape (2, 2, 2, N+1, N+1) indexed [j-1, l-1, k-1]

    @property
    def n(self) -> int:
        return self.data.shape[-1] - 1

    def get(self, j: int, l: int, k: int) -> np.ndarray:
        return self.data[j - 1, l - 1, k - 1]


def _diag_to_kernel(rd: np.ndarray) -> TriangularKernel:
    """Diagonal layout rd[a, b, m, j] = R_ab((j+m)h, jh) -> (i, j) layout."""
    npts = rd.shape[-1]
    ii, jj = np.meshgrid(np.arange(npts), np.arange(npts), indexing="ij")
    m = np.where(ii >= jj, ii - jj, 0)
    data = rd[:, :, m, jj]  # (2, 2, N+1, N+1)
    return TriangularKernel(data.transpose(2, 3, 0, 1))


def _gather_linear(values: np.ndarray, base: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Linear interpolation of rows of ``values`` at fractional positions
    base[j] + offsets[l]; returns array of shape (len(offsets), len(base)).

    ``values`` is 1-D; out-of-range neighbors are clipped (their weight is
    zero in the cases this solver produces).
    """
    top = values.shape[0] - 1
    f = np.floor(offsets).astype(int)
    frac = offsets - f
    idx0 = np.clip(base[None, :] + f[:, None], 0, top)
    idx1 = np.clip(idx0 + 1, 0, top)
    return (1.0 - frac)[:, None] * values[idx0] + frac[:, None] * values[idx1]


class _RSweeper:
    """One fixed-point sweep of the coupled R system in diagonal layout."""

    def __init__(self, sys: DiracSystem, n: int):
        self.n = n
        self.h = 1.0 / n
        npts = n + 1
        nodes = np.linspace(0.0, 1.0, npts)
        self.b = {1: sys.b1, 2: sys.b2}
        self.alpha = {1: sys.alpha1, 2: sys.alpha2}
        self.q_nodes = {(1, 2): sys.q12(nodes), (2, 1): sys.q21(nodes)}
        mm_grid, ll_grid = np.meshgrid(np.arange(npts), np.arange(npts), indexing="ij")
        self.valid = ll_grid <= n - mm_grid  # rd[m, l] valid for l <= N - m
        self.shift_idx = np.clip(mm_grid + ll_grid, 0, n)  # (m, l) -> m + l
        self.explicit = {}
        for k in (1, 2):
            j = 3 - k
            c0 = 1j * self.b[j] * self.b[k] / (self.b[j] - self.b[k])
            qjk = self.q_nodes[(j, k)]
            expl = np.zeros((npts, npts), dtype=complex)
            for m in range(npts):
                base = np.arange(n - m + 1)
                expl[m, : n - m + 1] = _gather_linear(qjk, base, np.array([self.alpha[k] * m]))[0]
            self.explicit[(j, k)] = c0 * expl

    def zero_state(self) -> dict:
        npts = self.n + 1
        return {key: np.zeros((npts, npts), dtype=complex) for key in ((1, 1), (1, 2), (2, 1), (2, 2))}

    def _update_diagonal(self, rd: dict, k: int) -> np.ndarray:
        """R_kk from R_jk: exact-node trapezoid along each diagonal."""
        j = 3 - k
        qkj = self.q_nodes[(k, j)]
        if not rd[(j, k)].any():
            return np.zeros_like(rd[(k, k)])
        g = qkj[self.shift_idx] * rd[(j, k)]  # g[m, l]
        g[~self.valid] = 0.0
        cs = np.cumsum(g, axis=1)
        ct = cs - 0.5 * (g[:, :1] + g)
        out = (-1j * self.b[k] * self.h) * ct
        out[~self.valid] = 0.0
        return out

    def _update_offdiagonal(self, rd: dict, k: int) -> np.ndarray:
        """R_jk from R_kk: path integral crossing diagonals 0..m."""
        n = self.n
        j = 3 - k
        qjk = self.q_nodes[(j, k)]
        out = self.explicit[(j, k)].copy()
        if not rd[(k, k)].any():
            return out
        aj, ak = self.alpha[j], self.alpha[k]
        coeff = -1j * self.b[j] * aj * self.h
        rkk = rd[(k, k)]
        for m in range(1, n + 1):
            base = np.arange(n - m + 1)
            ls = np.arange(m + 1)
            xi_off = ak * m + ls * aj          # Q positions (grid units)
            eta_off = ak * (m - ls)            # position along diagonal l
            qv = _gather_linear(qjk, base, xi_off)
            fl = np.floor(eta_off).astype(int)
            frac = (eta_off - fl)[:, None]
            idx0 = np.clip(base[None, :] + fl[:, None], 0, n)
            idx1 = np.clip(idx0 + 1, 0, n)
            rv = (1.0 - frac) * rkk[ls[:, None], idx0] + frac * rkk[ls[:, None], idx1]
            w = np.ones(m + 1)
            w[0] = w[-1] = 0.5
            out[m, : n - m + 1] += coeff * np.einsum("l,lj->j", w, qv * rv)
        out[~self.valid] = 0.0
        return out

    def sweep(self, rd: dict) -> tuple[dict, float]:
        """Gauss-Seidel sweep (diagonal entries refreshed first); the
        increment bounds the equation residual of the input state."""
        increment = 0.0
        new = dict(rd)
        for k in (1, 2):
            upd = self._update_diagonal(new, k)
            increment = max(increment, float(np.abs(upd - new[(k, k)]).max()))
            new[(k, k)] = upd
        for k in (1, 2):
            j = 3 - k
            upd = self._update_offdiagonal(new, k)
            increment = max(increment, float(np.abs(upd - new[(j, k)]).max()))
            new[(j, k)] = upd
        return new, increment


def _rd_from_kernel(kernel: TriangularKernel) -> dict:
    n = kernel.n
    npts = n + 1
    mm, ll = np.meshgrid(np.arange(npts), np.arange(npts), indexing="ij")
    src_i = np.clip(mm + ll, 0, n)
    rd = {}
    for a in (1, 2):
        for b in (1, 2):
            arr = kernel.data[src_i, ll, a - 1, b - 1].copy()
            arr[ll > n - mm] = 0.0
            rd[(a, b)] = arr
    return rd


def solve_R(
    sys: DiracSystem,
    n: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    return_residual: bool = False,
):
    """Successive approximation for the kernel R on the N-grid.

    Starts from zero (so the first sweep installs the explicit Q term) and
    iterates until the max-node increment, which bounds the equation
    residual of the previous iterate, drops below ``tol``.
    """
    if n < 8:
        raise ValueError("grid size N must be >= 8 for the kernel solve")
    sweeper = _RSweeper(sys, n)
    rd = sweeper.zero_state()
    residual = np.inf
    for _ in range(max_iter):
        rd, residual = sweeper.sweep(rd)
        if residual < tol:
            stacked = np.stack(
                [np.stack([rd[(1, 1)], rd[(1, 2)]]), np.stack([rd[(2, 1)], rd[(2, 2)]])]
            )
            kernel = _diag_to_kernel(stacked)
            return (kernel, residual) if return_residual else kernel
    raise IterationLimitError(f"kernel fixed point did not reach tol={tol} in {max_iter} sweeps", residual)


def r_equation_residual(sys: DiracSystem, r: TriangularKernel) -> float:
    """Max-node defect of both integral equations at the state ``r``
    (substitution check: one sweep, measured increment)."""
    sweeper = _RSweeper(sys, r.n)
    _, increment = sweeper.sweep(_rd_from_kernel(r))
    return increment


def solve_P(r: TriangularKernel, sys: DiracSystem, n: int, tol: float = DEFAULT_TOL):
    """Diagonal factors P+/- from the second-kind Volterra system driven by
    the t = 0 traces of R; forward substitution on the triangular grid.

    Returns (pplus, pminus, residual) where the residual is the max-node
    defect of the discrete system (machine-level by construction).
    """
    if r.n != n:
        raise GridMismatchError(f"kernel grid {r.n} != requested {n}")
    h = 1.0 / n
    a1, a2 = 1.0 / sys.b1, 1.0 / sys.b2
    rmat = r.data  # (N+1, N+1, 2, 2)
    r12_0 = rmat[:, 0, 0, 1]
    r21_0 = rmat[:, 0, 1, 0]
    out = {}
    residuals = []
    for sign in (+1, -1):
        g = np.stack([-sign * a2 * r12_0, -a1 * r21_0], axis=1)  # (N+1, 2)
        v = np.zeros((n + 1, 2), dtype=complex)
        v[0] = g[0]
        eye = np.eye(2)
        for i in range(1, n + 1):
            w = np.ones(i + 1)
            w[0] = w[-1] = 0.5
            acc = np.einsum("j,jab,jb->a", w[:-1] * h, rmat[i, :i], v[:i])
            lhs = eye + 0.5 * h * rmat[i, i]
            v[i] = np.linalg.solve(lhs, g[i] - acc)
        # defect of the discrete equations
        defect = 0.0
        for i in range(n + 1):
            w = np.ones(i + 1)
            if i > 0:
                w[0] = w[-1] = 0.5
            else:
                w[0] = 0.0
            lhs = v[i] + np.einsum("j,jab,jb->a", w * h, rmat[i, : i + 1], v[: i + 1])
            defect = max(defect, float(np.abs(lhs - g[i]).max()))
        residuals.append(defect)
        p1 = sys.b1 * v[:, 0]
        p2 = sign * sys.b2 * v[:, 1]
        out[sign] = SampledFunction(np.stack([p1, p2], axis=1))
    return out[+1], out[-1], max(residuals)


def _toeplitz_lower(column: np.ndarray) -> np.ndarray:
    npts = column.shape[0]
    lag = np.subtract.outer(np.arange(npts), np.arange(npts))
    return np.where(lag >= 0, column[np.clip(lag, 0, npts - 1)], 0.0)


def assemble_K(r: TriangularKernel, pplus: SampledFunction, pminus: SampledFunction, n: int):
    """K(x,t) = R(x,t) + P(x-t) + int_t^x R(x,s) P(s-t) ds for both signs."""
    if r.n != n or pplus.n != n or pminus.n != n:
        raise GridMismatchError("kernel and P factors must share the grid")
    h = 1.0 / n
    npts = n + 1
    idx = np.arange(npts)
    lag = np.subtract.outer(idx, idx)
    tri = lag >= 0
    rmat = r.data
    out = []
    for p in (pplus, pminus):
        data = rmat.copy()
        pcols = [np.ascontiguousarray(p.samples[:, 0]), np.ascontiguousarray(p.samples[:, 1])]
        # P(x - t) on the diagonal slots
        for comp in (0, 1):
            data[:, :, comp, comp] += np.where(tri, pcols[comp][np.clip(lag, 0, n)], 0.0)
        # integral term, entrywise: (R * P)_ab = int R_ab(x,s) P_b(s-t) ds
        for bcomp in (0, 1):
            col = pcols[bcomp]
            if not col.any():
                continue
            toep = _toeplitz_lower(col)
            for acomp in (0, 1):
                rab = rmat[:, :, acomp, bcomp]
                if not rab.any():
                    continue
                full = rab @ toep
                corr = 0.5 * rab * col[0] + 0.5 * np.outer(rab[idx, idx], np.ones(npts)) * toep
                data[:, :, acomp, bcomp] += h * np.where(tri, full - corr, 0.0)
        out.append(TriangularKernel(data))
    return out[0], out[1]


def build_kernels(sys: DiracSystem, n: int, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> KernelSet:
    """Full pipeline R -> P+/- -> K+/- with residual bookkeeping."""
    r, r_res = solve_R(sys, n, max_iter=max_iter, tol=tol, return_residual=True)
    pplus, pminus, p_res = solve_P(r, sys, n, tol=tol)
    kplus, kminus = assemble_K(r, pplus, pminus, n)
    boundary_defect = _boundary_relation_defect(sys, kplus, kminus)
    residuals = {"R": r_res, "P": p_res, "K_boundary": boundary_defect}
    return KernelSet(r, pplus, pminus, kplus, kminus, residuals)


def _boundary_relation_defect(sys: DiracSystem, kplus: TriangularKernel, kminus: TriangularKernel) -> float:
    """Max node violation of K(x, 0) B^{-1} (1, +/-1)^T = 0."""
    worst = 0.0
    for kern, sign in ((kplus, +1.0), (kminus, -1.0)):
        vec = np.array([1.0 / sys.b1, sign / sys.b2], dtype=complex)
        vals = kern.data[:, 0] @ vec
        worst = max(worst, float(np.abs(vals).max()))
    return worst


def reconstruct_e(kpm: TriangularKernel, sys: DiracSystem, sign: int, lam: complex) -> SampledFunction:
    """e(x, lam) = e0(x, lam) + int_0^x K(x,t) e0(t, lam) dt with
    e0 = (e^{i b1 lam x}, +/- e^{i b2 lam x})^T."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    n = kpm.n
    h = 1.0 / n
    npts = n + 1
    x = np.linspace(0.0, 1.0, npts)
    e0 = np.stack([np.exp(1j * sys.b1 * lam * x), sign * np.exp(1j * sys.b2 * lam * x)], axis=1)
    ii, jj = np.meshgrid(np.arange(npts), np.arange(npts), indexing="ij")
    w = np.where(jj <= ii, h, 0.0)
    w[:, 0] *= 0.5
    w[ii == jj] *= 0.5
    w[0, :] = 0.0
    integral = np.einsum("ij,ijab,jb->ia", w, kpm.data, e0)
    return SampledFunction(e0 + integral)


def combos(kplus: TriangularKernel, kminus: TriangularKernel) -> ComboKernels:
    """Half-sum/half-difference kernels K_{jl,k} feeding the determinant."""
    if kplus.n != kminus.n:
        raise GridMismatchError("kernel grids differ")
    npts = kplus.n + 1
    data = np.zeros((2, 2, 2, npts, npts), dtype=complex)
    for j in (1, 2):
        for l in (1, 2):
            for k in (1, 2):
                sign = (-1.0) ** (l + k)
                data[j - 1, l - 1, k - 1] = 0.5 * (
                    kplus.data[:, :, j - 1, l - 1] + sign * kminus.data[:, :, j - 1, l - 1]
                )
    return ComboKernels(data)


def determinant_evaluator(bc: BoundaryConditions, ck: ComboKernels, b1: float, b2: float):
    """Callable lam -> Delta_Q(lam) built once from the kernel traces:

        Delta_Q = Delta_0 + int_0^1 g_1 e^{i b1 lam t} dt
                          + int_0^1 g_2 e^{i b2 lam t} dt,
        g_l = J32 K_{1l,1}(1,.) + J42 K_{2l,1}(1,.)
              + J13 K_{1l,2}(1,.) + J14 K_{2l,2}(1,.).
    """
    m = minors(bc)
    n = ck.n
    h = 1.0 / n
    t = np.linspace(0.0, 1.0, n + 1)
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    g = {}
    for l in (1, 2):
        g[l] = (
            m[3, 2] * ck.get(1, l, 1)[n]
            + m[4, 2] * ck.get(2, l, 1)[n]
            + m[1, 3] * ck.get(1, l, 2)[n]
            + m[1, 4] * ck.get(2, l, 2)[n]
        )

    wg1 = h * w * g[1]
    wg2 = h * w * g[2]

    def delta(lam):
        lam_arr = np.asarray(lam, dtype=complex)
        d0 = (
            m[1, 2]
            + m[3, 4] * np.exp(1j * (b1 + b2) * lam_arr)
            + m[3, 2] * np.exp(1j * b1 * lam_arr)
            + m[1, 4] * np.exp(1j * b2 * lam_arr)
        )
        i1 = np.exp(1j * b1 * np.multiply.outer(lam_arr, t)) @ wg1
        i2 = np.exp(1j * b2 * np.multiply.outer(lam_arr, t)) @ wg2
        total = d0 + i1 + i2
        return complex(total) if lam_arr.ndim == 0 else total

    return delta


def det_via_kernels(bc: BoundaryConditions, ck: ComboKernels, b1: float, b2: float, lam: complex) -> complex:
    return determinant_evaluator(bc, ck, b1, b2)(lam)


def potential_diff_norm(sys_a: DiracSystem, sys_b: DiracSystem, p, n: int) -> float:
    """Entrywise L^p norm of Q - Q~ resampled on the shared N-grid:
    (||Q12 - Q12~||_p^p + ||Q21 - Q21~||_p^p)^{1/p}."""
    p = PNorm(p)
    x = np.linspace(0.0, 1.0, n + 1)
    d12 = SampledFunction(sys_a.q12(x) - sys_b.q12(x))
    d21 = SampledFunction(sys_a.q21(x) - sys_b.q21(x))
    if p.is_inf:
        return max(lp_norm(d12, p), lp_norm(d21, p))
    return float((lp_norm(d12, p) ** p.p + lp_norm(d21, p) ** p.p) ** (1.0 / p.p))


def kernel_deviation_norms(sys_a: DiracSystem, sys_b: DiracSystem, p, n: int,
                           max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL):
    """Worst-sign deviation of K+/- between two potentials, in both mixed
    norms, together with ||Q - Q~||_p; the ratio dev / ||Q - Q~||_p is the
    monitored Lipschitz quantity (the theory's constant is nonconstructive).
    """
    p = PNorm(p)
    ka = build_kernels(sys_a, n, max_iter=max_iter, tol=tol)
    kb = build_kernels(sys_b, n, max_iter=max_iter, tol=tol)
    dev_inf = 0.0
    dev_one = 0.0
    for pick_a, pick_b in ((ka.kplus, kb.kplus), (ka.kminus, kb.kminus)):
        diff = TriangularKernel(pick_a.data - pick_b.data)
        dev_inf = max(dev_inf, x_norm(diff, "infinity", p))
        dev_one = max(dev_one, x_norm(diff, "one", p))
    return dev_inf, dev_one, potential_diff_norm(sys_a, sys_b, p, n)


_KERNEL_MAGIC = struct.Struct("<II")


def write_kernel(kernel: TriangularKernel, path) -> None:
    """Binary dump: little-endian header (N, complex count) followed by the
    row-major triangular entries, each node as four complex doubles."""
    n = kernel.n
    rows = [kernel.data[i, : i + 1].ravel() for i in range(n + 1)]
    payload = np.concatenate(rows).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(_KERNEL_MAGIC.pack(n, payload.size))
        fh.write(payload.tobytes())


def read_kernel(path) -> TriangularKernel:
    with open(path, "rb") as fh:
        n, count = _KERNEL_MAGIC.unpack(fh.read(_KERNEL_MAGIC.size))
        payload = np.frombuffer(fh.read(), dtype="<c16")
    if payload.size != count or count != 4 * (n + 1) * (n + 2) // 2:
        raise ValueError("corrupt kernel dump: size mismatch")
    data = np.zeros((n + 1, n + 1, 2, 2), dtype=complex)
    pos = 0
    for i in range(n + 1):
        width = 4 * (i + 1)
        data[i, : i + 1] = payload[pos : pos + width].reshape(i + 1, 2, 2)
        pos += width
    return TriangularKernel(data)
