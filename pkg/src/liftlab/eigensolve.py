"""In-repo symmetric eigensolvers.

Dense path: Householder reduction to tridiagonal form followed by the
implicit-shift QL iteration (eigenvalues only). Iterative path: Lanczos
with full reorthogonalization driven by a caller-supplied matvec, with
Sturm-sequence bisection used for cheap extreme-eigenvalue estimates of
the growing tridiagonal matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotConvergedError

_EPS = np.finfo(np.float64).eps


def householder_tridiagonalize(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a symmetric matrix to tridiagonal form by Householder reflections.

    Returns (diagonal, subdiagonal); the input is not modified. Only the
    eigenvalue-relevant data is kept (reflectors are not accumulated).
    """
    a = np.array(mat, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    for k in range(n - 2):
        x = a[k + 1:, k]
        nx = math.sqrt(float(x @ x))
        if nx <= _EPS * max(1.0, abs(a[k, k])):
            a[k + 1:, k] = 0.0
            a[k, k + 1:] = 0.0
            a[k + 1, k] = a[k, k + 1] = 0.0
            continue
        alpha = -math.copysign(nx, x[0]) if x[0] != 0.0 else -nx
        v = x.copy()
        v[0] -= alpha
        vn = math.sqrt(float(v @ v))
        if vn == 0.0:
            continue
        v /= vn
        sub = a[k + 1:, k + 1:]
        w = sub @ v
        q = w - v * float(v @ w)
        sub -= 2.0 * np.outer(v, q)
        sub -= 2.0 * np.outer(q, v)
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = a[k, k + 1] = alpha
    d = np.diag(a).copy()
    e = np.array([a[i + 1, i] for i in range(n - 1)]) if n > 1 else np.zeros(0)
    return d, e


def tridiagonal_eigenvalues(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """All eigenvalues of a symmetric tridiagonal matrix, sorted descending.

    Implicit-shift QL with per-eigenvalue iteration caps; accurate to
    machine-level relative error for well-scaled inputs.
    """
    d = np.array(diag, dtype=np.float64)
    n = d.size
    if n == 0:
        return np.zeros(0)
    e = np.zeros(n)
    e[: n - 1] = np.asarray(off, dtype=np.float64)
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd + 1e-300:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > 60:
                raise NotConvergedError("QL iteration stalled")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)[::-1]


def symmetric_eigenvalues(mat: np.ndarray) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix, sorted descending."""
    d, e = householder_tridiagonalize(mat)
    return tridiagonal_eigenvalues(d, e)


# ---------------------------------------------------------------------------
# Sturm sequences: eigenvalue counting and extreme-eigenvalue bisection


def _count_below(d: np.ndarray, e: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the tridiagonal matrix strictly below x."""
    count = 0
    q = 1.0
    n = d.size
    for i in range(n):
        esq = e[i - 1] * e[i - 1] if i > 0 else 0.0
        q = d[i] - x - (esq / q if q != 0.0 else esq / 1e-300)
        if q < 0.0:
            count += 1
        elif q == 0.0:
            q = -1e-300
    return count


def tridiagonal_extremes(diag: np.ndarray, off: np.ndarray, steps: int = 64) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric tridiagonal matrix.

    Bisection on the Sturm count inside the Gershgorin interval; cost
    O(steps * n), which keeps per-iteration convergence checks cheap.
    """
    d = np.asarray(diag, dtype=np.float64)
    e = np.asarray(off, dtype=np.float64)
    n = d.size
    if n == 0:
        return 0.0, 0.0
    if n == 1:
        return float(d[0]), float(d[0])
    radius = np.zeros(n)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo = float(np.min(d - radius))
    hi = float(np.max(d + radius))

    def kth_from_bottom(k: int) -> float:
        # smallest value x with count_below(x) >= k, located by bisection
        a, b = lo, hi + max(1.0, abs(hi)) * 1e-12
        for _ in range(steps):
            mid = 0.5 * (a + b)
            if _count_below(d, e, mid) >= k:
                b = mid
            else:
                a = mid
        return 0.5 * (a + b)

    return kth_from_bottom(1), kth_from_bottom(n)


def _solve_shifted(d: np.ndarray, e: np.ndarray, lam: float, b: np.ndarray) -> np.ndarray:
    """Solve (T - lam I) x = b for tridiagonal T, Gaussian elimination with
    partial pivoting (needs one extra superdiagonal)."""
    n = d.size
    main = (d - lam).astype(np.float64)
    lower = np.array(e, dtype=np.float64)
    upper = np.array(e, dtype=np.float64)
    upper2 = np.zeros(max(n - 2, 0))
    rhs = np.array(b, dtype=np.float64)
    tiny = 1e-300
    for i in range(n - 1):
        if abs(lower[i]) > abs(main[i]):
            main[i], lower[i] = lower[i], main[i]
            upper[i], main[i + 1] = main[i + 1], upper[i]
            if i < n - 2:
                upper2[i], upper[i + 1] = upper[i + 1], upper2[i]
            rhs[i], rhs[i + 1] = rhs[i + 1], rhs[i]
        piv = main[i] if main[i] != 0.0 else tiny
        f = lower[i] / piv
        main[i + 1] -= f * upper[i]
        if i < n - 2:
            upper[i + 1] -= f * upper2[i]
        rhs[i + 1] -= f * rhs[i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = rhs[i]
        if i + 1 < n:
            acc -= upper[i] * x[i + 1]
        if i + 2 < n:
            acc -= upper2[i] * x[i + 2]
        piv = main[i] if main[i] != 0.0 else tiny
        x[i] = acc / piv
    return x


def tridiagonal_eigenvector(diag: np.ndarray, off: np.ndarray, eigval: float,
                            sweeps: int = 3) -> np.ndarray:
    """Unit eigenvector of a symmetric tridiagonal matrix by inverse iteration."""
    d = np.asarray(diag, dtype=np.float64)
    e = np.asarray(off, dtype=np.float64)
    n = d.size
    if n == 1:
        return np.ones(1)
    scale = float(np.max(np.abs(d)) + np.max(np.abs(e)) if e.size else np.max(np.abs(d)))
    shift = eigval + 64.0 * _EPS * max(scale, 1.0)
    x = np.full(n, 1.0 / math.sqrt(n))
    for _ in range(sweeps):
        x = _solve_shifted(d, e, shift, x)
        nx = math.sqrt(float(x @ x))
        if nx == 0.0 or not math.isfinite(nx):
            x = np.random.default_rng(0).normal(size=n)
            nx = math.sqrt(float(x @ x))
        x /= nx
    return x


# ---------------------------------------------------------------------------
# Lanczos with full reorthogonalization


@dataclass
class IterativeResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    converged: bool


def lanczos_extreme(matvec, dim: int, start: np.ndarray, which: str = "abs",
                    tol: float = 1e-8, max_iter: int | None = None,
                    project=None, check_every: int = 8,
                    max_basis: int = 400, max_restarts: int = 3) -> IterativeResult:
    """Extreme eigenpair of a symmetric operator given only matvec.

    ``which`` selects "max" (most positive), "min" (most negative), or
    "abs" (largest modulus). ``project``, when given, is applied to the
    start vector and to every new Krylov direction, restricting the whole
    computation to an invariant subspace of the operator.

    Runs restarted Lanczos with full reorthogonalization; convergence is
    declared when the implicit residual bound beta*|s_last| drops below
    tol relative to the operator scale.
    """
    if which not in ("max", "min", "abs"):
        raise ValueError("which must be max, min, or abs")
    if max_iter is None:
        max_iter = 10 * dim
    v = np.array(start, dtype=np.float64).reshape(-1)
    if v.shape != (dim,):
        raise ValueError("start vector has wrong length")
    if project is not None:
        v = project(v)

    total_iters = 0
    best = IterativeResult(0.0, v.copy(), 0, math.inf, False)

    def pick(lo: float, hi: float) -> float:
        if which == "max":
            return hi
        if which == "min":
            return lo
        return hi if abs(hi) >= abs(lo) else lo

    for _restart in range(max_restarts + 1):
        nv = math.sqrt(float(v @ v))
        if nv == 0.0:
            return IterativeResult(0.0, v, total_iters, 0.0, True)
        q = v / nv
        basis = [q]
        alphas: list[float] = []
        betas: list[float] = []
        theta = 0.0
        resid = math.inf
        exhausted = False
        while True:
            if total_iters >= max_iter or len(alphas) >= min(max_basis, dim):
                exhausted = True
                break
            w = matvec(basis[-1])
            if project is not None:
                w = project(w)
            a = float(basis[-1] @ w)
            alphas.append(a)
            w = w - a * basis[-1]
            if len(basis) > 1:
                w = w - betas[-1] * basis[-2]
            bmat = np.array(basis)
            w -= bmat.T @ (bmat @ w)
            w -= bmat.T @ (bmat @ w)
            b = math.sqrt(float(w @ w))
            total_iters += 1
            d = np.array(alphas)
            e = np.array(betas)
            scale = max(1.0, float(np.max(np.abs(d))) + (float(np.max(np.abs(e))) if e.size else 0.0))
            if b <= 1e3 * _EPS * scale:
                # Krylov space is invariant: Ritz values are exact
                lo, hi = tridiagonal_extremes(d, e)
                theta = pick(lo, hi)
                s = tridiagonal_eigenvector(d, e, theta)
                resid = 0.0
                ritz = np.array(basis).T @ s
                return IterativeResult(theta, ritz, total_iters, resid, True)
            betas.append(b)
            basis.append(w / b)
            if len(alphas) % check_every == 0 or len(alphas) >= min(max_basis, dim):
                lo, hi = tridiagonal_extremes(d, e)
                theta = pick(lo, hi)
                s = tridiagonal_eigenvector(d, e, theta)
                resid = b * abs(float(s[-1]))
                if resid <= tol * scale:
                    ritz = np.array(basis[:-1]).T @ s
                    nr = math.sqrt(float(ritz @ ritz))
                    if nr > 0:
                        ritz /= nr
                    return IterativeResult(theta, ritz, total_iters, resid, True)
        # restart from the current best Ritz vector
        d = np.array(alphas)
        e = np.array(betas[: max(len(alphas) - 1, 0)])
        if d.size:
            lo, hi = tridiagonal_extremes(d, e)
            theta = pick(lo, hi)
            s = tridiagonal_eigenvector(d, e, theta)
            resid = (betas[-1] if len(betas) >= len(alphas) else 0.0) * abs(float(s[-1]))
            ritz = np.array(basis[: len(alphas)]).T @ s
            nr = math.sqrt(float(ritz @ ritz))
            if nr > 0:
                ritz /= nr
            if resid < best.residual:
                best = IterativeResult(theta, ritz, total_iters, resid, False)
            v = ritz
        if exhausted and total_iters >= max_iter:
            break
    return best
