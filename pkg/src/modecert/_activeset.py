"""Active-set Newton solver shared by the unconstrained and mode-constrained MLEs.

The log-density is written as a conic combination of kink functions plus a
free part::

    phi(u) = a [+ b u]  -  sum_k c_k * max(s_k (u - t_k), 0),   c_k >= 0

``s_k = +1`` kinks bend the function down to the right of ``t_k`` and
``s_k = -1`` kinks bend it down to the left.  With the free slope term and
only ``+1`` kinks this is the cone of concave piecewise-linear functions with
knots on the grid.  Dropping the slope term and using ``-1`` kinks left of
``m`` and ``+1`` kinks right of ``m`` gives the concave functions whose modal
interval contains ``m``.  Either way the problem is

    maximize  g . theta  -  int exp(phi_theta)      subject to  c >= 0,

a smooth concave program with sign constraints.  It is solved by an
active-set method: Newton with backtracking on the reduced problem (active
kinks only), a step back to the feasible boundary when a coefficient turns
negative, and a pricing pass over all candidates that adds the kink with the
largest directional derivative.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from numba import njit

_ARMIJO = 1e-4
_SHRINK = 0.5
_MAX_HALVINGS = 60
_NEWTON_MAX = 100
# prices below this are rounding noise (the problem has unit mass on [-1, 1]);
# without it, dividing by a tiny grid gap turns noise into a residual
_PRICE_FLOOR = 1e-12


def _coefficients(j, k, terms):
    return np.array(
        [
            factorial(j + r) * factorial(k) / (factorial(r) * factorial(j + r + k + 1))
            for r in range(terms)
        ]
    )


_I0 = _coefficients(0, 0, 22)
_P1 = _coefficients(0, 1, 22)
_Q1 = _coefficients(1, 0, 22)
_P2 = _coefficients(0, 2, 22)
_Q11 = _coefficients(1, 1, 22)
_Q2 = _coefficients(2, 0, 22)


@njit(cache=True)
def _horner(coef, d, terms):
    out = coef[terms - 1]
    for r in range(terms - 2, -1, -1):
        out = out * d + coef[r]
    return out


@njit(cache=True)
def first_moments(a, b):
    """Scalar ``(j00, j10, j01)``; see :mod:`modecert.segments`."""
    if b > a:
        top = b
        d = a - b
        swap = True
    else:
        top = a
        d = b - a
        swap = False
    if d > -0.1:
        i0 = _horner(_I0, d, 12)
        p1 = _horner(_P1, d, 12)
        q1 = _horner(_Q1, d, 12)
    else:
        e = np.exp(d)
        i0 = np.expm1(d) / d
        q1 = (e * (d - 1.0) + 1.0) / (d * d)
        p1 = i0 - q1
    s = np.exp(top)
    if swap:
        return s * i0, s * q1, s * p1
    return s * i0, s * p1, s * q1


@njit(cache=True)
def second_moments(a, b):
    if b > a:
        top = b
        d = a - b
        swap = True
    else:
        top = a
        d = b - a
        swap = False
    if d > -1.0:
        p2 = _horner(_P2, d, 22)
        q11 = _horner(_Q11, d, 22)
        q2 = _horner(_Q2, d, 22)
    else:
        e = np.exp(d)
        i0 = np.expm1(d) / d
        i1 = (e * (d - 1.0) + 1.0) / (d * d)
        i2 = (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d)
        p2 = i0 - 2.0 * i1 + i2
        q11 = i1 - i2
        q2 = i2
    s = np.exp(top)
    if swap:
        return s * q2, s * q11, s * p2
    return s * p2, s * q11, s * q2


@njit(cache=True)
def _breakpoints(n_grid, kink_index, active):
    marks = np.zeros(n_grid, dtype=np.bool_)
    marks[0] = True
    marks[n_grid - 1] = True
    for k in active:
        marks[kink_index[k]] = True
    return np.flatnonzero(marks)


@njit(cache=True)
def _design(points, slope_free, kink_pos, kink_side, active):
    nf = 2 if slope_free else 1
    A = np.zeros((points.shape[0], nf + active.shape[0]))
    for i in range(points.shape[0]):
        A[i, 0] = 1.0
        if slope_free:
            A[i, 1] = points[i]
        for j in range(active.shape[0]):
            k = active[j]
            v = kink_side[k] * (points[i] - kink_pos[k])
            if v > 0.0:
                A[i, nf + j] = -v
    return A


@njit(cache=True)
def _reduced_objective(A, dz, g, theta):
    v = A @ theta
    total = 0.0
    for s in range(dz.shape[0]):
        j00, _, _ = first_moments(v[s], v[s + 1])
        total += dz[s] * j00
    return g @ theta - total


@njit(cache=True)
def _reduced_derivatives(A, dz, g, theta):
    """Objective, gradient and the tridiagonal ``T`` with Hessian ``A' T A``."""
    v = A @ theta
    nb = v.shape[0]
    r = np.zeros(nb)
    diag = np.zeros(nb)
    off = np.zeros(nb - 1)
    total = 0.0
    for s in range(nb - 1):
        j00, j10, j01 = first_moments(v[s], v[s + 1])
        j20, j11, j02 = second_moments(v[s], v[s + 1])
        total += dz[s] * j00
        r[s] += dz[s] * j10
        r[s + 1] += dz[s] * j01
        diag[s] += dz[s] * j20
        diag[s + 1] += dz[s] * j02
        off[s] = dz[s] * j11
    grad = g - A.T @ r
    return g @ theta - total, grad, diag, off


@njit(cache=True)
def _newton_step(A, diag, off, grad):
    """Solve ``A' T A x = grad`` without forming ``A' T A``.

    ``T`` is the Gram matrix of the hat functions under ``exp(phi)`` and is
    positive definite, so ``T = L L'`` with ``L`` bidiagonal.  A QR
    factorization of ``B = L' A`` then gives ``R' R x = grad``.  Forming the
    product squares the condition number, which loses directions that only
    move the log-density where it carries almost no mass.
    """
    nb, p = A.shape
    ell = np.empty(nb)
    sub = np.zeros(nb)
    piv = diag[0]
    for i in range(nb):
        if i > 0:
            sub[i - 1] = off[i - 1] / ell[i - 1]
            piv = diag[i] - sub[i - 1] * sub[i - 1]
        if not (piv > 0.0) or not np.isfinite(piv):
            return np.linalg.lstsq(A.T @ _tri_times(diag, off, A), grad)[0]
        ell[i] = np.sqrt(piv)
    B = np.empty((nb, p))
    for i in range(nb):
        for j in range(p):
            val = ell[i] * A[i, j]
            if i < nb - 1:
                val += sub[i] * A[i + 1, j]
            B[i, j] = val
    R = np.linalg.qr(B)[1]
    y = np.empty(p)
    for i in range(p):
        acc = grad[i]
        for k in range(i):
            acc -= R[k, i] * y[k]
        if R[i, i] == 0.0:
            return np.linalg.lstsq(A.T @ _tri_times(diag, off, A), grad)[0]
        y[i] = acc / R[i, i]
    x = np.empty(p)
    for i in range(p - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, p):
            acc -= R[i, k] * x[k]
        x[i] = acc / R[i, i]
    return x


@njit(cache=True)
def _tri_times(diag, off, A):
    nb = A.shape[0]
    TA = np.empty_like(A)
    for i in range(nb):
        for j in range(A.shape[1]):
            val = diag[i] * A[i, j]
            if i > 0:
                val += off[i - 1] * A[i - 1, j]
            if i < nb - 1:
                val += off[i] * A[i + 1, j]
            TA[i, j] = val
    return TA


@njit(cache=True)
def _maximize_reduced(A, dz, g, theta):
    eps = np.finfo(np.float64).eps
    for _ in range(_NEWTON_MAX):
        obj, grad, diag, off = _reduced_derivatives(A, dz, g, theta)
        step = _newton_step(A, diag, off, grad)
        decrement = grad @ step
        if not np.isfinite(decrement) or decrement <= 1e-24:
            break
        # rounding noise in the objective; below it Armijo cannot tell a
        # good step from a bad one, so a full step is taken when it raises
        # the objective or shrinks the gradient without a measurable loss
        noise = 64.0 * eps * (1.0 + np.abs(g) @ np.abs(theta) + abs(obj))
        if decrement < noise:
            trial, grad_new, _, _ = _reduced_derivatives(A, dz, g, theta + step)
            better = trial > obj or grad_new @ grad_new < grad @ grad
            if np.isfinite(trial) and trial >= obj - noise and better:
                theta = theta + step
                continue
            break
        t = 1.0
        ok = False
        for _h in range(_MAX_HALVINGS):
            trial = _reduced_objective(A, dz, g, theta + t * step)
            if np.isfinite(trial) and trial >= obj + _ARMIJO * t * decrement:
                ok = True
                break
            t *= _SHRINK
            if t * decrement < noise:
                break
        if not ok:
            break
        theta = theta + t * step
    return theta, _reduced_objective(A, dz, g, theta)


@njit(cache=True)
def _grid_values(z, slope_free, kink_pos, kink_side, kink_index, active, theta):
    bp = _breakpoints(z.shape[0], kink_index, active)
    zb = z[bp]
    vb = _design(zb, slope_free, kink_pos, kink_side, active) @ theta
    return np.interp(z, zb, vb)


@njit(cache=True)
def _pricing(z, phi, kink_index, kink_side, data_term, free_data, slope_free):
    """Directional derivatives along every candidate kink and the free directions."""
    p = z.shape[0]
    mass = np.empty(p - 1)
    m_right = np.empty(p - 1)  # int (u - z_i) e^phi over segment i
    m_left = np.empty(p - 1)  # int (z_{i+1} - u) e^phi over segment i
    for i in range(p - 1):
        dz = z[i + 1] - z[i]
        j00, j10, j01 = first_moments(phi[i], phi[i + 1])
        mass[i] = dz * j00
        m_right[i] = dz * (dz * j01)
        m_left[i] = dz * (dz * j10)
    # right[j] = int_{z_j}^{hi} (u - z_j) e^phi, by a backward recursion
    right = np.zeros(p)
    tail = 0.0
    for j in range(p - 2, -1, -1):
        right[j] = m_right[j] + right[j + 1] + (z[j + 1] - z[j]) * tail
        tail += mass[j]
    total = tail
    left = np.zeros(p)
    head = 0.0
    for j in range(1, p):
        left[j] = m_left[j - 1] + left[j - 1] + (z[j] - z[j - 1]) * head
        head += mass[j - 1]
    nk = kink_index.shape[0]
    deriv = np.empty(nk)
    for k in range(nk):
        j = kink_index[k]
        deriv[k] = data_term[k] + (right[j] if kink_side[k] > 0 else left[j])
    nf = 2 if slope_free else 1
    free = np.empty(nf)
    free[0] = free_data[0] - total
    if slope_free:
        # int u e^phi = z_0 * total + right[0]
        free[1] = free_data[1] - (z[0] * total + right[0])
    return deriv, free, total


@njit(cache=True)
def _insert_sorted(active, theta, nf, k):
    m = active.shape[0]
    pos = 0
    while pos < m and active[pos] < k:
        pos += 1
    new_active = np.empty(m + 1, dtype=active.dtype)
    new_theta = np.empty(theta.shape[0] + 1)
    new_theta[:nf] = theta[:nf]
    new_active[:pos] = active[:pos]
    new_active[pos] = k
    new_active[pos + 1 :] = active[pos:]
    new_theta[nf : nf + pos] = theta[nf : nf + pos]
    new_theta[nf + pos] = 0.0
    new_theta[nf + pos + 1 :] = theta[nf + pos :]
    return new_active, new_theta


@njit(cache=True)
def _solve(z, w_free, slope_free, kink_index, kink_side, data_term, tol, obj_tol, max_iter, warm):
    nf = 2 if slope_free else 1
    kink_pos = z[kink_index].copy()
    nk = kink_index.shape[0]
    p = z.shape[0]
    spacing = np.empty(nk)
    for k in range(nk):
        j = kink_index[k]
        lo = z[j - 1] if j > 0 else z[j]
        hi = z[j + 1] if j < p - 1 else z[j]
        spacing[k] = 0.5 * (hi - lo) if j > 0 and j < p - 1 else hi - lo
    theta = np.zeros(nf + warm.shape[0])
    theta[0] = -np.log(z[-1] - z[0])
    active = warm.copy()
    history = np.empty(max_iter)
    banned = np.zeros(nk, dtype=np.bool_)
    obj = -np.inf
    last_gain = np.inf
    residual = np.inf
    converged = False
    it = 0
    n_hist = 0
    while it < max_iter:
        it += 1
        bp = _breakpoints(z.shape[0], kink_index, active)
        zb = z[bp]
        dz = np.diff(zb)
        A = _design(zb, slope_free, kink_pos, kink_side, active)
        g = np.empty(nf + active.shape[0])
        g[:nf] = w_free
        for j in range(active.shape[0]):
            g[nf + j] = data_term[active[j]]
        new_theta, new_obj = _maximize_reduced(A, dz, g, theta.copy())

        n_neg = 0
        t = 1.0
        for j in range(active.shape[0]):
            cn = new_theta[nf + j]
            if cn < 0.0:
                n_neg += 1
                co = theta[nf + j]
                ratio = co / (co - cn) if co - cn > 0.0 else 0.0
                if ratio < t:
                    t = ratio
        if n_neg > 0:
            if t < 0.0:
                t = 0.0
            c_old = theta[nf:].copy()
            theta = theta + t * (new_theta - theta)
            cmax = 0.0
            for j in range(active.shape[0]):
                cmax = max(cmax, abs(theta[nf + j]))
            keep = np.ones(active.shape[0], dtype=np.bool_)
            for j in range(active.shape[0]):
                cn = new_theta[nf + j]
                if theta[nf + j] <= 1e-14 * max(1.0, cmax):
                    keep[j] = False
                elif cn < 0.0:
                    co = c_old[j]
                    ratio = co / (co - cn) if co - cn > 0.0 else 0.0
                    if ratio <= t:
                        keep[j] = False
            if t == 0.0:
                for j in range(active.shape[0]):
                    if not keep[j]:
                        banned[active[j]] = True
            n_keep = keep.sum()
            new_active = np.empty(n_keep, dtype=active.dtype)
            th = np.empty(nf + n_keep)
            th[:nf] = theta[:nf]
            q = 0
            for j in range(active.shape[0]):
                if keep[j]:
                    new_active[q] = active[j]
                    th[nf + q] = theta[nf + j]
                    q += 1
            active = new_active
            theta = th
            continue

        if np.isfinite(obj):
            last_gain = new_obj - obj
        theta = new_theta
        obj = new_obj
        history[n_hist] = obj
        n_hist += 1
        banned[:] = False

        phi = _grid_values(z, slope_free, kink_pos, kink_side, kink_index, active, theta)
        deriv, free_grad, _ = _pricing(z, phi, kink_index, kink_side, data_term, w_free, slope_free)
        is_active = np.zeros(nk, dtype=np.bool_)
        for k in active:
            is_active[k] = True
        # the stopping test divides prices by the local grid spacing so they
        # read as CDF-scale residuals however tightly the data cluster; the
        # kink to add is still the one with the largest raw price, which
        # gives the biggest objective gain
        best = -1
        best_val = -np.inf
        best_raw = -1
        raw_val = -np.inf
        worst_active = 0.0
        for k in range(nk):
            if is_active[k]:
                worst_active = max(worst_active, max(abs(deriv[k]) - _PRICE_FLOOR, 0.0) / spacing[k])
            elif not banned[k]:
                r = (deriv[k] - _PRICE_FLOOR) / spacing[k]
                if r > best_val:
                    best_val = r
                    best = k
                if deriv[k] > raw_val:
                    raw_val = deriv[k]
                    best_raw = k
        residual = max(max(best_val, 0.0), worst_active)
        for f in range(nf):
            residual = max(residual, abs(free_grad[f]))
        if best_val <= 0.0 or (best_val <= tol and last_gain <= obj_tol):
            converged = residual <= tol
            break
        if raw_val > _PRICE_FLOOR and (deriv[best_raw] - _PRICE_FLOOR) / spacing[best_raw] > tol:
            best = best_raw
        active, theta = _insert_sorted(active, theta, nf, best)
    phi = _grid_values(z, slope_free, kink_pos, kink_side, kink_index, active, theta)
    return theta, active, phi, obj, residual, it, converged, history[:n_hist]


@dataclass
class Problem:
    """Grid, weights and candidate kinks in standardized coordinates."""

    z: np.ndarray
    w: np.ndarray
    slope_free: bool
    kink_index: np.ndarray
    kink_side: np.ndarray

    def __post_init__(self):
        z, w = self.z, self.w
        wz = w * z
        tail_w = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
        tail_wz = np.concatenate([np.cumsum(wz[::-1])[::-1][1:], [0.0]])
        head_w = np.concatenate([[0.0], np.cumsum(w)[:-1]])
        head_wz = np.concatenate([[0.0], np.cumsum(wz)[:-1]])
        right = tail_wz - z * tail_w  # sum_{i>j} w_i (z_i - z_j)
        left = z * head_w - head_wz  # sum_{i<j} w_i (z_j - z_i)
        idx = self.kink_index
        self.kink_index = np.ascontiguousarray(idx, dtype=np.int64)
        self.kink_side = np.ascontiguousarray(self.kink_side, dtype=np.float64)
        self.data_term = -np.where(self.kink_side > 0, right[idx], left[idx])
        free = [w.sum()]
        if self.slope_free:
            free.append(wz.sum())
        self.free_data = np.array(free)

    @property
    def n_free(self) -> int:
        return 2 if self.slope_free else 1

    def grid_values(self, active, theta):
        return _grid_values(
            self.z, self.slope_free, self.z[self.kink_index], self.kink_side,
            self.kink_index, np.asarray(active, dtype=np.int64), theta,
        )

    def pricing(self, phi):
        return _pricing(
            self.z, phi, self.kink_index, self.kink_side, self.data_term,
            self.free_data, self.slope_free,
        )


@dataclass
class SolveResult:
    theta: np.ndarray
    active: np.ndarray
    phi: np.ndarray  # log-density on the full grid
    objective: float
    residual: float
    iterations: int
    converged: bool
    history: np.ndarray


def solve(prob: Problem, tol=1e-7, obj_tol=1e-10, max_iter=500, warm=None) -> SolveResult:
    """Maximize ``g . theta - int exp(phi)`` over the cone described by ``prob``."""
    warm_arr = np.unique(np.asarray([] if warm is None else warm, dtype=np.int64))
    out = _solve(
        prob.z, prob.free_data, prob.slope_free, prob.kink_index, prob.kink_side,
        prob.data_term, float(tol), float(obj_tol), int(max_iter), warm_arr,
    )
    theta, active, phi, obj, residual, it, converged, history = out
    return SolveResult(theta, active, phi, float(obj), float(residual), int(it), bool(converged), history)
