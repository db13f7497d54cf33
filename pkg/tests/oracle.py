"""Independent reference optimizer for small problems.

Maximizes ``sum_i w_i phi(x_i) - int exp(phi) + 1`` directly over the values
of ``phi`` on a fixed grid with a general-purpose SLSQP solver.  Concavity and
the modal constraint are linear inequalities on the slopes.  Nothing here is
shared with the package.
"""

import numpy as np
from scipy import optimize


def _seg_integrals(a, b, h):
    # int_0^h exp(a + (b - a) t / h) dt and its partial derivatives in a, b
    d = b - a
    ea, eb = np.exp(a), np.exp(b)
    small = np.abs(d) < 1e-5
    ds = np.where(small, 1.0, d)
    val = np.where(small, h * np.exp(0.5 * (a + b)) * (1 + d * d / 24), h * (eb - ea) / ds)
    # d/da: h * (-(eb - ea)/d + (eb - ea)/d^2 - ... ) -> use closed forms
    da = np.where(small, h * np.exp(0.5 * (a + b)) * (0.5 - d / 12 + d * d / 48),
                  h * ((eb - ea) / ds ** 2 - ea / ds))
    db = np.where(small, h * np.exp(0.5 * (a + b)) * (0.5 + d / 12 + d * d / 48),
                  h * (eb / ds - (eb - ea) / ds ** 2))
    return val, da, db


def oracle_fit(points, weights, mode=None):
    """Return (grid, phi, objective) of the log-concave (mode-constrained) MLE."""
    x = np.asarray(points, float)
    w = np.asarray(weights, float)
    if mode is not None and not np.any(np.isclose(x, mode, rtol=0, atol=1e-12)):
        k = np.searchsorted(x, mode)
        x = np.insert(x, k, mode)
        w = np.insert(w, k, 0.0)
    h = np.diff(x)
    p = len(x)

    def negobj(phi):
        val, da, db = _seg_integrals(phi[:-1], phi[1:], h)
        f = -(w @ phi) + val.sum() - 1.0
        g = -w.copy()
        g[:-1] += da
        g[1:] += db
        return f, g

    # slope differences s_j - s_{j+1} >= 0
    rows = []
    for j in range(p - 2):
        r = np.zeros(p)
        r[j] -= 1 / h[j]
        r[j + 1] += 1 / h[j] + 1 / h[j + 1]
        r[j + 2] -= 1 / h[j + 1]
        rows.append(r)
    if mode is not None:
        im = int(np.argmin(np.abs(x - mode)))
        for j in range(p - 1):
            r = np.zeros(p)
            if j < im:  # slope on [x_j, x_{j+1}] >= 0
                r[j], r[j + 1] = -1 / h[j], 1 / h[j]
            else:  # slope <= 0
                r[j], r[j + 1] = 1 / h[j], -1 / h[j]
            rows.append(r)
    cons = [{"type": "ineq", "fun": (lambda v, A=np.array(rows): A @ v), "jac": (lambda v, A=np.array(rows): A)}] if rows else []
    phi0 = np.full(p, -np.log(x[-1] - x[0]))
    best = None
    for _ in range(4):
        res = optimize.minimize(negobj, phi0, jac=True, method="SLSQP", constraints=cons,
                                options={"ftol": 1e-16, "maxiter": 2000})
        phi0 = res.x
        if best is None or res.fun < best.fun:
            best = res
    phi = best.x
    if rows:
        # polish: Newton on the face cut out by the active constraints
        A = np.array(rows)
        act = A[np.abs(A @ phi) <= 1e-6 * max(1.0, np.abs(phi).max())]
        if len(act):
            _, sv, vt = np.linalg.svd(act)
            rank = int(np.sum(sv > 1e-10 * sv[0]))
            N = vt[rank:].T
        else:
            N = np.eye(p)
    else:
        N = np.eye(p)
    if N.shape[1]:
        # stationarity on the face; objective values are too flat to resolve
        # the last digits, the gradient is not
        def proj_grad(y):
            return N.T @ negobj(phi + N @ y)[1]

        res = optimize.root(proj_grad, np.zeros(N.shape[1]), method="hybr", options={"xtol": 1e-15})
        cand = phi + N @ res.x
        feasible = not rows or np.all(np.array(rows) @ cand >= -1e-10)
        better = np.linalg.norm(proj_grad(res.x)) < np.linalg.norm(proj_grad(np.zeros(N.shape[1])))
        if feasible and better and negobj(cand)[0] <= negobj(phi)[0] + 1e-12:
            phi = cand
    return x, phi, -negobj(phi)[0]
