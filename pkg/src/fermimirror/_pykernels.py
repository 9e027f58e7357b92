"""Pure-Python/numpy time-stepping kernels.

Same signatures and results as the compiled ``_ckernels`` module; selected
automatically when the extension is not built.
"""

import math

import numpy as np

SQRT2 = math.sqrt(2.0)
DIVERGENCE = 1e12


def rk4_meanfield(y0, omega_m, g, delta, kappa, eta, dt, nsteps, stride, out):
    """Classical RK4 for the noise-free mean-field equations.

    State is ``(X_M, P_M, Re c, Im c)``. The state before step ``i`` is
    written to ``out[i // stride]`` whenever ``i % stride == 0``.
    Returns ``(final_state, steps_done)``; ``steps_done < nsteps`` means the
    state left the ``1e12`` ball.
    """
    x, p, cr, ci = (float(v) for v in y0)
    s2g = SQRT2 * g

    def rhs(x, p, cr, ci):
        det = delta + s2g * x
        return (
            omega_m * p,
            -omega_m * x - 2.0 * s2g * (cr * cr + ci * ci),
            det * ci + eta - kappa * cr,
            -det * cr - kappa * ci,
        )

    h2 = 0.5 * dt
    h6 = dt / 6.0
    for i in range(nsteps):
        if i % stride == 0:
            out[i // stride, 0] = x
            out[i // stride, 1] = p
            out[i // stride, 2] = cr
            out[i // stride, 3] = ci
        k1 = rhs(x, p, cr, ci)
        k2 = rhs(x + h2 * k1[0], p + h2 * k1[1], cr + h2 * k1[2], ci + h2 * k1[3])
        k3 = rhs(x + h2 * k2[0], p + h2 * k2[1], cr + h2 * k2[2], ci + h2 * k2[3])
        k4 = rhs(x + dt * k3[0], p + dt * k3[1], cr + dt * k3[2], ci + dt * k3[3])
        x += h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        p += h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        cr += h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        ci += h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        if not (abs(x) < DIVERGENCE and abs(p) < DIVERGENCE
                and abs(cr) < DIVERGENCE and abs(ci) < DIVERGENCE):
            return np.array([x, p, cr, ci]), i + 1
    return np.array([x, p, cr, ci]), nsteps


def em_linear(J, B, X, dt, normals, stride, out):
    """Euler-Maruyama for ``df = J f dt + B dW`` on a batch of members.

    ``X`` has shape ``(E, 4)`` and is updated in place; ``normals`` has
    shape ``(E, n, 2)``; ``B`` is ``4x2``. Returns False if any state became
    non-finite.
    """
    A = np.eye(4) + dt * np.asarray(J, dtype=float)
    At = np.ascontiguousarray(A.T)
    Bt = np.ascontiguousarray(math.sqrt(dt) * np.asarray(B, dtype=float).T)
    n = normals.shape[1]
    for i in range(n):
        if i % stride == 0:
            out[:, i // stride, :] = X
        X[...] = X @ At + normals[:, i, :] @ Bt
    return bool(np.all(np.isfinite(X)))
