"""Reference computations that share no code path with the package.

Dense matrices, generic matrix exponentials and Runge-Kutta integration
only; nothing here knows about block structure or Gauss-Legendre rules.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm


def dense_generator(omegas, kappa):
    d = 2 * (len(omegas) + 1)
    A = np.zeros((d, d))
    A[0, 1] = 1.0
    for n, w in enumerate(omegas, start=1):
        A[2 * n, 2 * n + 1] = w
        A[2 * n + 1, 2 * n] = -w
        A[2 * n + 1, 2 * n + 1] = -2.0 * kappa
    return A


def dense_input(bs):
    B = np.zeros(2 * (len(bs) + 1))
    B[1] = 1.0
    B[3::2] = bs
    return B


def rk4_expm(A, t, nsteps):
    """Batched classical RK4 for X' = A X, X(0) = I, one step size per matrix.

    ``A`` has shape (k, n, n) and ``t`` shape (k,). Richardson extrapolation
    between ``nsteps`` and ``2 * nsteps`` steps gives O(h^5) accuracy.
    """

    def run(steps):
        h = (t / steps)[:, None, None]
        X = np.broadcast_to(np.eye(A.shape[-1]), A.shape).copy()
        for _ in range(steps):
            k1 = A @ X
            k2 = A @ (X + 0.5 * h * k1)
            k3 = A @ (X + 0.5 * h * k2)
            k4 = A @ (X + h * k3)
            X = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return X

    coarse = run(nsteps)
    fine = run(2 * nsteps)
    return fine + (fine - coarse) / 15.0


def rk_propagate(A, B, x0, u, tau, rtol=1e-12, atol=1e-14):
    """Dense DOP853 integration of x' = A x + B u(t)."""
    sol = solve_ivp(lambda t, x: A @ x + B * float(u(t)), (0.0, tau), x0,
                    method="DOP853", rtol=rtol, atol=atol)
    assert sol.success
    return sol.y[:, -1]


def van_loan_gramian(A, B, Qinv, tau):
    """int_0^tau exp(sA) B Qinv B' exp(sA') ds via one block exponential."""
    n = A.shape[0]
    C = np.zeros((2 * n, 2 * n))
    C[:n, :n] = -A
    C[:n, n:] = B @ Qinv @ B.T
    C[n:, n:] = A.T
    F = expm(C * tau)
    return F[n:, n:].T @ F[:n, n:]


def adjoint_driven_endpoint(A_full, B_full, A_red, B_red, Qinv, nu, tau, x0):
    """Endpoint of x' = A_full x + B_full u with u(t) = Qinv B_red' exp((tau-t)A_red') nu.

    The control is generated by the costate lambda' = -A_red' lambda, so the
    pair (x, lambda) is linear and one augmented exponential gives x(tau).
    """
    n, d = A_full.shape[0], A_red.shape[0]
    C = np.zeros((n + d, n + d))
    C[:n, :n] = A_full
    C[:n, n:] = B_full[:, None] @ (Qinv @ B_red[None, :])
    C[n:, n:] = -A_red.T
    lam0 = expm(tau * A_red.T) @ nu
    z = expm(tau * C) @ np.concatenate([x0, lam0])
    return z[:n]


def brute_gap_sum(omegas, K):
    return math.fsum(
        1.0 / (omegas[i] - omegas[j]) ** 2
        for i in range(K) for j in range(K) if i != j
    )
