"""Independent numerical oracles used by the tests.

Everything here is computed from first principles (geometry and finite
differences), never by calling the code paths under test.
"""

from __future__ import annotations

import numpy as np

FD_STEP = 1e-5


def link_points(model, q):
    """Positions of the two point masses, straight from the geometry."""
    l1, l2 = model.link_lengths
    bx, by = model.base_position
    p1 = np.array([bx + l1 * np.cos(q[0]), by + l1 * np.sin(q[0])])
    p2 = p1 + np.array([l2 * np.cos(q[0] + q[1]), l2 * np.sin(q[0] + q[1])])
    return p1, p2


def mass_matrix_geometric(model, q, h=1e-30):
    """sum_i m_i J_i' J_i with the point Jacobians J_i taken by complex-step
    differentiation of the link positions (machine-precision derivatives)."""
    n = len(q)
    J1 = np.zeros((2, n))
    J2 = np.zeros((2, n))
    for i in range(n):
        e = np.zeros(n, dtype=complex)
        e[i] = 1j * h
        p1, p2 = link_points(model, q.astype(complex) + e)
        J1[:, i] = np.imag(p1) / h
        J2[:, i] = np.imag(p2) / h
    m1, m2 = model.point_masses
    return m1 * J1.T @ J1 + m2 * J2.T @ J2


def euler_lagrange_torque(model, q, qdot, qddot, h=1e-6):
    """Generalized force d/dt(dT/dqdot) - dT/dq for T = 0.5 qdot' M(q) qdot,
    with every q-derivative of the geometric mass matrix taken by central
    differences: M qddot + Mdot qdot - 0.5 qdot' (dM/dq_i) qdot."""
    n = len(q)
    M = mass_matrix_geometric(model, q)
    dM = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        dM.append((mass_matrix_geometric(model, q + e) - mass_matrix_geometric(model, q - e)) / (2 * h))
    Mdot = sum(qdot[i] * dM[i] for i in range(n))
    dT_dq = np.array([0.5 * qdot @ dM[i] @ qdot for i in range(n)])
    return M @ qddot + Mdot @ qdot - dT_dq


def fd_jacobian(fun, x, h=1e-7):
    """Central-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((fun(x + e) - fun(x - e)) / (2 * h))
    return np.stack(cols, axis=1)


def ellipsoid_boundary(Q, n_samples, rng):
    """Points z with z' inv(Q) z = 1."""
    L = np.linalg.cholesky(Q)
    W = rng.normal(size=(n_samples, Q.shape[0]))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    return W @ L.T


def ellipsoid_shell(Q, n_samples, rng, lo=0.0, hi=1.0):
    """Points with lo < z' inv(Q) z <= hi (barrier in (lo-1, hi-1])."""
    pts = ellipsoid_boundary(Q, n_samples, rng)
    radii = np.sqrt(rng.uniform(lo, hi, size=n_samples))
    return pts * radii[:, None]


def random_contractions(shape, n_samples, rng):
    """Matrices with spectral norm <= 1 (scaled random gaussians)."""
    out = []
    for _ in range(n_samples):
        D = rng.normal(size=shape)
        out.append(D * (rng.uniform(0, 1) / np.linalg.norm(D, 2)))
    return out


def support_function(Q, c):
    """max |c z| over the ellipsoid z' inv(Q) z <= 1."""
    c = np.asarray(c, dtype=float).reshape(1, -1)
    return float(np.sqrt(c @ Q @ c.T))


def observed_order(errors, steps):
    """Least-squares slope of log error vs log step size."""
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
