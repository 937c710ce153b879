"""Compiled stencil kernels.

Arrays are (nx, ny), indexed [i, j] with i along the strip. Ghost columns
hold T = 1 on the left and T = 0 on the right; ghost rows mirror (Neumann)
or wrap (periodic). Fx has shape (nx+1, ny), Fy has shape (nx, ny+1), both
volume fluxes (velocity times face length).
"""
import math

import numpy as np
from numba import njit

LOGISTIC, IGNITION, ARRHENIUS = 0, 1, 2


@njit(cache=True, error_model="numpy")
def reaction_rate(code, p0, p1, T):
    """f(T) for the built-in families; zero outside [0, 1]."""
    if T <= 0.0 or T >= 1.0:
        return 0.0
    if code == LOGISTIC:
        return T * (1.0 - T)
    if code == IGNITION:
        if T <= p0:
            return 0.0
        s = (T - p0) / p1
        if s >= 1.0:
            return 1.0 - T
        return (1.0 - T) * s * s * (3.0 - 2.0 * s)
    return p1 * (1.0 - T) * math.exp(-p0 / T)


@njit(cache=True, error_model="numpy")
def reaction_array(code, p0, p1, scale, T):
    out = np.empty(T.size)
    flat = T.ravel()
    for k in range(flat.size):
        out[k] = scale * reaction_rate(code, p0, p1, flat[k])
    return out.reshape(T.shape)


@njit(cache=True, error_model="numpy")
def _react(T, code, p0, p1, rate, dt):
    # explicit midpoint on dT/dt = rate f(T), step dt
    flat = T.ravel()
    a, b = 0.5 * dt * rate, dt * rate
    if code == LOGISTIC:
        for k in range(flat.size):
            v = flat[k]
            w = min(max(v, 0.0), 1.0)
            mid = v + a * w * (1.0 - w)
            m = min(max(mid, 0.0), 1.0)
            flat[k] = v + b * m * (1.0 - m)
    else:
        for k in range(flat.size):
            v = flat[k]
            mid = v + a * reaction_rate(code, p0, p1, v)
            flat[k] = v + b * reaction_rate(code, p0, p1, mid)


@njit(cache=True, error_model="numpy")
def _advect(T, out, P, Fxp, Fxm, Fyp, Fym, dx, dy, dt, periodic, has_fy):
    """First-order upwind in flux form; Fxp/Fxm (Fyp/Fym) are the positive
    and negative parts of the face fluxes. Returns the mass (T * area)
    entering through the left and right closures.

    Neumann wall faces must carry zero flux."""
    nx, ny = T.shape
    c = dt / (dx * dy)
    pad(T, P, periodic)
    G = np.empty((nx + 1, ny))
    for i in range(nx + 1):
        for j in range(ny):
            G[i, j] = Fxp[i, j] * P[i, j + 1] + Fxm[i, j] * P[i + 1, j + 1]
    if has_fy:
        # one combined net flux per cell, so a constant state is reproduced
        # exactly when the discrete divergence vanishes
        g = np.empty(ny + 1)
        for i in range(nx):
            for j in range(ny + 1):
                g[j] = Fyp[i, j] * P[i + 1, j] + Fym[i, j] * P[i + 1, j + 1]
            for j in range(ny):
                net = (G[i, j] - G[i + 1, j]) + (g[j] - g[j + 1])
                out[i, j] = P[i + 1, j + 1] + c * net
    else:
        for i in range(nx):
            for j in range(ny):
                out[i, j] = P[i + 1, j + 1] + c * (G[i, j] - G[i + 1, j])
    inflow = 0.0
    for j in range(ny):
        inflow += dt * (G[0, j] - G[nx, j])
    return inflow


@njit(cache=True, error_model="numpy")
def pad(T, P, periodic):
    """Copy T into P[1:-1, 1:-1] and fill the ghost cells."""
    nx, ny = T.shape
    for i in range(nx):
        for j in range(ny):
            P[i + 1, j + 1] = T[i, j]
    for j in range(ny + 2):
        P[0, j] = 1.0
        P[nx + 1, j] = 0.0
    for i in range(1, nx + 1):
        if periodic:
            P[i, 0] = P[i, ny]
            P[i, ny + 1] = P[i, 1]
        else:
            P[i, 0] = P[i, 1]
            P[i, ny + 1] = P[i, ny]


@njit(cache=True, error_model="numpy")
def _diffuse(T, out, P, kappa, dx, dy, dt, periodic):
    nx, ny = T.shape
    ax = kappa * dt / (dx * dx)
    ay = kappa * dt / (dy * dy)
    pad(T, P, periodic)
    for i in range(nx):
        for j in range(ny):
            v = P[i + 1, j + 1]
            out[i, j] = (v + ax * (P[i, j + 1] - 2.0 * v + P[i + 2, j + 1])
                         + ay * (P[i + 1, j] - 2.0 * v + P[i + 1, j + 2]))
    area_rate = kappa * dt * dy / dx
    inflow = 0.0
    for j in range(ny):
        inflow += area_rate * ((1.0 - T[0, j]) - T[nx - 1, j])
    return inflow


@njit(cache=True, error_model="numpy")
def strang_step(T, W, Fxp, Fxm, Fyp, Fym, has_flow, has_fy, dx, dy, kappa, rate, code,
                p0, p1, dt, periodic):
    """One Strang step R(dt/2) A(dt) D(dt) R(dt/2), in place on T.

    Returns (closure inflow as T * area, min T, max T, nan flag)."""
    nx, ny = T.shape
    P = np.empty((nx + 2, ny + 2))
    _react(T, code, p0, p1, rate, 0.5 * dt)
    inflow = 0.0
    if has_flow:
        inflow += _advect(T, W, P, Fxp, Fxm, Fyp, Fym, dx, dy, dt, periodic, has_fy)
        inflow += _diffuse(W, T, P, kappa, dx, dy, dt, periodic)
    else:
        inflow += _diffuse(T, W, P, kappa, dx, dy, dt, periodic)
        T[:, :] = W
    _react(T, code, p0, p1, rate, 0.5 * dt)
    mn, mx = np.inf, -np.inf
    bad = False
    for i in range(nx):
        for j in range(ny):
            v = T[i, j]
            if v != v:
                bad = True
            elif v < mn:
                mn = v
            if v > mx:
                mx = v
    return inflow, mn, mx, bad


@njit(cache=True, error_model="numpy")
def residual(T, Fxp, Fxm, Fyp, Fym, has_flow, dx, dy, kappa, rate, code, p0, p1, periodic):
    """Discrete kappa Lap T - div(u T) + rate f(T) on the solver stencils."""
    nx, ny = T.shape
    res = np.empty_like(T)
    for i in range(nx):
        for j in range(ny):
            v = T[i, j]
            left = 1.0 if i == 0 else T[i - 1, j]
            right = 0.0 if i == nx - 1 else T[i + 1, j]
            if j == 0:
                down = T[i, ny - 1] if periodic else v
            else:
                down = T[i, j - 1]
            if j == ny - 1:
                up = T[i, 0] if periodic else v
            else:
                up = T[i, j + 1]
            res[i, j] = (kappa * ((left - 2 * v + right) / (dx * dx)
                                  + (down - 2 * v + up) / (dy * dy))
                         + rate * reaction_rate(code, p0, p1, v))
    if has_flow:
        W = np.zeros_like(T)
        P = np.empty((nx + 2, ny + 2))
        _advect(T, W, P, Fxp, Fxm, Fyp, Fym, dx, dy, 1.0, periodic, True)
        for i in range(nx):
            for j in range(ny):
                res[i, j] += W[i, j] - T[i, j]
    return res


@njit(cache=True, error_model="numpy")
def max_outflow(Fx, Fy, periodic):
    """Largest total outgoing volume flux of any cell."""
    nx = Fy.shape[0]
    ny = Fx.shape[1]
    best = 0.0
    for i in range(nx):
        for j in range(ny):
            out = max(-Fx[i, j], 0.0) + max(Fx[i + 1, j], 0.0)
            if periodic or j > 0:
                out += max(-Fy[i, j], 0.0)
            if periodic or j < ny - 1:
                out += max(Fy[i, j + 1], 0.0)
            if out > best:
                best = out
    return best
