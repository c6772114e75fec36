"""Damped least-squares engine for the decaying-cosine trace model.

Single source for both backends: the numba backend compiles
``lm_damped_cosine`` with @njit, the numpy backend runs it as-is (the
per-iteration work is vectorized, only the outer iteration is a Python
loop). The 4x4 Cholesky solve is inlined so the function has no callees.

Model: m(tau) = offset - contrast * exp(-gamma*tau) * cos(omega*tau)
Parameters: theta = [omega, gamma, contrast, offset]
Objective:  cost(theta) = sum(w * (y - m)^2)
"""

from __future__ import annotations

import numpy as np

# status codes returned by lm_damped_cosine
LM_CONVERGED = 1
LM_MAXITER = 0
LM_FAILED = 2

_STEP_TOL = 1e-11
_COST_TOL = 1e-14
_LAMBDA_MAX = 1e14


def lm_damped_cosine(tau, y, w, theta0, max_iter):
    """Levenberg-Marquardt minimization of the weighted trace misfit.

    Steps are accepted only when they do not increase the cost, so the
    final cost never exceeds the cost at theta0.

    Returns (theta, cost0, cost, n_iter, status).
    """
    theta = theta0.copy()

    env = np.exp(-theta[1] * tau)
    resid = y - (theta[3] - theta[2] * env * np.cos(theta[0] * tau))
    cost = np.sum(w * resid * resid)
    cost0 = cost

    lam = 1e-3
    status = LM_MAXITER
    it = 0
    if not np.isfinite(cost):
        return theta, cost0, cost, it, LM_FAILED

    A = np.empty((4, 4))
    L = np.empty((4, 4))
    g = np.empty(4)
    delta = np.empty(4)
    zvec = np.empty(4)
    theta_try = np.empty(4)

    while it < max_iter:
        it += 1
        env = np.exp(-theta[1] * tau)
        arg = theta[0] * tau
        c = np.cos(arg)
        s = np.sin(arg)
        resid = y - (theta[3] - theta[2] * env * c)

        j0 = theta[2] * tau * env * s
        j1 = theta[2] * tau * env * c
        j2 = -(env * c)
        wj0 = w * j0
        wj1 = w * j1
        wj2 = w * j2

        A[0, 0] = np.sum(wj0 * j0)
        A[0, 1] = np.sum(wj0 * j1)
        A[0, 2] = np.sum(wj0 * j2)
        A[0, 3] = np.sum(wj0)
        A[1, 1] = np.sum(wj1 * j1)
        A[1, 2] = np.sum(wj1 * j2)
        A[1, 3] = np.sum(wj1)
        A[2, 2] = np.sum(wj2 * j2)
        A[2, 3] = np.sum(wj2)
        A[3, 3] = np.sum(w)
        for r in range(4):
            for q in range(r):
                A[r, q] = A[q, r]

        g[0] = np.sum(wj0 * resid)
        g[1] = np.sum(wj1 * resid)
        g[2] = np.sum(wj2 * resid)
        g[3] = np.sum(w * resid)

        diag_floor = 1e-10 * (A[0, 0] + A[1, 1] + A[2, 2] + A[3, 3]) / 4.0 + 1e-300

        accepted = False
        cost_new = cost
        while True:
            # damped normal equations: (A + lam*diag) delta = g
            ok = True
            for r in range(4):
                for q in range(4):
                    L[r, q] = A[r, q]
                bump = A[r, r]
                if bump < diag_floor:
                    bump = diag_floor
                L[r, r] = A[r, r] + lam * bump
            # in-place Cholesky of the damped matrix (lower triangle)
            for r in range(4):
                for q in range(r + 1):
                    acc = L[r, q]
                    for k in range(q):
                        acc -= L[r, k] * L[q, k]
                    if r == q:
                        if acc <= 0.0 or not np.isfinite(acc):
                            ok = False
                            break
                        L[r, r] = np.sqrt(acc)
                    else:
                        L[r, q] = acc / L[q, q]
                if not ok:
                    break

            if ok:
                for r in range(4):
                    acc = g[r]
                    for k in range(r):
                        acc -= L[r, k] * zvec[k]
                    zvec[r] = acc / L[r, r]
                for r in range(3, -1, -1):
                    acc = zvec[r]
                    for k in range(r + 1, 4):
                        acc -= L[k, r] * delta[k]
                    delta[r] = acc / L[r, r]

                for r in range(4):
                    theta_try[r] = theta[r] + delta[r]
                # project onto the physical region: frequency, decay rate
                # and contrast are all nonnegative
                for r in range(3):
                    if theta_try[r] < 0.0:
                        theta_try[r] = 0.0
                for r in range(4):
                    delta[r] = theta_try[r] - theta[r]
                env_t = np.exp(-theta_try[1] * tau)
                resid_t = y - (theta_try[3] - theta_try[2] * env_t * np.cos(theta_try[0] * tau))
                cost_new = np.sum(w * resid_t * resid_t)
                if np.isfinite(cost_new) and cost_new <= cost:
                    accepted = True
                    break

            lam *= 10.0
            if lam > _LAMBDA_MAX:
                break

        if not accepted:
            # No direction improves the cost: numerical optimum (or a
            # degenerate objective where the gradient vanished).
            status = LM_CONVERGED if np.isfinite(cost) else LM_FAILED
            break

        decrease = cost - cost_new
        for r in range(4):
            theta[r] = theta_try[r]
        cost = cost_new
        lam = lam * 0.3
        if lam < 1e-12:
            lam = 1e-12

        step_small = True
        for r in range(4):
            if abs(delta[r]) > _STEP_TOL * (abs(theta[r]) + 1e-9):
                step_small = False
        if step_small or decrease <= _COST_TOL * cost:
            status = LM_CONVERGED
            break

    return theta, cost0, cost, it, status


def lm_fixed_omega(tau, y, w, omega, phi0, max_iter):
    """Profile fit: minimize the trace misfit over (gamma, contrast, offset)
    with the frequency held fixed.

    Used to probe the profile likelihood around a fitted frequency; the
    structure mirrors lm_damped_cosine with a 3x3 system.

    Returns (phi, cost, status).
    """
    phi = phi0.copy()
    c = np.cos(omega * tau)

    env = np.exp(-phi[0] * tau)
    resid = y - (phi[2] - phi[1] * env * c)
    cost = np.sum(w * resid * resid)
    if not np.isfinite(cost):
        return phi, cost, LM_FAILED

    lam = 1e-3
    status = LM_MAXITER
    it = 0
    A = np.empty((3, 3))
    L = np.empty((3, 3))
    g = np.empty(3)
    delta = np.empty(3)
    zvec = np.empty(3)
    phi_try = np.empty(3)

    while it < max_iter:
        it += 1
        env = np.exp(-phi[0] * tau)
        resid = y - (phi[2] - phi[1] * env * c)

        j0 = phi[1] * tau * env * c
        j1 = -(env * c)
        wj0 = w * j0
        wj1 = w * j1

        A[0, 0] = np.sum(wj0 * j0)
        A[0, 1] = np.sum(wj0 * j1)
        A[0, 2] = np.sum(wj0)
        A[1, 1] = np.sum(wj1 * j1)
        A[1, 2] = np.sum(wj1)
        A[2, 2] = np.sum(w)
        for r in range(3):
            for q in range(r):
                A[r, q] = A[q, r]
        g[0] = np.sum(wj0 * resid)
        g[1] = np.sum(wj1 * resid)
        g[2] = np.sum(w * resid)

        diag_floor = 1e-10 * (A[0, 0] + A[1, 1] + A[2, 2]) / 3.0 + 1e-300

        accepted = False
        cost_new = cost
        while True:
            ok = True
            for r in range(3):
                for q in range(3):
                    L[r, q] = A[r, q]
                bump = A[r, r]
                if bump < diag_floor:
                    bump = diag_floor
                L[r, r] = A[r, r] + lam * bump
            for r in range(3):
                for q in range(r + 1):
                    acc = L[r, q]
                    for k in range(q):
                        acc -= L[r, k] * L[q, k]
                    if r == q:
                        if acc <= 0.0 or not np.isfinite(acc):
                            ok = False
                            break
                        L[r, r] = np.sqrt(acc)
                    else:
                        L[r, q] = acc / L[q, q]
                if not ok:
                    break

            if ok:
                for r in range(3):
                    acc = g[r]
                    for k in range(r):
                        acc -= L[r, k] * zvec[k]
                    zvec[r] = acc / L[r, r]
                for r in range(2, -1, -1):
                    acc = zvec[r]
                    for k in range(r + 1, 3):
                        acc -= L[k, r] * delta[k]
                    delta[r] = acc / L[r, r]

                for r in range(3):
                    phi_try[r] = phi[r] + delta[r]
                # gamma and contrast stay nonnegative
                for r in range(2):
                    if phi_try[r] < 0.0:
                        phi_try[r] = 0.0
                for r in range(3):
                    delta[r] = phi_try[r] - phi[r]
                env_t = np.exp(-phi_try[0] * tau)
                resid_t = y - (phi_try[2] - phi_try[1] * env_t * c)
                cost_new = np.sum(w * resid_t * resid_t)
                if np.isfinite(cost_new) and cost_new <= cost:
                    accepted = True
                    break

            lam *= 10.0
            if lam > _LAMBDA_MAX:
                break

        if not accepted:
            status = LM_CONVERGED if np.isfinite(cost) else LM_FAILED
            break

        decrease = cost - cost_new
        for r in range(3):
            phi[r] = phi_try[r]
        cost = cost_new
        lam = lam * 0.3
        if lam < 1e-12:
            lam = 1e-12

        step_small = True
        for r in range(3):
            if abs(delta[r]) > _STEP_TOL * (abs(phi[r]) + 1e-9):
                step_small = False
        if step_small or decrease <= _COST_TOL * cost:
            status = LM_CONVERGED
            break

    return phi, cost, status
