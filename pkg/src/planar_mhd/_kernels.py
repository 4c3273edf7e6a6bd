"""Compiled inner loops for the time integrators.

The state is packed into a ``(7, N)`` array with rows
``J, u, w_x, w_y, h_x, h_y, P`` (see ``ROWS``).  Boundary policy codes:

* ``BC_DIRICHLET``: u and w held at their current boundary values
  (zero for homogeneous walls, ``+-a L`` for the dilation test);
* ``BC_FREE``: zero total traction, i.e. the momentum fluxes
  ``lam u_y/J - P - |h|^2/2`` and ``mu w_y/J + h`` vanish outside the
  domain.  Boundary nodes own a half cell.

Loops are written as separate branch-free passes so LLVM can vectorize
them.  No fastmath: results must be reproducible bit for bit.
"""

import numpy as np
from numba import njit

ROWS = ("J", "u", "wx", "wy", "hx", "hy", "P")
NROWS = 7

BC_DIRICHLET = 0
BC_FREE = 2

OK = 0
COLLAPSE = 1
SOLVE_FAIL = 2

_EPS_RATE = 1e-12


@njit(cache=True, error_model="numpy")
def deriv(f, dy, out):
    """Central differences inside, second-order one-sided at both ends."""
    n = f.shape[0]
    ih2 = 0.5 / dy
    for i in range(1, n - 1):
        out[i] = (f[i + 1] - f[i - 1]) * ih2
    # Written in differences so constants give exactly zero.
    out[0] = (4.0 * (f[1] - f[0]) - (f[2] - f[0])) * ih2
    out[n - 1] = (4.0 * (f[n - 1] - f[n - 2]) - (f[n - 1] - f[n - 3])) * ih2


@njit(cache=True, error_model="numpy")
def _node_terms(U, i, uy, wy0, wy1, invJ, lam, mu, gam, K):
    a = uy * invJ
    b0 = wy0 * invJ
    b1 = wy1 * invJ
    K[0, i] = uy
    K[4, i] = b0 - a * U[4, i]
    K[5, i] = b1 - a * U[5, i]
    K[6, i] = -gam * a * U[6, i] + (gam - 1.0) * (lam * a * a + mu * (b0 * b0 + b1 * b1))


@njit(cache=True, error_model="numpy")
def rhs_stage(U, inv_rho0, dy, lam, mu, gam, bc, has_src, src, K, base, c1, prev, c2, OUT, W):
    """``K = rhs(U) (+ src)`` and then ``OUT = base + (c1 K + c2 prev)``.

    The semi-discrete right-hand side is in flux form: momentum rows are
    differences of face fluxes, so discrete momentum changes only through
    the boundary.  ``W`` is a (5, N) scratch array.
    """
    n = U.shape[1]
    J = U[0]
    u = U[1]
    w0 = U[2]
    w1 = U[3]
    h0 = U[4]
    h1 = U[5]
    P = U[6]
    invJ = W[0]
    Q = W[1]
    phi = W[2]
    ps0 = W[3]
    ps1 = W[4]
    ih2 = 0.5 / dy
    invdy = 1.0 / dy
    gm1 = gam - 1.0
    lamdy = lam * invdy
    mudy = mu * invdy
    for i in range(n):
        invJ[i] = 1.0 / J[i]
        Q[i] = P[i] + 0.5 * (h0[i] * h0[i] + h1[i] * h1[i])
    for i in range(n - 1):
        ijf = 2.0 / (J[i] + J[i + 1])
        phi[i] = lamdy * (u[i + 1] - u[i]) * ijf - 0.5 * (Q[i] + Q[i + 1])
        ps0[i] = mudy * (w0[i + 1] - w0[i]) * ijf + 0.5 * (h0[i] + h0[i + 1])
        ps1[i] = mudy * (w1[i + 1] - w1[i]) * ijf + 0.5 * (h1[i] + h1[i + 1])
    KJ = K[0]
    Ku = K[1]
    Kw0 = K[2]
    Kw1 = K[3]
    Kh0 = K[4]
    Kh1 = K[5]
    KP = K[6]
    for i in range(1, n - 1):
        uy = (u[i + 1] - u[i - 1]) * ih2
        a = uy * invJ[i]
        b0 = (w0[i + 1] - w0[i - 1]) * ih2 * invJ[i]
        b1 = (w1[i + 1] - w1[i - 1]) * ih2 * invJ[i]
        KJ[i] = uy
        Kh0[i] = b0 - a * h0[i]
        Kh1[i] = b1 - a * h1[i]
        KP[i] = -gam * a * P[i] + gm1 * (lam * a * a + mu * (b0 * b0 + b1 * b1))
        s = invdy * inv_rho0[i]
        Ku[i] = (phi[i] - phi[i - 1]) * s
        Kw0[i] = (ps0[i] - ps0[i - 1]) * s
        Kw1[i] = (ps1[i] - ps1[i - 1]) * s
    # Boundary nodes.
    m = n - 1
    _node_terms(U, 0, (4.0 * (u[1] - u[0]) - (u[2] - u[0])) * ih2,
                (4.0 * (w0[1] - w0[0]) - (w0[2] - w0[0])) * ih2,
                (4.0 * (w1[1] - w1[0]) - (w1[2] - w1[0])) * ih2, invJ[0], lam, mu, gam, K)
    _node_terms(U, m, (4.0 * (u[m] - u[m - 1]) - (u[m] - u[m - 2])) * ih2,
                (4.0 * (w0[m] - w0[m - 1]) - (w0[m] - w0[m - 2])) * ih2,
                (4.0 * (w1[m] - w1[m - 1]) - (w1[m] - w1[m - 2])) * ih2, invJ[m], lam, mu, gam, K)
    if bc == BC_FREE:
        s0 = 2.0 * invdy * inv_rho0[0]
        sm = 2.0 * invdy * inv_rho0[m]
        Ku[0] = phi[0] * s0
        Kw0[0] = ps0[0] * s0
        Kw1[0] = ps1[0] * s0
        Ku[m] = -phi[m - 1] * sm
        Kw0[m] = -ps0[m - 1] * sm
        Kw1[m] = -ps1[m - 1] * sm
    else:
        Ku[0] = 0.0
        Kw0[0] = 0.0
        Kw1[0] = 0.0
        Ku[m] = 0.0
        Kw0[m] = 0.0
        Kw1[m] = 0.0
    k = K.ravel()
    if has_src:
        s_ = src.ravel()
        for j in range(k.shape[0]):
            k[j] += s_[j]
    b = base.ravel()
    p = prev.ravel()
    o = OUT.ravel()
    for j in range(o.shape[0]):
        o[j] = b[j] + (c1 * k[j] + c2 * p[j])


@njit(cache=True, error_model="numpy")
def heun_step(U, inv_rho0, dy, lam, mu, gam, bc, dt, has_src, src0, src1, out, k1, k2, st, W):
    """One Heun step ``out = U + dt/2 (k1 + k2)``.

    ``src0``/``src1`` are (7, N) sources at the start and end of the step,
    already in per-unit-mass form; ignored unless ``has_src``.
    """
    half = 0.5 * dt
    rhs_stage(U, inv_rho0, dy, lam, mu, gam, bc, has_src, src0, k1, U, dt, k1, 0.0, st, W)
    rhs_stage(st, inv_rho0, dy, lam, mu, gam, bc, has_src, src1, k2, U, half, k1, half, out, W)


@njit(cache=True, error_model="numpy")
def strain_and_floor(U, rho0, dy, dt, log_int, a_prev, J_floor, scratch, lam, mu, cfl, dt_max):
    """Post-step pass: advance the trapezoidal integral of ``u_y/J``, check
    the J floor and return the explicit step limit for the new state.

    Returns ``(bad, dt_next)`` with ``bad`` the leftmost node where
    ``J <= J_floor`` or -1.  ``dt_next`` equals ``stable_dt_explicit(U, ...)``.
    """
    n = U.shape[1]
    deriv(U[1], dy, scratch)
    half = 0.5 * dt
    c = dy * dy / (2.0 * max(lam, mu))
    best = dt_max / cfl
    for i in range(n):
        a_new = scratch[i] / U[0, i]
        log_int[i] += half * (a_prev[i] + a_new)
        a_prev[i] = a_new
        best = min(best, c * rho0[i] * U[0, i], 1.0 / (abs(a_new) + _EPS_RATE))
    bad = -1
    for i in range(n):
        if not (U[0, i] > J_floor):
            bad = i
            break
    return bad, cfl * best


@njit(cache=True, error_model="numpy")
def stable_dt_explicit(U, rho0, dy, lam, mu, cfl, dt_max):
    n = U.shape[1]
    uy = np.empty(n)
    deriv(U[1], dy, uy)
    c = dy * dy / (2.0 * max(lam, mu))
    best = dt_max / cfl
    for i in range(n):
        a = uy[i] / U[0, i]
        best = min(best, c * rho0[i] * U[0, i], 1.0 / (abs(a) + _EPS_RATE))
    return cfl * best


@njit(cache=True, error_model="numpy")
def stable_dt_imex(U, dy, lam, mu, gam, cfl, dt_max):
    n = U.shape[1]
    J = U[0]
    u = U[1]
    worst = cfl / dt_max
    ih2 = 0.5 / dy
    transverse = 1.0 / mu
    for i in range(n):
        if i == 0:
            uy = (4.0 * (u[1] - u[0]) - (u[2] - u[0])) * ih2
        elif i == n - 1:
            uy = (4.0 * (u[n - 1] - u[n - 2]) - (u[n - 1] - u[n - 3])) * ih2
        else:
            uy = (u[i + 1] - u[i - 1]) * ih2
        H = U[4, i] * U[4, i] + U[5, i] * U[5, i]
        acoustic = (gam * U[6, i] + H) / lam
        rate = abs(uy / J[i]) + max(acoustic, transverse) + _EPS_RATE
        worst = max(worst, rate)
    return cfl / worst


@njit(cache=True, error_model="numpy")
def thomas(a, b, c, d, x, cp, dp):
    """Solve a tridiagonal system; returns False if diagonal dominance fails.

    ``a`` is the sub-diagonal (a[0] unused), ``c`` the super-diagonal
    (c[n-1] unused).  Weak dominance in every row and strict dominance in
    at least one guarantee a stable elimination without pivoting.
    """
    n = b.shape[0]
    strict = False
    for i in range(n):
        off = 0.0
        if i > 0:
            off += abs(a[i])
        if i < n - 1:
            off += abs(c[i])
        if not abs(b[i]) >= off:
            return False
        if abs(b[i]) > off:
            strict = True
    if not strict:
        return False
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        m = b[i] - a[i] * cp[i - 1]
        if i < n - 1:
            cp[i] = c[i] / m
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return True


@njit(cache=True, error_model="numpy")
def _implicit_momentum(J, vel, rho0, dy, visc, dt, bc, force, x, tri):
    """Solve ``rho0 v' - dt (visc v'_y / J)_y = rho0 v + dt force``.

    ``force`` is per unit length; boundary rows follow the policy (half
    cells for the free boundary, identity rows otherwise).
    """
    n = J.shape[0]
    a = tri[0]
    b = tri[1]
    c = tri[2]
    d = tri[3]
    coef = dt * visc / (dy * dy)
    for i in range(1, n - 1):
        gl = coef * 2.0 / (J[i - 1] + J[i])
        gr = coef * 2.0 / (J[i] + J[i + 1])
        a[i] = -gl
        c[i] = -gr
        b[i] = rho0[i] + gl + gr
        d[i] = rho0[i] * vel[i] + dt * force[i]
    if bc == BC_FREE:
        gr = coef * 2.0 / (J[0] + J[1])
        b[0] = 0.5 * rho0[0] + gr
        c[0] = -gr
        d[0] = 0.5 * rho0[0] * vel[0] + dt * force[0]
        gl = coef * 2.0 / (J[n - 2] + J[n - 1])
        a[n - 1] = -gl
        b[n - 1] = 0.5 * rho0[n - 1] + gl
        d[n - 1] = 0.5 * rho0[n - 1] * vel[n - 1] + dt * force[n - 1]
    else:
        b[0] = 1.0
        c[0] = 0.0
        d[0] = vel[0]
        a[n - 1] = 0.0
        b[n - 1] = 1.0
        d[n - 1] = vel[n - 1]
    return thomas(a, b, c, d, x, tri[4], tri[5])


@njit(cache=True, error_model="numpy")
def _face_force(U, row, invdy, out):
    """Explicit momentum force per unit length as a difference of face values.

    ``row == 1``: minus the face average of ``P + |h|^2/2``;
    ``row == 2, 3``: face average of the matching h component.
    Outside faces carry zero, which only matters for the free boundary.
    """
    n = U.shape[1]
    prev = 0.0
    for i in range(n):
        if i < n - 1:
            if row == 1:
                qa = U[6, i] + 0.5 * (U[4, i] * U[4, i] + U[5, i] * U[5, i])
                qb = U[6, i + 1] + 0.5 * (U[4, i + 1] * U[4, i + 1] + U[5, i + 1] * U[5, i + 1])
                face = -0.5 * (qa + qb)
            else:
                face = 0.5 * (U[row + 2, i] + U[row + 2, i + 1])
        else:
            face = 0.0
        out[i] = (face - prev) * invdy
        prev = face


@njit(cache=True, error_model="numpy")
def imex_step(U, rho0, dy, lam, mu, gam, bc, dt, has_src, src, OUT, W, tri):
    """First-order implicit-explicit step.

    Viscous terms are backward Euler; pressure, magnetic-pressure and
    magnetic-tension forces are evaluated at the old level and enter the
    right-hand side of the same implicit solve.  J uses the new velocity;
    h uses old-level gradients.  P is advanced with the integrating factor
    ``(J_old/J_new)^gamma`` so that ``J^gamma P`` grows by exactly
    ``J_old^gamma dt heat`` and is non-decreasing whenever the heating is.
    ``src`` holds raw (per unit length) sources.  Returns a status code.
    """
    n = U.shape[1]
    J = U[0]
    uy = W[0]
    wy0 = W[1]
    wy1 = W[2]
    force = W[3]
    uy_new = W[4]
    deriv(U[1], dy, uy)
    deriv(U[2], dy, wy0)
    deriv(U[3], dy, wy1)
    invdy = 1.0 / dy
    for row in range(1, 4):
        _face_force(U, row, invdy, force)
        if has_src:
            for i in range(n):
                wgt = 0.5 if (i == 0 or i == n - 1) else 1.0
                force[i] += wgt * src[row, i]
        visc = lam if row == 1 else mu
        if not _implicit_momentum(J, U[row], rho0, dy, visc, dt, bc, force, OUT[row], tri):
            return SOLVE_FAIL

    deriv(OUT[1], dy, uy_new)
    gm1 = gam - 1.0
    for i in range(n):
        invJ = 1.0 / J[i]
        a = uy[i] * invJ
        b0 = wy0[i] * invJ
        b1 = wy1[i] * invJ
        sJ = src[0, i] if has_src else 0.0
        sh0 = src[4, i] if has_src else 0.0
        sh1 = src[5, i] if has_src else 0.0
        sP = src[6, i] if has_src else 0.0
        OUT[0, i] = J[i] + dt * (uy_new[i] + sJ)
        OUT[4, i] = U[4, i] + dt * (b0 - a * U[4, i] + sh0)
        OUT[5, i] = U[5, i] + dt * (b1 - a * U[5, i] + sh1)
        heat = gm1 * (lam * a * a + mu * (b0 * b0 + b1 * b1)) + sP
        OUT[6, i] = (J[i] / OUT[0, i]) ** gam * (U[6, i] + dt * heat)
    return OK


@njit(cache=True, error_model="numpy")
def explicit_advance(U, rho0, inv_rho0, dy, lam, mu, gam, bc, t, t_stop, max_steps,
                     cfl, dt_max, J_floor, log_int, a_prev, B, k1, k2, st, W, scratch):
    """Run Heun steps until ``t_stop`` or ``max_steps``; U is updated in place.

    Returns ``(t, steps, status, bad_index)``.
    """
    steps = 0
    tol = 1e-14 * max(1.0, abs(t_stop))
    A = U
    status = OK
    bad = -1
    dt_next = stable_dt_explicit(A, rho0, dy, lam, mu, cfl, dt_max)
    while steps < max_steps and t < t_stop - tol:
        dt = dt_next
        last = t + dt >= t_stop - tol
        if last:
            dt = t_stop - t
        heun_step(A, inv_rho0, dy, lam, mu, gam, bc, dt, False, k1, k1, B, k1, k2, st, W)
        A, B = B, A
        t = t_stop if last else t + dt
        steps += 1
        bad, dt_next = strain_and_floor(A, rho0, dy, dt, log_int, a_prev, J_floor, scratch,
                                        lam, mu, cfl, dt_max)
        if bad >= 0:
            status = COLLAPSE
            break
    if steps % 2 == 1:
        U[:, :] = A
    return t, steps, status, bad
