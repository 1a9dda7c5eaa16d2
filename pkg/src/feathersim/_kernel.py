"""Joint-space dynamics of a plate tree under prescribed root pitch.

World-frame spatial algebra: motion and force vectors are 6-vectors
``[angular; linear]`` referred to the mount origin. Per step the kernel

1. runs forward kinematics and the inverse-dynamics bias pass with the root
   acceleration prescribed and free accelerations set to zero,
2. assembles the free-joint mass matrix from composite inertias,
3. solves for free accelerations with joint springs and plate drag treated
   linearly implicitly, and the added mass implicitly,
4. advances with semi-implicit Euler (velocity first, then position).

The support force on the root body is the spatial force crossing joint 0.
"""

import math

import numpy as np
from numba import njit

OK = 0
NONFINITE = 1
OVERSPEED = 2


@njit(cache=True)
def stroke_angle(t, t_up, t_hold_up, t_down, t_hold_down, amp):
    period = t_up + t_hold_up + t_down + t_hold_down
    tau = t - period * math.floor(t / period)
    half = 0.5 * amp
    if tau < t_up:
        return -half + amp * tau / t_up
    tau -= t_up
    if tau < t_hold_up:
        return half
    tau -= t_hold_up
    if tau < t_down:
        return half - amp * tau / t_down
    return -half


@njit(cache=True)
def _rot(axis, angle, out):
    x, y, z = axis[0], axis[1], axis[2]
    c = math.cos(angle)
    s = math.sin(angle)
    C = 1.0 - c
    out[0, 0] = c + x * x * C
    out[0, 1] = x * y * C - z * s
    out[0, 2] = x * z * C + y * s
    out[1, 0] = y * x * C + z * s
    out[1, 1] = c + y * y * C
    out[1, 2] = y * z * C - x * s
    out[2, 0] = z * x * C - y * s
    out[2, 1] = z * y * C + x * s
    out[2, 2] = c + z * z * C


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def _joint_torque(kind, q, qd, k, c, lo, hi, kstop, cstop):
    """Return (torque, effective stiffness, effective damping)."""
    if kind == 0:
        return 0.0, 0.0, 0.0
    tau = -k * q - c * qd
    keff = k
    ceff = c
    if q < lo:
        tau -= kstop * (q - lo) + cstop * qd
        keff += kstop
        ceff += cstop
    elif q > hi:
        tau -= kstop * (q - hi) + cstop * qd
        keff += kstop
        ceff += cstop
    return tau, keff, ceff


@njit(cache=True)
def _step(
    q, qd, qdd0,
    parent, origin, axis, com, mass, inertia, area, volume,
    jkind, stiff, damp, lower, upper, kstop, cstop,
    rho, cd, ca, g, dt, flow_z,
    R, P, C, N, S, V, A, Fv, Ic, Irb, M, rhs, qdd, Fcol, scratch,
):
    """One dynamics evaluation. Returns (support force z, kinetic, potential energy)."""
    nb = parent.shape[0]
    nf = nb - 1
    Rq = scratch[0:3, 0:3]
    Ib = scratch[3:6, 0:3]
    sk = scratch[6:9, 0:3]
    tmp = scratch[9, 0:3]
    aw = scratch[10, 0:3]
    w = scratch[11, 0:6]
    h = scratch[12, 0:6]
    ke = 0.0
    pe = 0.0

    for i in range(nb):
        par = parent[i]
        # joint origin and orientation
        if par < 0:
            for a in range(3):
                P[i, a] = origin[i, a]
                aw[a] = axis[i, a]
            _rot(axis[i], q[i], Rq)
            for a in range(3):
                for b in range(3):
                    R[i, a, b] = Rq[a, b]
        else:
            for a in range(3):
                s1 = 0.0
                s2 = 0.0
                for b in range(3):
                    s1 += R[par, a, b] * origin[i, b]
                    s2 += R[par, a, b] * axis[i, b]
                P[i, a] = P[par, a] + s1
                aw[a] = s2
            _rot(axis[i], q[i], Rq)
            for a in range(3):
                for b in range(3):
                    s = 0.0
                    for k in range(3):
                        s += R[par, a, k] * Rq[k, b]
                    R[i, a, b] = s
        # motion subspace [aw; p x aw]
        _cross(P[i], aw, tmp)
        for a in range(3):
            S[i, a] = aw[a]
            S[i, 3 + a] = tmp[a]
        for a in range(6):
            V[i, a] = (V[par, a] if par >= 0 else 0.0) + S[i, a] * qd[i]
        # centroid and normal
        for a in range(3):
            s = 0.0
            for b in range(3):
                s += R[i, a, b] * com[i, b]
            C[i, a] = P[i, a] + s
            N[i, a] = R[i, a, 2]
        # rigid spatial inertia about the origin
        for a in range(3):
            for b in range(3):
                s = 0.0
                for k in range(3):
                    s += R[i, a, k] * inertia[i, k] * R[i, b, k]
                Ib[a, b] = s
        m = mass[i]
        cx = C[i, 0]
        cy = C[i, 1]
        cz = C[i, 2]
        # skew(c)
        sk[0, 0] = 0.0
        sk[0, 1] = -cz
        sk[0, 2] = cy
        sk[1, 0] = cz
        sk[1, 1] = 0.0
        sk[1, 2] = -cx
        sk[2, 0] = -cy
        sk[2, 1] = cx
        sk[2, 2] = 0.0
        for a in range(3):
            for b in range(3):
                # c x c x^T = -skew(c)^2
                s = 0.0
                for k in range(3):
                    s += sk[a, k] * sk[b, k]
                Irb[i, a, b] = Ib[a, b] + m * s
                Irb[i, a, 3 + b] = m * sk[a, b]
                Irb[i, 3 + a, b] = m * sk[b, a]
                Irb[i, 3 + a, 3 + b] = m if a == b else 0.0

        # fluid and body forces at the centroid
        omega0 = V[i, 0]
        omega1 = V[i, 1]
        omega2 = V[i, 2]
        vc0 = V[i, 3] + omega1 * cz - omega2 * cy
        vc1 = V[i, 4] + omega2 * cx - omega0 * cz
        vc2 = V[i, 5] + omega0 * cy - omega1 * cx
        n0 = N[i, 0]
        n1 = N[i, 1]
        n2 = N[i, 2]
        vn = vc0 * n0 + vc1 * n1 + (vc2 + flow_z) * n2
        beta = rho * cd * area[i] * abs(vn)
        fd = -0.5 * beta * vn
        madd = rho * ca * volume[i]
        fz_gb = (rho * volume[i] - m) * g
        pe -= fz_gb * cz
        F0 = fd * n0
        F1 = fd * n1
        F2 = fd * n2 + fz_gb
        # w = [c x n; n]
        w[0] = cy * n2 - cz * n1
        w[1] = cz * n0 - cx * n2
        w[2] = cx * n1 - cy * n0
        w[3] = n0
        w[4] = n1
        w[5] = n2
        # n . (omega x v_c), velocity product of the normal acceleration
        ovx = omega1 * vc2 - omega2 * vc1
        ovy = omega2 * vc0 - omega0 * vc2
        ovz = omega0 * vc1 - omega1 * vc0
        an_bias = n0 * ovx + n1 * ovy + n2 * ovz
        # augmented inertia: rigid + added mass + implicit drag
        gain = madd + dt * beta
        for a in range(6):
            for b in range(6):
                Ic[i, a, b] = Irb[i, a, b] + gain * w[a] * w[b]

        # bias acceleration: parent + root prescribed + velocity product
        vj0 = S[i, 0] * qd[i]
        vj1 = S[i, 1] * qd[i]
        vj2 = S[i, 2] * qd[i]
        vj3 = S[i, 3] * qd[i]
        vj4 = S[i, 4] * qd[i]
        vj5 = S[i, 5] * qd[i]
        Vi = V[i]
        cr0 = Vi[1] * vj2 - Vi[2] * vj1
        cr1 = Vi[2] * vj0 - Vi[0] * vj2
        cr2 = Vi[0] * vj1 - Vi[1] * vj0
        cr3 = Vi[1] * vj5 - Vi[2] * vj4 + Vi[4] * vj2 - Vi[5] * vj1
        cr4 = Vi[2] * vj3 - Vi[0] * vj5 + Vi[5] * vj0 - Vi[3] * vj2
        cr5 = Vi[0] * vj4 - Vi[1] * vj3 + Vi[3] * vj1 - Vi[4] * vj0
        acc_root = qdd0 if par < 0 else 0.0
        A[i, 0] = (A[par, 0] if par >= 0 else 0.0) + S[i, 0] * acc_root + cr0
        A[i, 1] = (A[par, 1] if par >= 0 else 0.0) + S[i, 1] * acc_root + cr1
        A[i, 2] = (A[par, 2] if par >= 0 else 0.0) + S[i, 2] * acc_root + cr2
        A[i, 3] = (A[par, 3] if par >= 0 else 0.0) + S[i, 3] * acc_root + cr3
        A[i, 4] = (A[par, 4] if par >= 0 else 0.0) + S[i, 4] * acc_root + cr4
        A[i, 5] = (A[par, 5] if par >= 0 else 0.0) + S[i, 5] * acc_root + cr5

        # f = Ic A + crf(V) Irb V + madd w (n . omega x v_c) - f_ext
        for a in range(6):
            s = 0.0
            for b in range(6):
                s += Irb[i, a, b] * Vi[b]
            h[a] = s
        # crf(V) h = [w x h1 + v x h2; w x h2]
        c0 = Vi[1] * h[2] - Vi[2] * h[1] + Vi[4] * h[5] - Vi[5] * h[4]
        c1 = Vi[2] * h[0] - Vi[0] * h[2] + Vi[5] * h[3] - Vi[3] * h[5]
        c2 = Vi[0] * h[1] - Vi[1] * h[0] + Vi[3] * h[4] - Vi[4] * h[3]
        c3 = Vi[1] * h[5] - Vi[2] * h[4]
        c4 = Vi[2] * h[3] - Vi[0] * h[5]
        c5 = Vi[0] * h[4] - Vi[1] * h[3]
        crf = (c0, c1, c2, c3, c4, c5)
        fext = (cy * F2 - cz * F1, cz * F0 - cx * F2, cx * F1 - cy * F0, F0, F1, F2)
        for a in range(6):
            s = 0.0
            for b in range(6):
                s += Ic[i, a, b] * A[i, b]
            Fv[i, a] = s + crf[a] + madd * w[a] * an_bias - fext[a]

        ke += 0.5 * m * (vc0 * vc0 + vc1 * vc1 + vc2 * vc2)
        for a in range(3):
            for b in range(3):
                ke += 0.5 * Vi[a] * Ib[a, b] * Vi[b]

    # backward pass: accumulate forces and composite inertias
    for i in range(nb - 1, 0, -1):
        par = parent[i]
        for a in range(6):
            Fv[par, a] += Fv[i, a]
            for b in range(6):
                Ic[par, a, b] += Ic[i, a, b]

    # mass matrix and right-hand side over free joints 1..nb-1;
    # entries between joints on different branches stay zero
    for a in range(nf):
        for b in range(nf):
            M[a, b] = 0.0
    for i in range(nb - 1, 0, -1):
        for a in range(6):
            s = 0.0
            for b in range(6):
                s += Ic[i, a, b] * S[i, b]
            Fcol[i, a] = s
        tau, keff, ceff = _joint_torque(
            jkind[i], q[i], qd[i], stiff[i], damp[i], lower[i], upper[i], kstop[i], cstop[i]
        )
        pe += 0.5 * stiff[i] * q[i] * q[i]
        if q[i] < lower[i]:
            pe += 0.5 * kstop[i] * (q[i] - lower[i]) ** 2
        elif q[i] > upper[i]:
            pe += 0.5 * kstop[i] * (q[i] - upper[i]) ** 2
        sf = 0.0
        bias = 0.0
        for a in range(6):
            sf += S[i, a] * Fcol[i, a]
            bias += S[i, a] * Fv[i, a]
        M[i - 1, i - 1] = sf + dt * ceff + dt * dt * keff
        rhs[i - 1] = tau - dt * keff * qd[i] - bias
        j = parent[i]
        while j >= 1:
            s = 0.0
            for a in range(6):
                s += S[j, a] * Fcol[i, a]
            M[i - 1, j - 1] = s
            M[j - 1, i - 1] = s
            j = parent[j]
    _cholesky_solve(M, rhs, qdd, nf)

    fz = Fv[0, 5]
    for i in range(1, nb):
        fz += Fcol[i, 5] * qdd[i - 1]
    return -fz, ke, pe


@njit(cache=True)
def _cholesky_solve(M, b, x, n):
    L = M
    for j in range(n):
        s = L[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0:
            for i in range(n):
                x[i] = np.nan
            return
        d = math.sqrt(s)
        L[j, j] = d
        for i in range(j + 1, n):
            s = L[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / d
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]


@njit(cache=True)
def _alloc(nb):
    R = np.zeros((nb, 3, 3))
    P = np.zeros((nb, 3))
    C = np.zeros((nb, 3))
    N = np.zeros((nb, 3))
    S = np.zeros((nb, 6))
    V = np.zeros((nb, 6))
    A = np.zeros((nb, 6))
    Fv = np.zeros((nb, 6))
    Ic = np.zeros((nb, 6, 6))
    Irb = np.zeros((nb, 6, 6))
    nf = max(nb - 1, 1)
    M = np.zeros((nf, nf))
    rhs = np.zeros(nf)
    qdd = np.zeros(nf)
    Fcol = np.zeros((nb, 6))
    scratch = np.zeros((13, 6))
    return R, P, C, N, S, V, A, Fv, Ic, Irb, M, rhs, qdd, Fcol, scratch


@njit(cache=True)
def _root_angle(t, wave, t_freeze):
    if t > t_freeze:
        t = t_freeze
    return stroke_angle(t, wave[0], wave[1], wave[2], wave[3], wave[4])


@njit(cache=True)
def simulate_feather(
    parent, origin, axis, com, mass, inertia, area, volume,
    jkind, stiff, damp, lower, upper, kstop, cstop,
    wave, t_freeze, rho, cd, ca, g, dt, nsteps, speed_cap, record_q,
):
    """Fixed-mount run. Returns (status, fail_step, thrust, ke, pe, q_hist)."""
    nb = parent.shape[0]
    R, P, C, N, S, V, A, Fv, Ic, Irb, M, rhs, qdd, Fcol, scratch = _alloc(nb)
    q = np.zeros(nb)
    qd = np.zeros(nb)
    thrust = np.zeros(nsteps)
    ke = np.zeros(nsteps)
    pe = np.zeros(nsteps)
    q_hist = np.zeros((nsteps if record_q else 1, nb))
    q[0] = _root_angle(0.0, wave, t_freeze)
    for n in range(nsteps):
        t = n * dt
        theta_next = _root_angle((n + 1) * dt, wave, t_freeze)
        u = (theta_next - q[0]) / dt
        qdd0 = (u - qd[0]) / dt
        if record_q:
            for i in range(nb):
                q_hist[n, i] = q[i]
        T, E, PE = _step(
            q, qd, qdd0, parent, origin, axis, com, mass, inertia, area, volume,
            jkind, stiff, damp, lower, upper, kstop, cstop, rho, cd, ca, g, dt, 0.0,
            R, P, C, N, S, V, A, Fv, Ic, Irb, M, rhs, qdd, Fcol, scratch,
        )
        thrust[n] = T
        ke[n] = E
        pe[n] = PE
        if not math.isfinite(T):
            return NONFINITE, n, thrust, ke, pe, q_hist
        for i in range(1, nb):
            qd[i] += dt * qdd[i - 1]
            if not math.isfinite(qd[i]):
                return NONFINITE, n, thrust, ke, pe, q_hist
            if abs(qd[i]) > speed_cap:
                return OVERSPEED, n, thrust, ke, pe, q_hist
            q[i] += dt * qd[i]
        qd[0] = u
        q[0] = theta_next
    return OK, -1, thrust, ke, pe, q_hist


@njit(cache=True)
def simulate_swim(
    parent, origin, axis, com, mass, inertia, area, volume,
    jkind, stiff, damp, lower, upper, kstop, cstop,
    wave, rho, cd, ca, g, dt, max_steps, speed_cap,
    n_feathers, body_mass, body_cd, body_area, friction, distance,
):
    """Rail-constrained body driven by identical in-phase feathers.

    Returns (status, fail_step, steps_taken, position, velocity, thrust).
    """
    nb = parent.shape[0]
    R, P, C, N, S, V, A, Fv, Ic, Irb, M, rhs, qdd, Fcol, scratch = _alloc(nb)
    q = np.zeros(nb)
    qd = np.zeros(nb)
    pos = np.zeros(max_steps + 1)
    vel = np.zeros(max_steps + 1)
    thrust = np.zeros(max_steps)
    q[0] = _root_angle(0.0, wave, math.inf)
    x = 0.0
    U = 0.0
    for n in range(max_steps):
        theta_next = _root_angle((n + 1) * dt, wave, math.inf)
        u = (theta_next - q[0]) / dt
        qdd0 = (u - qd[0]) / dt
        T, E, PE = _step(
            q, qd, qdd0, parent, origin, axis, com, mass, inertia, area, volume,
            jkind, stiff, damp, lower, upper, kstop, cstop, rho, cd, ca, g, dt, U,
            R, P, C, N, S, V, A, Fv, Ic, Irb, M, rhs, qdd, Fcol, scratch,
        )
        thrust[n] = T
        if not math.isfinite(T):
            return NONFINITE, n, n, pos, vel, thrust
        for i in range(1, nb):
            qd[i] += dt * qdd[i - 1]
            if not math.isfinite(qd[i]):
                return NONFINITE, n, n, pos, vel, thrust
            if abs(qd[i]) > speed_cap:
                return OVERSPEED, n, n, pos, vel, thrust
            q[i] += dt * qd[i]
        qd[0] = u
        q[0] = theta_next

        drive = n_feathers * T - 0.5 * rho * body_cd * body_area * U * abs(U)
        if U == 0.0:
            if abs(drive) <= friction:
                U_new = 0.0
            else:
                U_new = dt * (drive - math.copysign(friction, drive)) / body_mass
        else:
            U_new = U + dt * (drive - math.copysign(friction, U)) / body_mass
            if U_new * U < 0.0:
                U_new = 0.0
        U = U_new
        x += dt * U
        pos[n + 1] = x
        vel[n + 1] = U
        if x >= distance:
            return OK, -1, n + 1, pos, vel, thrust
    return OK, -1, max_steps, pos, vel, thrust
