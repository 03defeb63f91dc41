# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ECDSep run loop for the closed-form benchmark objectives.

Mirrors ``ecdsep.optimizer.step`` operation for operation. Chaos vectors are
read row by row from a caller-supplied block of standard normals so the
random stream matches the pure-Python path draw for draw.
"""

from libc.math cimport sqrt, exp, cos, sin, pow, fabs, isfinite, M_PI, M_E, NAN, fmod, floor

DEF KIND_QUADRATIC = 0
DEF KIND_ZAKHAROV = 1
DEF KIND_ACKLEY = 2

# status codes shared with ecdsep._accel
DEF ST_RUNNING = 0
DEF ST_CONVERGED = 1
DEF ST_CROSSED = 2
DEF ST_NONFINITE = 3
DEF ST_NEED_Z = 4


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        acc += a[i] * b[i]
    return acc


cdef double _evaluate(int kind, const double* params, const double* th, double* g, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s, s2, val, r2, rho, e1, e2, radial, reg, x, y
    if kind == KIND_QUADRATIC:
        val = 0.0
        for i in range(n):
            val += th[i] * th[i]
            g[i] = 2.0 * params[0] * th[i]
        return params[0] * val + params[1]
    elif kind == KIND_ZAKHAROV:
        s = 0.0
        val = 0.0
        for i in range(n):
            s += (i + 1) * th[i]
            val += th[i] * th[i]
        s = 0.5 * s
        s2 = s * s
        for i in range(n):
            g[i] = 2.0 * th[i] + (2.0 * s + 4.0 * s2 * s) * 0.5 * (i + 1)
        return val + s2 + s2 * s2
    else:
        x = th[0]
        y = th[1]
        r2 = x * x + y * y
        rho = sqrt(0.5 * r2)
        e1 = exp(-0.2 * rho)
        e2 = exp(0.5 * (cos(2.0 * M_PI * x) + cos(2.0 * M_PI * y)))
        val = -20.0 * e1 - e2 + M_E + 20.0 + 1e-8 * r2 * r2 * r2 * r2
        if r2 == 0.0:
            g[0] = 0.0
            g[1] = 0.0
            return val
        radial = 2.0 * e1 / rho
        reg = 8e-8 * r2 * r2 * r2
        g[0] = radial * x + e2 * M_PI * sin(2.0 * M_PI * x) + reg * x
        g[1] = radial * y + e2 * M_PI * sin(2.0 * M_PI * y) + reg * y
        return val


cdef inline double _signed_pow(double base, double eta, bint eta_int, bint eta_odd) noexcept nogil:
    if base >= 0:
        return pow(base, eta)
    if not eta_int:
        return NAN
    if eta_odd:
        return -pow(-base, eta)
    return pow(-base, eta)


def objective(int kind, const double[::1] params, const double[::1] theta):
    """F and gradient of a built-in objective, for cross-checking."""
    import numpy as np
    grad = np.empty(theta.shape[0])
    cdef double[::1] g = grad
    cdef double f = _evaluate(kind, &params[0] if params.shape[0] else NULL, &theta[0], &g[0], theta.shape[0])
    return f, grad


def ecd_advance(
    int kind,
    const double[::1] params,
    double[::1] theta,
    double[::1] pi,
    double[::1] grad,
    double[::1] scal,
    const double[::1] hp,
    const double[:, ::1] z,
    Py_ssize_t z_row,
    Py_ssize_t step,
    Py_ssize_t stop_step,
    Py_ssize_t record_every,
    double[:, ::1] rec,
    Py_ssize_t rec_pos,
    double[:, ::1] snaps,
):
    """Run steps ``step+1 .. stop_step`` in place.

    ``scal`` holds ``[energy, delta_f0, f]`` where ``f``/``grad`` are the
    objective at the current ``theta``. ``hp`` holds
    ``[dt, eta, nu, f0, s, wd, conserve, eps1, eps2, self_tune, shift]``.

    Returns ``(step, z_row, rec_pos, status, zero_pi_skips)``.
    """
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t z_rows = z.shape[0]
    cdef double dt = hp[0], eta = hp[1], nu = hp[2], f0 = hp[3], s = hp[4], wd = hp[5]
    cdef bint conserve = hp[6] != 0.0
    cdef double eps1 = hp[7], eps2 = hp[8]
    cdef bint self_tune = hp[9] != 0.0
    cdef double shift = hp[10]
    cdef bint eta_int = floor(eta) == eta
    cdef bint eta_odd = eta_int and fmod(eta, 2.0) == 1.0
    cdef double energy = scal[0], delta_f0 = scal[1], f = scal[2]
    cdef const double* prm = &params[0] if params.shape[0] else NULL
    cdef bint keep = snaps.shape[0] > 0
    cdef int status = ST_RUNNING
    cdef long skips = 0
    cdef Py_ssize_t i
    cdef double base, v, target, p2, scale, coef, p, m, th2, fv

    with nogil:
        while step < stop_step:
            if nu > 0 and z_row + 2 > z_rows:
                status = ST_NEED_Z
                break
            th2 = _dot(&theta[0], &theta[0], n) if wd != 0.0 else 0.0
            base = f - (f0 + delta_f0) + 0.5 * wd * th2
            if self_tune:
                v = _signed_pow(base, eta, eta_int, eta_odd)
                if v < eps2:
                    delta_f0 = delta_f0 + shift * v
                    step += 1
                    if step % record_every == 0:
                        fv = _signed_pow(f - (f0 + delta_f0) + 0.5 * wd * th2, eta, eta_int, eta_odd)
                        p2 = _dot(&pi[0], &pi[0], n)
                        rec[rec_pos, 0] = step
                        rec[rec_pos, 1] = f
                        rec[rec_pos, 2] = fv * (p2 + s)
                        rec[rec_pos, 3] = sqrt(p2)
                        rec[rec_pos, 4] = sqrt(_dot(&theta[0], &theta[0], n))
                        if keep:
                            for i in range(n):
                                snaps[rec_pos, i] = theta[i]
                        rec_pos += 1
                    continue
            elif base <= 0:
                status = ST_CROSSED
                break
            else:
                v = pow(base, eta)

            if conserve and v > 0:
                target = energy / v - s
                p2 = _dot(&pi[0], &pi[0], n)
                if fabs(p2 - target) > eps1 and target > 0:
                    if p2 == 0:
                        skips += 1
                    else:
                        scale = sqrt(target / p2)
                        for i in range(n):
                            pi[i] = pi[i] * scale

            coef = dt * eta / base
            for i in range(n):
                pi[i] = pi[i] - coef * (grad[i] + wd * theta[i] if wd != 0.0 else grad[i])
            coef = 2.0 * dt / (_dot(&pi[0], &pi[0], n) + s)
            for i in range(n):
                theta[i] = theta[i] + coef * pi[i]

            if nu > 0:
                p = sqrt(_dot(&pi[0], &pi[0], n))
                if p != 0:
                    m = 0.0
                    while m == 0.0 and z_row < z_rows:
                        m = 0.0
                        for i in range(n):
                            m += (pi[i] / p + nu * z[z_row, i]) * (pi[i] / p + nu * z[z_row, i])
                        m = sqrt(m)
                        z_row += 1
                    if m != 0.0:
                        for i in range(n):
                            pi[i] = (p / m) * (pi[i] / p + nu * z[z_row - 1, i])
                else:
                    z_row += 1

            step += 1
            f = _evaluate(kind, prm, &theta[0], &grad[0], n)
            if not isfinite(f) or not isfinite(_dot(&grad[0], &grad[0], n)) or not isfinite(_dot(&pi[0], &pi[0], n)):
                status = ST_NONFINITE
                break
            if step % record_every == 0:
                th2 = _dot(&theta[0], &theta[0], n)
                fv = _signed_pow(f - (f0 + delta_f0) + 0.5 * wd * th2, eta, eta_int, eta_odd)
                p2 = _dot(&pi[0], &pi[0], n)
                rec[rec_pos, 0] = step
                rec[rec_pos, 1] = f
                rec[rec_pos, 2] = fv * (p2 + s)
                rec[rec_pos, 3] = sqrt(p2)
                rec[rec_pos, 4] = sqrt(th2)
                if keep:
                    for i in range(n):
                        snaps[rec_pos, i] = theta[i]
                rec_pos += 1
            if not self_tune and v < eps2:
                status = ST_CONVERGED
                break

    scal[1] = delta_f0
    scal[2] = f
    return step, z_row, rec_pos, status, skips
