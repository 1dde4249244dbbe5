# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contract as ``_pykernels``."""
from libc.math cimport lgamma, log, pow, INFINITY

cdef double ALPHA = 0.975


cdef inline double _nb(double x, double lam, double phi, double lg_phi, double log_phi) nogil:
    cdef double lpl = log(phi + lam)
    cdef double out = lgamma(x + phi) - lg_phi - lgamma(x + 1.0) + phi * (log_phi - lpl)
    if x > 0:
        out += x * (log(lam) - lpl)
    return out


cdef inline double _bin(double c, double n, double log_rho, double log1m_rho) nogil:
    cdef double out = lgamma(n + 1.0) - lgamma(c + 1.0) - lgamma(n - c + 1.0)
    if c > 0:
        out += c * log_rho
    if n > c:
        if log1m_rho == -INFINITY:
            return -INFINITY
        out += (n - c) * log1m_rho
    return out


cdef inline double _lam(double i_prev, double s_prev, double n_prev, double ar, double en) nogil:
    return ar * pow(i_prev, ALPHA) * s_prev / n_prev + en * n_prev


def balance(long long[::1] I, const double[::1] B, const double[::1] delta,
            const long long[::1] kidx, double s1, double p,
            double[::1] S, double[::1] Sstar, Py_ssize_t start):
    cdef Py_ssize_t T = I.shape[0], j
    cdef double ss
    if start <= 0:
        S[0] = s1
        Sstar[0] = 0.0
        start = 1
    for j in range(start, T):
        ss = 0.0
        if delta[j] > 0.0:
            ss = p * S[kidx[j]] * delta[j]
        Sstar[j] = ss
        S[j] = ((S[j - 1] + B[j]) - I[j]) - ss


def loglik(long long[::1] I, const double[::1] S, const double[::1] N, const long long[::1] C,
           const double[::1] ar, double en, double phi, double log_rho, double log1m_rho,
           double[::1] nbll, double[::1] binll):
    cdef Py_ssize_t T = I.shape[0], j, m
    cdef double total = 0.0, lam, lg_phi, log_phi
    cdef long long n
    if I[0] < 0 or I[0] > S[0]:
        return -INFINITY
    for j in range(T):
        if I[j] < 0 or S[j] < 0.0 or S[j] > N[j]:
            return -INFINITY
        if j + 1 < T and I[j + 1] > S[j]:
            return -INFINITY
    for m in range(T // 2):
        n = I[2 * m] + I[2 * m + 1]
        if C[m] > n:
            return -INFINITY
        binll[m] = _bin(C[m], n, log_rho, log1m_rho)
        total += binll[m]
    if total == -INFINITY:
        return -INFINITY
    lg_phi = lgamma(phi)
    log_phi = log(phi)
    nbll[0] = 0.0
    for j in range(1, T):
        lam = _lam(I[j - 1], S[j - 1], N[j - 1], ar[j], en)
        nbll[j] = _nb(I[j], lam, phi, lg_phi, log_phi)
        total += nbll[j]
    return total


def latent_sweep(const long long[::1] order, const double[::1] u_prop, const double[::1] u_acc,
                 long long[::1] I, double[::1] S, double[::1] Sstar,
                 double[::1] nbll, double[::1] binll,
                 const long long[::1] C, const double[::1] N, const double[::1] B,
                 const double[::1] delta, const long long[::1] kidx,
                 const double[::1] ar, double en, double phi, double log_rho, double log1m_rho,
                 double p, const long long[::1] widths, long long[::1] n_acc, long long[::1] n_try,
                 double[::1] work_S, double[::1] work_Sstar, double[::1] work_nb):
    cdef Py_ssize_t T = I.shape[0], idx, t, j, m, partner, kj
    cdef long long i_old, w, lo, lo2, ncur, nprop, k, cand, nsum, ij, ip
    cdef double lg_phi = lgamma(phi), log_phi = log(phi)
    cdef double gained = 0.0, newbin, dll, lam, prev, ss, sk, sj, sp, logr
    cdef bint ok
    with nogil:
        for idx in range(order.shape[0]):
            t = order[idx]
            i_old = I[t]
            w = widths[t]
            lo = i_old - w if i_old > w else 0
            ncur = i_old + w - lo
            k = <long long>(u_prop[t] * ncur)
            if k >= ncur:
                k = ncur - 1
            cand = lo + k
            if cand >= i_old:
                cand += 1
            lo2 = cand - w if cand > w else 0
            nprop = cand + w - lo2
            n_try[t] += 1

            m = t // 2
            partner = t ^ 1
            if partner >= T:
                continue
            nsum = cand + I[partner]
            if C[m] > nsum:
                continue
            newbin = _bin(C[m], nsum, log_rho, log1m_rho)
            if newbin == -INFINITY:
                continue
            dll = newbin - binll[m]

            if t == 0:
                if cand > S[0]:
                    continue
                if T > 1:
                    lam = _lam(cand, S[0], N[0], ar[1], en)
                    work_nb[1] = _nb(I[1], lam, phi, lg_phi, log_phi)
                    dll += work_nb[1] - nbll[1]
            else:
                if cand > S[t - 1]:
                    continue
                ok = True
                prev = S[t - 1]
                for j in range(t, T):
                    ij = cand if j == t else I[j]
                    ss = 0.0
                    if delta[j] > 0.0:
                        kj = kidx[j]
                        sk = work_S[kj] if kj >= t else S[kj]
                        ss = p * sk * delta[j]
                    sj = ((prev + B[j]) - ij) - ss
                    if sj < 0.0 or sj > N[j] or (j + 1 < T and I[j + 1] > sj):
                        ok = False
                        break
                    work_S[j] = sj
                    work_Sstar[j] = ss
                    prev = sj
                if not ok:
                    continue
                for j in range(t, T):
                    ij = cand if j == t else I[j]
                    ip = cand if j - 1 == t else I[j - 1]
                    sp = work_S[j - 1] if j - 1 >= t else S[j - 1]
                    lam = _lam(ip, sp, N[j - 1], ar[j], en)
                    work_nb[j] = _nb(ij, lam, phi, lg_phi, log_phi)
                    dll += work_nb[j] - nbll[j]

            logr = dll + log(<double>ncur) - log(<double>nprop)
            if logr >= 0.0 or log(u_acc[t]) < logr:
                I[t] = cand
                binll[m] = newbin
                if t == 0:
                    if T > 1:
                        nbll[1] = work_nb[1]
                else:
                    for j in range(t, T):
                        S[j] = work_S[j]
                        Sstar[j] = work_Sstar[j]
                        nbll[j] = work_nb[j]
                n_acc[t] += 1
                gained += dll
    return gained
