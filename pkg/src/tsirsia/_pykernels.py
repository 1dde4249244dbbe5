"""Pure-Python kernels. Reference implementation for ``_ckernels.pyx``.

All arrays are 0-based; ``kidx[j]`` is the array index of ``S_{k(t)}``.
Random numbers are supplied by the caller so both backends consume the
same stream.
"""
import math

ALPHA = 0.975
NEG_INF = float("-inf")


def _nb(x, lam, phi, lg_phi, log_phi):
    lpl = math.log(phi + lam)
    out = math.lgamma(x + phi) - lg_phi - math.lgamma(x + 1.0) + phi * (log_phi - lpl)
    if x > 0:
        out += x * (math.log(lam) - lpl)
    return out


def _bin(c, n, log_rho, log1m_rho):
    out = math.lgamma(n + 1.0) - math.lgamma(c + 1.0) - math.lgamma(n - c + 1.0)
    if c > 0:
        out += c * log_rho
    if n > c:
        if log1m_rho == NEG_INF:
            return NEG_INF
        out += (n - c) * log1m_rho
    return out


def _lam(i_prev, s_prev, n_prev, ar, en):
    return ar * (i_prev ** ALPHA) * s_prev / n_prev + en * n_prev


def balance(I, B, delta, kidx, s1, p, S, Sstar, start):
    T = len(I)
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


def loglik(I, S, N, C, ar, en, phi, log_rho, log1m_rho, nbll, binll):
    T = len(I)
    if I[0] < 0 or I[0] > S[0]:
        return NEG_INF
    for j in range(T):
        if I[j] < 0 or S[j] < 0.0 or S[j] > N[j]:
            return NEG_INF
        if j + 1 < T and I[j + 1] > S[j]:
            return NEG_INF
    total = 0.0
    for m in range(T // 2):
        n = I[2 * m] + I[2 * m + 1]
        if C[m] > n:
            return NEG_INF
        binll[m] = _bin(C[m], n, log_rho, log1m_rho)
        total += binll[m]
    if total == NEG_INF:
        return NEG_INF
    lg_phi = math.lgamma(phi)
    log_phi = math.log(phi)
    nbll[0] = 0.0
    for j in range(1, T):
        lam = _lam(I[j - 1], S[j - 1], N[j - 1], ar[j], en)
        nbll[j] = _nb(I[j], lam, phi, lg_phi, log_phi)
        total += nbll[j]
    return total


def latent_sweep(order, u_prop, u_acc, I, S, Sstar, nbll, binll, C, N, B, delta, kidx,
                 ar, en, phi, log_rho, log1m_rho, p, widths, n_acc, n_try,
                 work_S, work_Sstar, work_nb):
    """One Metropolis pass over the latent incidences listed in ``order``.

    Returns the summed change in log-likelihood over accepted moves.
    """
    T = len(I)
    lg_phi = math.lgamma(phi)
    log_phi = math.log(phi)
    gained = 0.0
    for t in order:
        i_old = I[t]
        w = widths[t]
        lo = i_old - w if i_old > w else 0
        ncur = i_old + w - lo
        k = int(u_prop[t] * ncur)
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
        if newbin == NEG_INF:
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

        logr = dll + math.log(ncur) - math.log(nprop)
        if logr >= 0.0 or math.log(u_acc[t]) < logr:
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
