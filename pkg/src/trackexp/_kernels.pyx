# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-round kernels mirroring :mod:`trackexp.learners`.

Each core class reproduces the arithmetic of its pure-Python counterpart
(same update order, same rate rule, same truncation search), so the two
backends agree to round-off. Only fixed mixers (``alpha`` "star" or a
float) and weight-preserving resets are supported here; anything else goes
through the Python learners.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, INFINITY, isinf
from libc.stdlib cimport qsort

cnp.import_array()


cdef int _cmp_double(const void* x, const void* y) noexcept nogil:
    cdef double u = (<double*>x)[0]
    cdef double v = (<double*>y)[0]
    return (u > v) - (u < v)


cdef double _truncation_sigma(double* q, int M, double a, double b,
                              double* qp, double* kinks) noexcept nogil:
    """Exact kink search; see ``trackexp.simplex.truncation_sigma``."""
    cdef int i, j, k, n_pos = 0, n_zero = 0, n_k = 0, n_low, n_high, hit
    cdef double total, s, lo, hi, mid, slope, sigma
    for i in range(M):
        if q[i] > 0:
            qp[n_pos] = q[i]
            n_pos += 1
        else:
            n_zero += 1
    for i in range(n_pos):
        kinks[2 * i] = a / qp[i]
        kinks[2 * i + 1] = b / qp[i]
    qsort(kinks, 2 * n_pos, sizeof(double), _cmp_double)
    for i in range(2 * n_pos):
        if n_k == 0 or kinks[i] != kinks[n_k - 1]:
            kinks[n_k] = kinks[i]
            n_k += 1
    hit = n_k - 1
    for j in range(n_k):
        total = n_zero * a
        for i in range(n_pos):
            s = kinks[j] * qp[i]
            if s < a:
                s = a
            elif s > b:
                s = b
            total += s
        if total >= 1.0 - 1e-13:
            hit = j
            break
    if hit == 0:
        return kinks[0]
    lo = kinks[hit - 1]
    hi = kinks[hit]
    mid = 0.5 * (lo + hi)
    slope = 0.0
    n_low = n_zero
    n_high = 0
    for i in range(n_pos):
        s = mid * qp[i]
        if s < a:
            n_low += 1
        elif s > b:
            n_high += 1
        else:
            slope += qp[i]
    if slope <= 0.0:
        return lo
    sigma = (1.0 - a * n_low - b * n_high) / slope
    if sigma < lo:
        sigma = lo
    if sigma > hi:
        sigma = hi
    return sigma


def truncation_sigma(double[::1] q, double a, double b):
    """Compiled twin of ``trackexp.simplex.truncation_sigma`` (no validation)."""
    cdef int M = q.shape[0]
    cdef double[::1] qp = np.empty(M)
    cdef double[::1] kinks = np.empty(2 * M)
    return _truncation_sigma(&q[0], M, a, b, &qp[0], &kinks[0])


cdef class EWCore:
    """Exponential weights with uniform mixing (``box == 0``) or truncation."""

    cdef public int M
    cdef public int box
    cdef public int variance
    cdef public long horizon
    cdef public double path
    cdef public double a, b
    cdef public double V, Q, E
    cdef public long rnd
    cdef public double eta
    cdef public bint has_eta
    cdef double[::1] w
    cdef double[::1] qp
    cdef double[::1] kinks

    def __init__(self, int M, int box, int variance, long horizon=1, double path=0.0,
                 double a=0.0, double b=1.0, weights=None):
        self.M = M
        self.box = box
        self.variance = variance
        self.horizon = horizon
        self.path = path
        self.a = a
        self.b = b
        self.V = 0.0
        self.Q = 0.0
        self.E = 0.0
        self.rnd = 0
        self.eta = 0.0
        self.has_eta = False
        self.qp = np.empty(M)
        self.kinks = np.empty(2 * M)
        if weights is None:
            self.w = np.full(M, 1.0 / M)
        else:
            self.w = np.array(weights, dtype=np.float64)
        if box:
            self._project(&self.w[0], &self.w[0])

    cdef EWCore clone(self):
        cdef EWCore c = EWCore.__new__(EWCore)
        c.M = self.M
        c.box = self.box
        c.variance = self.variance
        c.horizon = self.horizon
        c.path = self.path
        c.a = self.a
        c.b = self.b
        c.V = self.V
        c.Q = self.Q
        c.E = self.E
        c.rnd = self.rnd
        c.eta = self.eta
        c.has_eta = self.has_eta
        c.w = self.w.copy()
        c.qp = np.empty(self.M)
        c.kinks = np.empty(2 * self.M)
        return c

    @property
    def weights(self):
        return np.asarray(self.w).copy()

    cdef double numerator(self) noexcept:
        if self.box:
            if self.a <= 0.0:
                return INFINITY
            return log(self.M / self.a) + log(1.0 / self.a) * self.path
        return log(<double>self.M * (self.horizon + 1)) * (2.0 + self.path)

    cdef void _project(self, double* q, double* out) noexcept:
        cdef int i
        cdef double s
        cdef double sigma = _truncation_sigma(q, self.M, self.a, self.b,
                                              &self.qp[0], &self.kinks[0])
        for i in range(self.M):
            s = sigma * q[i]
            if s < self.a:
                out[i] = self.a
            elif s > self.b:
                out[i] = self.b
            else:
                out[i] = s

    cdef void reset_rate(self) noexcept:
        self.V = 0.0
        self.Q = 0.0
        self.E = 0.0
        self.rnd = 0
        self.eta = 0.0
        self.has_eta = False

    cdef void step(self, double* l) noexcept:
        cdef int i, M = self.M
        cdef double* w = &self.w[0]
        cdef double mu = 0.0, z = l[0], d, dev_max = 0.0, v = 0.0, qq = 0.0
        cdef double num, eta = 0.0, cap = 0.0, tot, gamma
        cdef bint have = False, have_cap
        for i in range(M):
            mu += w[i] * l[i]
            if l[i] < z:
                z = l[i]
        for i in range(M):
            d = l[i] - mu
            v += w[i] * (d * d)
            if fabs(d) > dev_max:
                dev_max = fabs(d)
            d = l[i] - z
            qq += w[i] * (d * d)
        self.V += v
        self.Q += qq
        if dev_max > self.E:
            self.E = dev_max
        self.rnd += 1
        num = self.numerator()
        if self.variance:
            have_cap = self.E > 0
            if have_cap:
                cap = 1.0 / self.E
            if self.V > 0 and not isinf(num):
                eta = sqrt(num / (2.0 * self.V))
                if have_cap and cap < eta:
                    eta = cap
                have = True
            elif have_cap:
                eta = cap
                have = True
        else:
            if self.Q > 0 and not isinf(num):
                eta = sqrt(num / self.Q)
                have = True
            elif isinf(num) and self.E > 0:
                eta = 1.0 / self.E
                have = True
        if have:
            if self.has_eta and self.eta < eta:
                eta = self.eta
            self.eta = eta
            self.has_eta = True
            tot = 0.0
            for i in range(M):
                w[i] = w[i] * exp(-eta * (l[i] - z))
                tot += w[i]
            for i in range(M):
                w[i] = w[i] / tot
        if self.box:
            self._project(w, w)
        else:
            gamma = 1.0 / (self.rnd + 1)
            for i in range(M):
                w[i] = (1.0 - gamma) * w[i] + gamma / M

    def py_step(self, double[::1] l):
        self.step(&l[0])
        return np.asarray(self.w).copy()

    def stats(self):
        return {"V": self.V, "Q": self.Q, "E": self.E, "round": self.rnd,
                "eta": self.eta if self.has_eta else None}


cdef class MappedCore:
    """Truncated learning on ``d = (1 - alpha) p + alpha u``."""

    cdef public int M
    cdef public double alpha
    cdef public double path
    cdef public EWCore inner
    cdef double[::1] p
    cdef double[::1] scaled

    def __init__(self, int M, double alpha, int variance, double path=0.0):
        self.M = M
        self.alpha = alpha
        self.path = path
        self.inner = EWCore(M, 1, variance, 1, (1.0 - alpha) * path,
                            alpha / M, (1.0 - alpha) + alpha / M)
        self.p = np.empty(M)
        self.scaled = np.empty(M)
        self._unmix()

    cdef MappedCore clone(self):
        cdef MappedCore c = MappedCore.__new__(MappedCore)
        c.M = self.M
        c.alpha = self.alpha
        c.path = self.path
        c.inner = self.inner.clone()
        c.p = self.p.copy()
        c.scaled = np.empty(self.M)
        return c

    cdef void _unmix(self) noexcept:
        cdef int i
        cdef double floor = self.alpha / self.M, s, tot = 0.0
        cdef double* d = &self.inner.w[0]
        for i in range(self.M):
            s = (d[i] - floor) / (1.0 - self.alpha)
            if s < 0.0:
                s = 0.0
            self.p[i] = s
            tot += s
        for i in range(self.M):
            self.p[i] = self.p[i] / tot

    cdef void retarget(self, double path) noexcept:
        self.inner.reset_rate()
        self.inner.path = (1.0 - self.alpha) * path
        self.path = path

    cdef void step(self, double* l) noexcept:
        cdef int i
        cdef double k = 1.0 - self.alpha
        for i in range(self.M):
            self.scaled[i] = l[i] / k
        self.inner.step(&self.scaled[0])
        self._unmix()

    @property
    def decision(self):
        return np.asarray(self.p).copy()


cdef class DoublingCore:
    cdef public int M
    cdef public long cap        # -1 for no terminal cap
    cdef public long t
    cdef public double q_total
    cdef public MappedCore inner

    def __init__(self, int M, double alpha, int variance, long cap=-1):
        self.M = M
        self.cap = cap
        self.t = 0
        self.q_total = 0.0
        self.inner = MappedCore(M, alpha, variance, 0.0)

    cdef DoublingCore clone(self):
        cdef DoublingCore c = DoublingCore.__new__(DoublingCore)
        c.M = self.M
        c.cap = self.cap
        c.t = self.t
        c.q_total = self.q_total
        c.inner = self.inner.clone()
        return c

    cdef bint resets_at(self, long t) noexcept:
        if t <= 0 or (t & (t - 1)) != 0:
            return False
        return self.cap < 0 or t <= (<long>1 << self.cap)

    cdef void step(self, double* l) noexcept:
        cdef int i
        cdef long t = self.t + 1
        cdef double z = l[0], d, acc = 0.0
        cdef double* w
        if self.resets_at(t):
            self.inner.retarget(<double>(t - 1))
        w = &self.inner.inner.w[0]
        for i in range(self.M):
            if l[i] < z:
                z = l[i]
        for i in range(self.M):
            d = l[i] - z
            acc += w[i] * (d * d)
        self.q_total += acc
        self.t = t
        self.inner.step(l)


cdef class UtewCore:
    cdef public int M
    cdef public long t
    cdef public double sq_range_sum
    cdef double alpha_run, alpha_mix
    cdef int variance
    cdef list runs
    cdef list mixers
    cdef double[::1] combined
    cdef double[::1] run_loss
    cdef double[::1] pair

    def __init__(self, int M, double alpha_run, double alpha_mix, int variance):
        self.M = M
        self.t = 0
        self.sq_range_sum = 0.0
        self.alpha_run = alpha_run
        self.alpha_mix = alpha_mix
        self.variance = variance
        self.runs = [DoublingCore(M, alpha_run, variance, 0)]
        self.mixers = [MappedCore(2, alpha_mix, variance, 0.0)]
        self.combined = np.full(M, 1.0 / M)
        self.run_loss = np.empty(64)
        self.pair = np.empty(2)

    @property
    def depth(self):
        return len(self.runs)

    @property
    def eta(self):
        cdef MappedCore B = <MappedCore>self.mixers[0]
        return B.inner.eta if B.inner.has_eta else None

    cdef void _spawn(self):
        cdef DoublingCore branch = (<DoublingCore>self.runs[len(self.runs) - 1]).clone()
        branch.cap = len(self.runs)
        self.runs.append(branch)
        self.mixers.append(MappedCore(2, self.alpha_mix, self.variance, 0.0))

    cdef void step(self, double* l):
        cdef int i, j, k, M = self.M
        cdef long t = self.t + 1
        cdef double chain, s, lmin = l[0], lmax = l[0], tot
        cdef DoublingCore A
        cdef MappedCore B
        cdef double* p
        if t == (<long>1 << len(self.runs)):
            self._spawn()
        k = len(self.runs)
        for j in range(k):
            A = <DoublingCore>self.runs[j]
            p = &A.inner.p[0]
            s = 0.0
            for i in range(M):
                s += l[i] * p[i]
            self.run_loss[j] = s
        chain = self.run_loss[k - 1]
        for j in range(k - 1, -1, -1):
            B = <MappedCore>self.mixers[j]
            self.pair[0] = self.run_loss[j]
            self.pair[1] = chain
            chain = B.p[0] * self.pair[0] + B.p[1] * self.pair[1]
            B.step(&self.pair[0])
        for j in range(k):
            (<DoublingCore>self.runs[j]).step(l)
        # combined decision, deepest mixer outwards
        A = <DoublingCore>self.runs[k - 1]
        for i in range(M):
            self.combined[i] = A.inner.p[i]
        for j in range(k - 2, -1, -1):
            A = <DoublingCore>self.runs[j]
            B = <MappedCore>self.mixers[j]
            for i in range(M):
                self.combined[i] = B.p[0] * A.inner.p[i] + B.p[1] * self.combined[i]
        tot = 0.0
        for i in range(M):
            tot += self.combined[i]
        for i in range(M):
            self.combined[i] = self.combined[i] / tot
        for i in range(M):
            if l[i] < lmin:
                lmin = l[i]
            if l[i] > lmax:
                lmax = l[i]
        s = 0.5 * (lmax - lmin)
        self.sq_range_sum += s * s
        self.t = t


KIND_UM = 0
KIND_TRUNC = 1
KIND_MAPPED = 2
KIND_DOUBLING = 3
KIND_UTEW = 4


def run_core(int kind, cnp.ndarray losses_in, int variance, long horizon=1,
             double path=0.0, double a=0.0, double b=1.0, double alpha=0.0,
             double alpha_mix=0.0, long cap=-1):
    """Run one learner over ``losses`` and return ``(decisions, etas)``.

    ``decisions[t]`` is the distribution played in round ``t + 1`` (before
    seeing its losses); ``etas[t]`` is the rate used by that round's update,
    ``nan`` when no rate-driven update happened.
    """
    cdef double[:, ::1] L = np.ascontiguousarray(losses_in, dtype=np.float64)
    cdef Py_ssize_t T = L.shape[0], t
    cdef int M = L.shape[1], i
    cdef cnp.ndarray dec_arr = np.empty((T, M))
    cdef cnp.ndarray eta_arr = np.full(T, np.nan)
    cdef double[:, ::1] dec = dec_arr
    cdef double[::1] etas = eta_arr
    cdef EWCore ew = None
    cdef MappedCore mc = None
    cdef DoublingCore dc = None
    cdef UtewCore uc = None
    cdef EWCore rate
    cdef double* w
    if kind == KIND_UM:
        ew = EWCore(M, 0, variance, horizon, path)
        rate = ew
    elif kind == KIND_TRUNC:
        ew = EWCore(M, 1, variance, 1, path, a, b)
        rate = ew
    elif kind == KIND_MAPPED:
        mc = MappedCore(M, alpha, variance, path)
        rate = mc.inner
    elif kind == KIND_DOUBLING:
        dc = DoublingCore(M, alpha, variance, cap)
        rate = dc.inner.inner
    elif kind == KIND_UTEW:
        uc = UtewCore(M, alpha, alpha_mix, variance)
    else:
        raise ValueError(f"unknown kernel kind {kind}")
    for t in range(T):
        if ew is not None:
            w = &ew.w[0]
        elif mc is not None:
            w = &mc.p[0]
        elif dc is not None:
            w = &dc.inner.p[0]
        else:
            w = &uc.combined[0]
        for i in range(M):
            dec[t, i] = w[i]
        if ew is not None:
            ew.step(&L[t, 0])
        elif mc is not None:
            mc.step(&L[t, 0])
        elif dc is not None:
            dc.step(&L[t, 0])
            rate = dc.inner.inner
        else:
            uc.step(&L[t, 0])
            rate = (<MappedCore>uc.mixers[0]).inner
        if rate.has_eta:
            etas[t] = rate.eta
    return dec_arr, eta_arr
