# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel set.

Twin of ``pykernels.py``: identical function surface, identical loop
structure and accumulation order, so results are bit-identical and the
two backends are interchangeable.  Keep in sync with the Python file.
"""

from cpython cimport array
import array

from libc.math cimport cos, exp, fabs, log, sin, sqrt, tanh, pow

cdef array.array _D = array.array('d', [])

cdef double INVSQRT2 = sqrt(0.5)


cdef inline array.array _new(Py_ssize_t n):
    return array.clone(_D, n, zero=True)


cdef inline array.array _copy(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = x[i]
    return o


def zeros(Py_ssize_t n):
    return _new(n)


def copy_of(a):
    return array.array('d', a)


# ---------------------------------------------------------------- elementwise


def add(double[::1] a, double[::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] + b[i]
    return o


def sub(double[::1] a, double[::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] - b[i]
    return o


def mul(double[::1] a, double[::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] * b[i]
    return o


def scale(double[::1] a, double s):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] * s
    return o


def add_scaled(double[::1] a, double[::1] b, double s):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] + s * b[i]
    return o


def add_scalar(double[::1] a, double s):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] + s
    return o


def tanh_(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = tanh(a[i])
    return o


def tanh_grad(double[::1] y, double[::1] g):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = g[i] * (1.0 - y[i] * y[i])
    return o


def sin_(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = sin(a[i])
    return o


def cos_(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = cos(a[i])
    return o


def exp_(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = exp(a[i])
    return o


def relu(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = a[i] if a[i] > 0.0 else 0.0
    return o


def gtzero_mask(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = 1.0 if a[i] > 0.0 else 0.0
    return o


def soft_threshold(double[::1] a, double theta):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        if a[i] > theta:
            out[i] = a[i] - theta
        elif a[i] < -theta:
            out[i] = a[i] + theta
    return o


def st_mask(double[::1] a, double theta):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = 1.0 if (a[i] > theta or a[i] < -theta) else 0.0
    return o


def st_theta_grad(double[::1] a, double theta, double[::1] g):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        if a[i] > theta:
            acc -= g[i]
        elif a[i] < -theta:
            acc += g[i]
    return acc


# ----------------------------------------------------------------- reductions


def sum_all(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i]
    return acc


def dot(double[::1] a, double[::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i] * b[i]
    return acc


def abs_sum(double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += fabs(a[i])
    return acc


def max_abs_diff(double[::1] a, double[::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double m = 0.0, d
    for i in range(n):
        d = fabs(a[i] - b[i])
        if d > m:
            m = d
    return m


# ----------------------------------------------------------- matrix products


def matmul(double[::1] a, double[::1] b, Py_ssize_t m, Py_ssize_t k, Py_ssize_t n):
    cdef Py_ssize_t i, j, p, ik, on, pn
    cdef double aip
    cdef array.array o = _new(m * n)
    cdef double[::1] out = o
    for i in range(m):
        ik = i * k
        on = i * n
        for p in range(k):
            aip = a[ik + p]
            if aip == 0.0:
                continue
            pn = p * n
            for j in range(n):
                out[on + j] += aip * b[pn + j]
    return o


def matmul_nt(double[::1] a, double[::1] b, Py_ssize_t m, Py_ssize_t k, Py_ssize_t n):
    cdef Py_ssize_t i, j, p, ik, on, jk
    cdef double acc
    cdef array.array o = _new(m * n)
    cdef double[::1] out = o
    for i in range(m):
        ik = i * k
        on = i * n
        for j in range(n):
            jk = j * k
            acc = 0.0
            for p in range(k):
                acc += a[ik + p] * b[jk + p]
            out[on + j] = acc
    return o


def matmul_tn(double[::1] a, double[::1] b, Py_ssize_t k, Py_ssize_t m, Py_ssize_t n):
    cdef Py_ssize_t i, j, p, pm, pn, on
    cdef double api
    cdef array.array o = _new(m * n)
    cdef double[::1] out = o
    for p in range(k):
        pm = p * m
        pn = p * n
        for i in range(m):
            api = a[pm + i]
            if api == 0.0:
                continue
            on = i * n
            for j in range(n):
                out[on + j] += api * b[pn + j]
    return o


def rowadd(double[::1] x, double[::1] b, Py_ssize_t m, Py_ssize_t ncol):
    cdef Py_ssize_t i, j, off
    cdef double bi
    cdef array.array o = _copy(x)
    cdef double[::1] out = o
    for i in range(m):
        bi = b[i]
        off = i * ncol
        for j in range(ncol):
            out[off + j] += bi
    return o


def rowsum(double[::1] x, Py_ssize_t m, Py_ssize_t ncol):
    cdef Py_ssize_t i, j, off
    cdef double acc
    cdef array.array o = _new(m)
    cdef double[::1] out = o
    for i in range(m):
        off = i * ncol
        acc = 0.0
        for j in range(ncol):
            acc += x[off + j]
        out[i] = acc
    return o


def rowmul(double[::1] x, double[::1] s, Py_ssize_t m, Py_ssize_t ncol):
    cdef Py_ssize_t i, j, off
    cdef double si
    cdef array.array o = _copy(x)
    cdef double[::1] out = o
    for i in range(m):
        si = s[i]
        off = i * ncol
        for j in range(ncol):
            out[off + j] *= si
    return o


def rowdot(double[::1] x, double[::1] y, Py_ssize_t m, Py_ssize_t ncol):
    cdef Py_ssize_t i, j, off
    cdef double acc
    cdef array.array o = _new(m)
    cdef double[::1] out = o
    for i in range(m):
        off = i * ncol
        acc = 0.0
        for j in range(ncol):
            acc += x[off + j] * y[off + j]
        out[i] = acc
    return o


# ---------------------------------------------------------------- convolution


def conv2d(double[::1] img, Py_ssize_t hh, Py_ssize_t ww,
           double[::1] ker, Py_ssize_t kh, Py_ssize_t kw, int adjoint):
    cdef Py_ssize_t ca = kh // 2, cb = kw // 2
    cdef Py_ssize_t i, j, a, b, r, c, rw, ak
    cdef double acc
    cdef array.array o = _new(hh * ww)
    cdef double[::1] out = o
    for i in range(hh):
        for j in range(ww):
            acc = 0.0
            for a in range(kh):
                if adjoint:
                    r = (i + a - ca + hh) % hh
                else:
                    r = (i - a + ca + hh) % hh
                rw = r * ww
                ak = a * kw
                for b in range(kw):
                    if adjoint:
                        c = (j + b - cb + ww) % ww
                    else:
                        c = (j - b + cb + ww) % ww
                    acc += ker[ak + b] * img[rw + c]
            out[i * ww + j] = acc
    return o


def conv2d_kernel_grad(double[::1] img, double[::1] gout,
                       Py_ssize_t hh, Py_ssize_t ww, Py_ssize_t kh, Py_ssize_t kw):
    cdef Py_ssize_t ca = kh // 2, cb = kw // 2
    cdef Py_ssize_t i, j, a, b, r, c, rw, iw, ak
    cdef double acc
    cdef array.array o = _new(kh * kw)
    cdef double[::1] out = o
    for a in range(kh):
        ak = a * kw
        for b in range(kw):
            acc = 0.0
            for i in range(hh):
                r = (i - a + ca + hh) % hh
                rw = r * ww
                iw = i * ww
                for j in range(ww):
                    c = (j - b + cb + ww) % ww
                    acc += gout[iw + j] * img[rw + c]
            out[ak + b] = acc
    return o


# ------------------------------------------------------------------------ fft


def fft(double[::1] re, double[::1] im, Py_ssize_t n, Py_ssize_t howmany,
        Py_ssize_t stride, Py_ssize_t dist, bint inverse):
    cdef Py_ssize_t t, i, x, rev, levels, size, half, start, kk, p, q, base, src, dst
    cdef double ang, wr, wi, tr, ti, sign, norm
    cdef Py_ssize_t total = re.shape[0]
    cdef array.array ore = _copy(re)
    cdef array.array oim = _copy(im)
    cdef double[::1] out_re = ore
    cdef double[::1] out_im = oim
    cdef array.array wr_a = _new(n // 2 if n > 1 else 1)
    cdef array.array wi_a = _new(n // 2 if n > 1 else 1)
    cdef double[::1] wr_tab = wr_a
    cdef double[::1] wi_tab = wi_a
    cdef array.array br_a = _new(n)
    cdef array.array bi_a = _new(n)
    cdef double[::1] buf_re = br_a
    cdef double[::1] buf_im = bi_a
    cdef double PI = 3.141592653589793

    levels = 0
    x = n
    while x > 1:
        levels += 1
        x >>= 1
    norm = 1.0 / sqrt(<double> n)
    sign = 1.0 if inverse else -1.0
    for t in range(howmany):
        base = t * dist
        for i in range(n):
            rev = 0
            x = i
            for kk in range(levels):
                rev = (rev << 1) | (x & 1)
                x >>= 1
            src = base + i * stride
            buf_re[rev] = re[src]
            buf_im[rev] = im[src]
        size = 2
        while size <= n:
            half = size // 2
            ang = sign * 2.0 * PI / size
            for kk in range(half):
                wr_tab[kk] = cos(ang * kk)
                wi_tab[kk] = sin(ang * kk)
            for start in range(0, n, size):
                for kk in range(half):
                    p = start + kk
                    q = p + half
                    wr = wr_tab[kk]
                    wi = wi_tab[kk]
                    tr = wr * buf_re[q] - wi * buf_im[q]
                    ti = wr * buf_im[q] + wi * buf_re[q]
                    buf_re[q] = buf_re[p] - tr
                    buf_im[q] = buf_im[p] - ti
                    buf_re[p] += tr
                    buf_im[p] += ti
            size *= 2
        for i in range(n):
            dst = base + i * stride
            out_re[dst] = buf_re[i] * norm
            out_im[dst] = buf_im[i] * norm
    return ore, oim


# ------------------------------------------------------------ gather/scatter


def gather_scale(double[::1] x, long long[::1] idx, double[::1] sc):
    cdef Py_ssize_t i, n = idx.shape[0]
    cdef array.array o = _new(n)
    cdef double[::1] out = o
    for i in range(n):
        out[i] = sc[i] * x[idx[i]]
    return o


def scatter_scale_add(double[::1] g, long long[::1] idx, double[::1] sc, Py_ssize_t out_len):
    cdef Py_ssize_t i, n = idx.shape[0]
    cdef array.array o = _new(out_len)
    cdef double[::1] out = o
    for i in range(n):
        out[idx[i]] += sc[i] * g[i]
    return o


def gather_scale_cols(double[::1] x, Py_ssize_t ncol, long long[::1] idx, double[::1] sc):
    cdef Py_ssize_t i, j, src, off, nrow = idx.shape[0]
    cdef double si
    cdef array.array o = _new(nrow * ncol)
    cdef double[::1] out = o
    for i in range(nrow):
        src = idx[i] * ncol
        si = sc[i]
        off = i * ncol
        for j in range(ncol):
            out[off + j] = si * x[src + j]
    return o


def scatter_scale_add_cols(double[::1] g, Py_ssize_t ncol, long long[::1] idx,
                           double[::1] sc, Py_ssize_t out_rows):
    cdef Py_ssize_t i, j, dst, off, n = idx.shape[0]
    cdef double si
    cdef array.array o = _new(out_rows * ncol)
    cdef double[::1] out = o
    for i in range(n):
        dst = idx[i] * ncol
        si = sc[i]
        off = i * ncol
        for j in range(ncol):
            out[dst + j] += si * g[off + j]
    return o


# ----------------------------------------------------------------------- haar


cdef void _haar1d_level_fwd(double[::1] x, Py_ssize_t off, Py_ssize_t m, Py_ssize_t step,
                            double[::1] s, double[::1] d):
    cdef Py_ssize_t i, half = m // 2
    cdef double a, b
    for i in range(half):
        a = x[off + 2 * i * step]
        b = x[off + (2 * i + 1) * step]
        s[i] = (a + b) * INVSQRT2
        d[i] = (a - b) * INVSQRT2
    for i in range(half):
        x[off + i * step] = s[i]
        x[off + (half + i) * step] = d[i]


cdef void _haar1d_level_inv(double[::1] x, Py_ssize_t off, Py_ssize_t m, Py_ssize_t step,
                            double[::1] a):
    cdef Py_ssize_t i, half = m // 2
    cdef double s, d
    for i in range(half):
        s = x[off + i * step]
        d = x[off + (half + i) * step]
        a[2 * i] = (s + d) * INVSQRT2
        a[2 * i + 1] = (s - d) * INVSQRT2
    for i in range(m):
        x[off + i * step] = a[i]


def haar1d(double[::1] x, Py_ssize_t n, int levels, bint inverse):
    cdef array.array o = _copy(x)
    cdef double[::1] out = o
    cdef array.array t1 = _new(n)
    cdef array.array t2 = _new(n)
    cdef double[::1] s = t1
    cdef double[::1] d = t2
    cdef int lev
    if inverse:
        for lev in range(levels - 1, -1, -1):
            _haar1d_level_inv(out, 0, n >> lev, 1, s)
    else:
        for lev in range(levels):
            _haar1d_level_fwd(out, 0, n >> lev, 1, s, d)
    return o


def haar1d_cols(double[::1] x, Py_ssize_t n, Py_ssize_t ncol, int levels, bint inverse):
    cdef array.array o = _copy(x)
    cdef double[::1] out = o
    cdef array.array t1 = _new(n)
    cdef array.array t2 = _new(n)
    cdef double[::1] s = t1
    cdef double[::1] d = t2
    cdef Py_ssize_t j
    cdef int lev
    for j in range(ncol):
        if inverse:
            for lev in range(levels - 1, -1, -1):
                _haar1d_level_inv(out, j, n >> lev, ncol, s)
        else:
            for lev in range(levels):
                _haar1d_level_fwd(out, j, n >> lev, ncol, s, d)
    return o


def haar2d(double[::1] x, Py_ssize_t hh, Py_ssize_t ww, int levels, bint inverse):
    cdef array.array o = _copy(x)
    cdef double[::1] out = o
    cdef Py_ssize_t side = hh if hh > ww else ww
    cdef array.array t1 = _new(side)
    cdef array.array t2 = _new(side)
    cdef double[::1] s = t1
    cdef double[::1] d = t2
    cdef Py_ssize_t i, j, mh, mw
    cdef int lev
    if inverse:
        for lev in range(levels - 1, -1, -1):
            mh = hh >> lev
            mw = ww >> lev
            for j in range(mw):
                _haar1d_level_inv(out, j, mh, ww, s)
            for i in range(mh):
                _haar1d_level_inv(out, i * ww, mw, 1, s)
    else:
        for lev in range(levels):
            mh = hh >> lev
            mw = ww >> lev
            for i in range(mh):
                _haar1d_level_fwd(out, i * ww, mw, 1, s, d)
            for j in range(mw):
                _haar1d_level_fwd(out, j, mh, ww, s, d)
    return o


# --------------------------------------------------------------------- linalg


def cholesky(double[::1] a, Py_ssize_t n):
    cdef Py_ssize_t i, j, p
    cdef double acc
    cdef array.array o = _new(n * n)
    cdef double[::1] low = o
    for i in range(n):
        for j in range(i + 1):
            acc = a[i * n + j]
            for p in range(j):
                acc -= low[i * n + p] * low[j * n + p]
            if i == j:
                if acc <= 0.0:
                    return None
                low[i * n + i] = sqrt(acc)
            else:
                low[i * n + j] = acc / low[j * n + j]
    return o


def chol_solve(double[::1] low, double[::1] b, Py_ssize_t n, Py_ssize_t nrhs):
    cdef Py_ssize_t i, p, c
    cdef double acc
    cdef array.array o = _copy(b)
    cdef double[::1] x = o
    for c in range(nrhs):
        for i in range(n):
            acc = x[i * nrhs + c]
            for p in range(i):
                acc -= low[i * n + p] * x[p * nrhs + c]
            x[i * nrhs + c] = acc / low[i * n + i]
        for i in range(n - 1, -1, -1):
            acc = x[i * nrhs + c]
            for p in range(i + 1, n):
                acc -= low[p * n + i] * x[p * nrhs + c]
            x[i * nrhs + c] = acc / low[i * n + i]
    return o


# ------------------------------------------------------------------ optimizer


def adam_step(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
              double lr, double b1, double b2, double eps, Py_ssize_t t):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double c1 = 1.0 - pow(b1, <double> t)
    cdef double c2 = 1.0 - pow(b2, <double> t)
    cdef array.array o = _copy(p)
    cdef double[::1] out = o
    for i in range(n):
        m[i] = b1 * m[i] + (1.0 - b1) * g[i]
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i]
        out[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)
    return o


def sgd_step(double[::1] p, double[::1] g, double lr):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef array.array o = _copy(p)
    cdef double[::1] out = o
    for i in range(n):
        out[i] -= lr * g[i]
    return o


# ------------------------------------------------------------------ acoustics


def synth_add(double[::1] sig, Py_ssize_t nsamp, double amp, double omega,
              double fs, double tau):
    cdef Py_ssize_t i
    for i in range(nsamp):
        sig[i] += amp * cos(omega * (i / fs - tau))


def das_power(double[::1] signals, Py_ssize_t nmics, Py_ssize_t nsamp,
              double[::1] taus, double fs, Py_ssize_t wlen):
    cdef Py_ssize_t i, m, j, base
    cdef double acc = 0.0, s, pos, frac
    for i in range(wlen):
        s = 0.0
        for m in range(nmics):
            pos = i + taus[m] * fs
            j = <Py_ssize_t> pos
            frac = pos - j
            base = m * nsamp
            s += signals[base + j] * (1.0 - frac) + signals[base + j + 1] * frac
        acc += s * s
    return acc / wlen
