"""Pure-Python kernel set.

These are the numeric inner loops of the package, written over flat
``array('d')`` buffers.  A Cython twin (``_ckernels.pyx``) implements the
same functions with the same loop structure and accumulation order, so
both backends produce bit-identical results; the compiled one is just
fast.  Keep the two files in sync: any change here must be mirrored.

Buffers are row-major.  Index arrays are ``array('q')``.  Functions
allocate and return fresh buffers unless documented as in-place.
"""

import math
from array import array

INVSQRT2 = math.sqrt(0.5)


def zeros(n):
    return array("d", bytes(8 * n))


def copy_of(a):
    return array("d", a)


# ---------------------------------------------------------------- elementwise


def add(a, b):
    out = array("d", a)
    for i in range(len(out)):
        out[i] += b[i]
    return out


def sub(a, b):
    out = array("d", a)
    for i in range(len(out)):
        out[i] -= b[i]
    return out


def mul(a, b):
    out = array("d", a)
    for i in range(len(out)):
        out[i] *= b[i]
    return out


def scale(a, s):
    out = array("d", a)
    for i in range(len(out)):
        out[i] *= s
    return out


def add_scaled(a, b, s):
    # a + s*b
    out = array("d", a)
    for i in range(len(out)):
        out[i] += s * b[i]
    return out


def add_scalar(a, s):
    out = array("d", a)
    for i in range(len(out)):
        out[i] += s
    return out


def tanh_(a):
    return array("d", (math.tanh(v) for v in a))


def tanh_grad(y, g):
    # g * (1 - y*y) for y = tanh(x)
    out = array("d", g)
    for i in range(len(out)):
        out[i] *= 1.0 - y[i] * y[i]
    return out


def sin_(a):
    return array("d", (math.sin(v) for v in a))


def cos_(a):
    return array("d", (math.cos(v) for v in a))


def exp_(a):
    return array("d", (math.exp(v) for v in a))


def relu(a):
    return array("d", (v if v > 0.0 else 0.0 for v in a))


def gtzero_mask(a):
    return array("d", (1.0 if v > 0.0 else 0.0 for v in a))


def soft_threshold(a, theta):
    out = zeros(len(a))
    for i, v in enumerate(a):
        if v > theta:
            out[i] = v - theta
        elif v < -theta:
            out[i] = v + theta
    return out


def st_mask(a, theta):
    # 1 outside [-theta, theta], 0 inside (subgradient 0 at the kink)
    return array("d", (1.0 if (v > theta or v < -theta) else 0.0 for v in a))


def st_theta_grad(a, theta, g):
    # d soft_threshold(a, theta) / d theta contracted with g
    acc = 0.0
    for i, v in enumerate(a):
        if v > theta:
            acc -= g[i]
        elif v < -theta:
            acc += g[i]
    return acc


# ----------------------------------------------------------------- reductions


def sum_all(a):
    acc = 0.0
    for v in a:
        acc += v
    return acc


def dot(a, b):
    acc = 0.0
    for i in range(len(a)):
        acc += a[i] * b[i]
    return acc


def abs_sum(a):
    acc = 0.0
    for v in a:
        acc += abs(v)
    return acc


def max_abs_diff(a, b):
    m = 0.0
    for i in range(len(a)):
        d = abs(a[i] - b[i])
        if d > m:
            m = d
    return m


# ----------------------------------------------------------- matrix products


def matmul(a, b, m, k, n):
    # (m,k) @ (k,n); ikj order, contiguous inner loop
    out = zeros(m * n)
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
    return out


def matmul_nt(a, b, m, k, n):
    # a(m,k) @ b(n,k)^T -> (m,n)
    out = zeros(m * n)
    for i in range(m):
        ik = i * k
        on = i * n
        for j in range(n):
            jk = j * k
            acc = 0.0
            for p in range(k):
                acc += a[ik + p] * b[jk + p]
            out[on + j] = acc
    return out


def matmul_tn(a, b, k, m, n):
    # a(k,m)^T @ b(k,n) -> (m,n)
    out = zeros(m * n)
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
    return out


def rowadd(x, b, m, ncol):
    out = array("d", x)
    for i in range(m):
        bi = b[i]
        off = i * ncol
        for j in range(ncol):
            out[off + j] += bi
    return out


def rowsum(x, m, ncol):
    out = zeros(m)
    for i in range(m):
        off = i * ncol
        acc = 0.0
        for j in range(ncol):
            acc += x[off + j]
        out[i] = acc
    return out


def rowmul(x, s, m, ncol):
    out = array("d", x)
    for i in range(m):
        si = s[i]
        off = i * ncol
        for j in range(ncol):
            out[off + j] *= si
    return out


def rowdot(x, y, m, ncol):
    out = zeros(m)
    for i in range(m):
        off = i * ncol
        acc = 0.0
        for j in range(ncol):
            acc += x[off + j] * y[off + j]
        out[i] = acc
    return out


# ---------------------------------------------------------------- convolution


def conv2d(img, hh, ww, ker, kh, kw, adjoint):
    # circular convolution, kernel center at (kh//2, kw//2);
    # adjoint applies the transposed (correlation) operator
    ca = kh // 2
    cb = kw // 2
    out = zeros(hh * ww)
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
    return out


def conv2d_kernel_grad(img, gout, hh, ww, kh, kw):
    # gradient of conv2d(img, ker) w.r.t. ker, contracted with gout
    ca = kh // 2
    cb = kw // 2
    out = zeros(kh * kw)
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
    return out


# ------------------------------------------------------------------------ fft


def fft(re, im, n, howmany, stride, dist, inverse):
    # unitary radix-2 FFT of `howmany` interleaved transforms; element i of
    # transform t sits at t*dist + i*stride
    out_re = array("d", re)
    out_im = array("d", im)
    levels = n.bit_length() - 1
    norm = 1.0 / math.sqrt(n)
    sign = 1.0 if inverse else -1.0
    wr_tab = zeros(n // 2) if n > 1 else zeros(1)
    wi_tab = zeros(n // 2) if n > 1 else zeros(1)
    buf_re = zeros(n)
    buf_im = zeros(n)
    for t in range(howmany):
        base = t * dist
        # gather with bit-reversed addressing
        for i in range(n):
            rev = 0
            x = i
            for _ in range(levels):
                rev = (rev << 1) | (x & 1)
                x >>= 1
            src = base + i * stride
            buf_re[rev] = re[src]
            buf_im[rev] = im[src]
        size = 2
        while size <= n:
            half = size // 2
            ang = sign * 2.0 * math.pi / size
            for kk in range(half):
                wr_tab[kk] = math.cos(ang * kk)
                wi_tab[kk] = math.sin(ang * kk)
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
    return out_re, out_im


# ------------------------------------------------------------ gather/scatter


def gather_scale(x, idx, sc):
    out = zeros(len(idx))
    for i in range(len(idx)):
        out[i] = sc[i] * x[idx[i]]
    return out


def scatter_scale_add(g, idx, sc, out_len):
    out = zeros(out_len)
    for i in range(len(idx)):
        out[idx[i]] += sc[i] * g[i]
    return out


def gather_scale_cols(x, ncol, idx, sc):
    nrow = len(idx)
    out = zeros(nrow * ncol)
    for i in range(nrow):
        src = idx[i] * ncol
        si = sc[i]
        off = i * ncol
        for j in range(ncol):
            out[off + j] = si * x[src + j]
    return out


def scatter_scale_add_cols(g, ncol, idx, sc, out_rows):
    out = zeros(out_rows * ncol)
    for i in range(len(idx)):
        dst = idx[i] * ncol
        si = sc[i]
        off = i * ncol
        for j in range(ncol):
            out[dst + j] += si * g[off + j]
    return out


# ----------------------------------------------------------------------- haar


def _haar1d_level_fwd(x, off, m, step):
    half = m // 2
    s = zeros(half)
    d = zeros(half)
    for i in range(half):
        a = x[off + 2 * i * step]
        b = x[off + (2 * i + 1) * step]
        s[i] = (a + b) * INVSQRT2
        d[i] = (a - b) * INVSQRT2
    for i in range(half):
        x[off + i * step] = s[i]
        x[off + (half + i) * step] = d[i]


def _haar1d_level_inv(x, off, m, step):
    half = m // 2
    a = zeros(m)
    for i in range(half):
        s = x[off + i * step]
        d = x[off + (half + i) * step]
        a[2 * i] = (s + d) * INVSQRT2
        a[2 * i + 1] = (s - d) * INVSQRT2
    for i in range(m):
        x[off + i * step] = a[i]


def haar1d(x, n, levels, inverse):
    out = array("d", x)
    if inverse:
        for lev in range(levels - 1, -1, -1):
            _haar1d_level_inv(out, 0, n >> lev, 1)
    else:
        for lev in range(levels):
            _haar1d_level_fwd(out, 0, n >> lev, 1)
    return out


def haar1d_cols(x, n, ncol, levels, inverse):
    out = array("d", x)
    for j in range(ncol):
        if inverse:
            for lev in range(levels - 1, -1, -1):
                _haar1d_level_inv(out, j, n >> lev, ncol)
        else:
            for lev in range(levels):
                _haar1d_level_fwd(out, j, n >> lev, ncol)
    return out


def haar2d(x, hh, ww, levels, inverse):
    out = array("d", x)
    if inverse:
        for lev in range(levels - 1, -1, -1):
            mh = hh >> lev
            mw = ww >> lev
            for j in range(mw):
                _haar1d_level_inv(out, j, mh, ww)
            for i in range(mh):
                _haar1d_level_inv(out, i * ww, mw, 1)
    else:
        for lev in range(levels):
            mh = hh >> lev
            mw = ww >> lev
            for i in range(mh):
                _haar1d_level_fwd(out, i * ww, mw, 1)
            for j in range(mw):
                _haar1d_level_fwd(out, j, mh, ww)
    return out


# --------------------------------------------------------------------- linalg


def cholesky(a, n):
    # lower-triangular factor of an SPD matrix; None if a pivot fails
    low = zeros(n * n)
    for i in range(n):
        for j in range(i + 1):
            acc = a[i * n + j]
            for p in range(j):
                acc -= low[i * n + p] * low[j * n + p]
            if i == j:
                if acc <= 0.0:
                    return None
                low[i * n + i] = math.sqrt(acc)
            else:
                low[i * n + j] = acc / low[j * n + j]
    return low


def chol_solve(low, b, n, nrhs):
    # solves (L L^T) x = b for row-major b of shape (n, nrhs)
    x = array("d", b)
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
    return x


# ------------------------------------------------------------------ optimizer


def adam_step(p, g, m, v, lr, b1, b2, eps, t):
    # m, v updated in place; returns the new parameter buffer
    out = array("d", p)
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for i in range(len(out)):
        m[i] = b1 * m[i] + (1.0 - b1) * g[i]
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i]
        out[i] -= lr * (m[i] / c1) / (math.sqrt(v[i] / c2) + eps)
    return out


def sgd_step(p, g, lr):
    out = array("d", p)
    for i in range(len(out)):
        out[i] -= lr * g[i]
    return out


# ------------------------------------------------------------------ acoustics


def synth_add(sig, nsamp, amp, omega, fs, tau):
    # in place: sig[i] += amp * cos(omega * (i/fs - tau))
    for i in range(nsamp):
        sig[i] += amp * math.cos(omega * (i / fs - tau))


def das_power(signals, nmics, nsamp, taus, fs, wlen):
    # mean squared delay-and-sum output over the first wlen samples;
    # fractional delays by linear interpolation
    acc = 0.0
    for i in range(wlen):
        s = 0.0
        for m in range(nmics):
            pos = i + taus[m] * fs
            j = int(pos)
            frac = pos - j
            base = m * nsamp
            s += signals[base + j] * (1.0 - frac) + signals[base + j + 1] * frac
        acc += s * s
    return acc / wlen
