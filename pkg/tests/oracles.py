"""Independent reference computations: plain Python loops over scalars."""

import math

import numpy as np


def matmul_loop(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return np.array(out)


def sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def layer_loop(W, b, x):
    """sigmoid(W x + b) one entry at a time."""
    rows, cols, n = W.shape[0], W.shape[1], x.shape[1]
    out = np.empty((rows, n))
    for j in range(n):
        for i in range(rows):
            s = b[i, 0]
            for t in range(cols):
                s += W[i, t] * x[t, j]
            out[i, j] = sig(s)
    return out


def ae_objective_loop(p, x, lam, rho, beta):
    h = layer_loop(p.W_enc, p.b_enc, x)
    r = layer_loop(p.W_dec, p.b_dec, h)
    d, n = x.shape
    recon = 0.0
    for j in range(n):
        for i in range(d):
            recon += (r[i, j] - x[i, j]) ** 2
    recon /= 2 * n
    l2 = 0.0
    for W in (p.W_enc, p.W_dec):
        for v in W.ravel():
            l2 += v * v
    kl = 0.0
    for u in range(h.shape[0]):
        rh = sum(h[u, j] for j in range(n)) / n
        rh = min(max(rh, 1e-9), 1 - 1e-9)
        kl += rho * math.log(rho / rh) + (1 - rho) * math.log((1 - rho) / (1 - rh))
    return recon + lam / 2 * l2 + beta * kl


def softmax_column(z):
    m = max(z)
    e = [math.exp(v - m) for v in z]
    s = sum(e)
    return [v / s for v in e]


def xent_loop(W, b, x, t, lam):
    c, n = W.shape[0], x.shape[1]
    total = 0.0
    for j in range(n):
        z = [b[i, 0] + sum(W[i, k] * x[k, j] for k in range(W.shape[1])) for i in range(c)]
        p = softmax_column(z)
        for i in range(c):
            if t[i, j]:
                total -= t[i, j] * math.log(p[i])
    return total / n + lam / 2 * sum(v * v for v in W.ravel())


def central_differences(f, params, step=1e-5):
    """Gradient of ``f()`` w.r.t. every entry of every array in ``params`` (mutated in place)."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + step
            fp = f()
            arr[idx] = old - step
            fm = f()
            arr[idx] = old
            g[idx] = (fp - fm) / (2 * step)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric, floor=1e-7):
    """Max over entries of |a - n| / max(|a|, |n|, floor).

    ``floor`` keeps entries that are zero up to rounding from dividing by ~0;
    it bounds their absolute error at ``floor * tol``.
    """
    worst = 0.0
    for name in numeric:
        a, n = np.asarray(analytic[name]), numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def counts_by_sample(true, pred, cls):
    """tp, tn, fp, fn for class ``cls`` by scanning samples."""
    tp = tn = fp = fn = 0
    for t, p in zip(true, pred):
        if t == cls and p == cls:
            tp += 1
        elif t != cls and p != cls:
            tn += 1
        elif p == cls:
            fp += 1
        else:
            fn += 1
    return tp, tn, fp, fn


def macro_metrics_by_sample(true, pred, class_count):
    """Macro ACC, BER, F1 from per-sample counting (F1 over classes that occur)."""
    accs, bers, f1s = [], [], []
    for c in range(class_count):
        tp, tn, fp, fn = counts_by_sample(true, pred, c)
        accs.append((tp + tn) / (tp + tn + fp + fn))
        fpr = fp / (tn + fp) if tn + fp else 0.0
        fnr = fn / (fn + tp) if fn + tp else 0.0
        bers.append(0.5 * (fpr + fnr))
        if tp + fp + fn:
            if tp == 0:
                f1s.append(0.0)
            else:
                prec, rec = tp / (tp + fp), tp / (tp + fn)
                f1s.append(2 * prec * rec / (prec + rec))
    return sum(accs) / len(accs), sum(bers) / len(bers), sum(f1s) / len(f1s)


def nrmse_loop(y, d):
    ys, ds = list(np.ravel(y)), list(np.ravel(d))
    n = len(ds)
    mean = sum(ds) / n
    sigma = math.sqrt(sum((v - mean) ** 2 for v in ds) / n)
    rmse = math.sqrt(sum((a - b) ** 2 for a, b in zip(ys, ds)) / n)
    return rmse / sigma
