"""Elementary symmetric functions, Garding cones and the basic algebraic inequalities.

Every function accepts either a single vector of length n or a batch with the
vector on the last axis; batches are what the randomized campaigns feed in.
Indices are 0-based throughout.
"""
from math import comb

import numpy as np

from .errors import DomainError

__all__ = [
    "elementary",
    "sigma",
    "sigma_partial",
    "sigma_partials",
    "sigma_second_partial",
    "sigma_second_partials",
    "deleted_elementary",
    "pair_deleted_elementary",
    "in_gamma",
    "sample_gamma",
    "newton_maclaurin_gap",
    "lemma7_sides",
    "lemma7_gap",
    "lemma7_delta_sides",
    "lemma7_delta_gap",
    "matrixfn_second_derivative",
    "matrixfn_second_derivative_fd",
    "MATRIX_FUNCTIONS",
]


def _as_vectors(lam):
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0:
        raise DomainError("expected a vector of curvatures, got a scalar")
    if not np.all(np.isfinite(lam)):
        raise DomainError("curvature vector has non-finite entries")
    return lam


def elementary(lam):
    """All elementary symmetric polynomials e_0..e_n, stacked on the last axis.

    Uses the prefix recurrence e_m^(j) = e_m^(j-1) + lam_j e_{m-1}^(j-1), which
    involves no subtraction when the entries are nonnegative.
    """
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for j in range(n):
        e[..., 1:j + 2] = e[..., 1:j + 2] + lam[..., j, None] * e[..., 0:j + 1]
    return e


def _check_order(m, n, lo=0):
    if not (lo <= m <= n):
        raise DomainError(f"order m={m} outside [{lo}, {n}]")


def sigma(lam, m):
    """m-th elementary symmetric polynomial of the entries (sigma_0 = 1)."""
    lam = _as_vectors(lam)
    _check_order(m, lam.shape[-1])
    return elementary(lam)[..., m]


def _deleted(lam, idx):
    return np.delete(lam, idx, axis=-1)


def _check_index(i, n):
    if not (0 <= i < n):
        raise DomainError(f"index {i} outside [0, {n})")


def sigma_partial(lam, m, i):
    """d sigma_m / d lam_i = sigma_{m-1}(lam | i)."""
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    _check_order(m, n, lo=1)
    _check_index(i, n)
    return elementary(_deleted(lam, i))[..., m - 1]


def deleted_elementary(lam):
    """e_m(lam | i) for every i, shape (..., n, n) indexed [i, m] (m = 0..n-1)."""
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    return np.stack([elementary(_deleted(lam, i)) for i in range(n)], axis=-2)


def pair_deleted_elementary(lam):
    """e_m(lam | p q) for p != q, shape (..., n, n, n-1); the p == q slots are zero."""
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    out = np.zeros(lam.shape + (n, max(n - 1, 1)))
    for p in range(n):
        for q in range(p + 1, n):
            v = elementary(_deleted(lam, [p, q]))
            out[..., p, q, :n - 1] = v
            out[..., q, p, :n - 1] = v
    return out


def sigma_partials(lam, m):
    """All first partials, shape (..., n)."""
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    _check_order(m, n, lo=1)
    return deleted_elementary(lam)[..., m - 1]


def sigma_second_partial(lam, m, p, q):
    """sigma_{m-2}(lam | p q) for p != q, zero on the diagonal."""
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    _check_order(m, n, lo=2)
    _check_index(p, n)
    _check_index(q, n)
    if p == q:
        return np.zeros(lam.shape[:-1]) if lam.ndim > 1 else 0.0
    return elementary(_deleted(lam, [p, q]))[..., m - 2]


def sigma_second_partials(lam, m):
    """Matrix of second partials, shape (..., n, n); zero diagonal.

    Orders below 2 give the zero matrix (sigma_0, sigma_1 are affine).
    """
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    _check_order(m, n)
    if m < 2:
        return np.zeros(lam.shape + (n,))
    return pair_deleted_elementary(lam)[..., m - 2]


def in_gamma(lam, k, margin=0.0):
    """True iff sigma_m(lam) > margin_m for m = 1..k.

    ``margin`` is a scalar or a sequence indexed by m-1.
    """
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    _check_order(k, n, lo=1)
    e = elementary(lam)[..., 1:k + 1]
    margin = np.broadcast_to(np.asarray(margin, dtype=float), (k,))
    return np.all(e > margin, axis=-1)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_gamma(n, k, seed, scale=1.0, size=None, margin=1e-6, iterations=60):
    """Draw points of Gamma_k: Gaussian entries plus the least nonnegative uniform shift.

    The shift c >= 0 is the smallest value (to bisection accuracy) for which
    sigma_m(x + c 1) >= margin * scale**m for all m <= k.  Points already inside
    the cone with that margin are returned unshifted, so the output mixes
    boundary-adjacent and interior samples.
    """
    _check_order(k, n, lo=1)
    rng = _rng(seed)
    count = 1 if size is None else int(size)
    x = rng.standard_normal((count, n)) * scale
    thresholds = margin * scale ** np.arange(1, k + 1)

    # sigma_m(x + c 1) = sum_j C(n-j, m-j) sigma_j(x) c^(m-j): a polynomial in c
    e = elementary(x)
    coef = np.zeros((count, k, n + 1))
    for m in range(1, k + 1):
        for j in range(m + 1):
            coef[:, m - 1, m - j] += comb(n - j, m - j) * e[:, j]
    powers = np.arange(n + 1)

    def ok(c):
        vals = np.einsum("cmp,cp->cm", coef, c[:, None] ** powers)
        return np.all(vals >= thresholds, axis=-1)

    def ok_direct(c):
        return np.all(elementary(x + c[:, None])[:, 1:k + 1] >= thresholds, axis=-1)

    lo = np.zeros(count)
    inside = ok_direct(lo)
    hi = np.max(-x, axis=-1).clip(min=0.0) + scale
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        good = ok(mid)
        hi = np.where(good, mid, hi)
        lo = np.where(good, lo, mid)
    # the polynomial form can misjudge by rounding; confirm on the shifted vector
    bump = 1e-12 * (scale + hi)
    for _ in range(60):
        bad = ~(inside | ok_direct(hi))
        if not np.any(bad):
            break
        hi = np.where(bad, hi + bump, hi)
        bump = bump * 2.0
    shift = np.where(inside, 0.0, hi)
    out = x + shift[:, None]
    return out[0] if size is None else out


def newton_maclaurin_gap(lam, m):
    """p_m^2 - p_{m-1} p_{m+1} with p_j = sigma_j / C(n, j); nonnegative for real lam."""
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    _check_order(m, n - 1, lo=1)
    e = elementary(lam)
    p = [e[..., j] / comb(n, j) for j in (m - 1, m, m + 1)]
    return p[1] ** 2 - p[0] * p[2]


def _quotient_pieces(W, w, k, l):
    W = _as_vectors(W)
    w = np.asarray(w, dtype=float)
    n = W.shape[-1]
    if not (1 <= l < k <= n):
        raise DomainError(f"need 1 <= l < k <= n, got k={k}, l={l}, n={n}")
    if not np.all(in_gamma(W, k)):
        raise DomainError(f"W is not in Gamma_{k}")
    e = elementary(W)
    d1 = deleted_elementary(W)
    d2 = pair_deleted_elementary(W) if n >= 2 else None
    sk, sl = e[..., k], e[..., l]
    dk = np.sum(d1[..., k - 1] * w, axis=-1)
    dl = np.sum(d1[..., l - 1] * w, axis=-1)
    qk = np.einsum("...pq,...p,...q->...", d2[..., k - 2], w, w)
    ql = np.einsum("...pq,...p,...q->...", d2[..., l - 2], w, w) if l >= 2 else np.zeros_like(sk)
    return sk, sl, dk, dl, qk, ql


def lemma7_sides(W, w, k, l):
    """Both sides of the concavity inequality for (sigma_k/sigma_l)^(1/(k-l)).

    W is the diagonal of a Codazzi tensor in Gamma_k and w = (w_11h, ..., w_nnh).
    Returns (lhs, rhs); the inequality asserts lhs >= rhs.
    """
    return _lemma7_from_pieces(_quotient_pieces(W, w, k, l), k, l)


def _lemma7_from_pieces(pieces, k, l):
    sk, sl, dk, dl, qk, ql = pieces
    alpha = 1.0 / (k - l)
    a = dk / sk
    b = dl / sl
    lhs = -qk / sk + ql / sl
    rhs = (a - b) * ((alpha - 1.0) * a - (alpha + 1.0) * b)
    return lhs, rhs


def lemma7_gap(W, w, k, l):
    lhs, rhs = lemma7_sides(W, w, k, l)
    return lhs - rhs


def lemma7_delta_sides(W, w, k, l, delta):
    """Sides of the delta-weighted form obtained from the Schwarz inequality."""
    if not np.all(np.asarray(delta) > 0):
        raise DomainError("delta must be positive")
    return _lemma7_delta_from_pieces(_quotient_pieces(W, w, k, l), k, l, delta)


def _lemma7_delta_from_pieces(pieces, k, l, delta):
    sk, sl, dk, dl, qk, ql = pieces
    alpha = 1.0 / (k - l)
    lhs = -qk + (1.0 - alpha + alpha / delta) * dk ** 2 / sk
    rhs = sk * (alpha + 1.0 - delta * alpha) * (dl / sl) ** 2 - sk / sl * ql
    return lhs, rhs


def lemma7_delta_gap(W, w, k, l, delta):
    lhs, rhs = lemma7_delta_sides(W, w, k, l, delta)
    return lhs - rhs


# Symmetric functions f(lambda) with their gradient and Hessian in lambda.
def _sigma_fn(k):
    return (lambda lam: sigma(lam, k),
            lambda lam: sigma_partials(lam, k),
            lambda lam: sigma_second_partials(lam, k))


MATRIX_FUNCTIONS = {
    "sum_exp": (lambda lam: np.sum(np.exp(lam), axis=-1),
                lambda lam: np.exp(lam),
                lambda lam: np.exp(lam)[..., :, None] * np.eye(lam.shape[-1])),
    "sum_squares": (lambda lam: np.sum(lam ** 2, axis=-1),
                    lambda lam: 2.0 * lam,
                    lambda lam: 2.0 * np.broadcast_to(np.eye(lam.shape[-1]), lam.shape + (lam.shape[-1],))),
}


def _resolve_fn(fn, k):
    if fn == "sigma_k":
        if k is None:
            raise DomainError("fn='sigma_k' needs the order k")
        return _sigma_fn(k)
    try:
        return MATRIX_FUNCTIONS[fn]
    except KeyError:
        raise DomainError(f"unknown symmetric function {fn!r}") from None


def matrixfn_second_derivative(A_eigs, B, fn, k=None, separation=1e-2):
    """Second derivative of F(A) = f(eigenvalues(A)) at A = diag(A_eigs) in direction B.

    Refuses (DomainError) when two eigenvalues are closer than
    ``separation * max|A_eigs|``: the divided differences are then dominated
    by cancellation.
    """
    lam = _as_vectors(A_eigs)
    B = np.asarray(B, dtype=float)
    n = lam.shape[-1]
    if B.shape[-2:] != (n, n):
        raise DomainError("direction B must be n x n")
    gaps = np.where(np.eye(n, dtype=bool), np.inf, np.abs(lam[..., :, None] - lam[..., None, :]))
    if np.any(gaps.min(axis=(-1, -2)) < separation * np.abs(lam).max(axis=-1)):
        raise DomainError("eigenvalues of A are not separated enough for the divided-difference formula")
    _, grad, hess = _resolve_fn(fn, k)
    fdot = grad(lam)
    fddot = hess(lam)
    diag = np.diagonal(B, axis1=-2, axis2=-1)
    first = np.einsum("...jk,...j,...k->...", fddot, diag, diag)
    num = fdot[..., :, None] - fdot[..., None, :]
    den = lam[..., :, None] - lam[..., None, :] + np.eye(n)
    ratio = np.where(np.eye(n, dtype=bool), 0.0, num / den)
    # the full double sum counts each j<k pair twice
    second = np.sum(ratio * B ** 2, axis=(-1, -2))
    return first + second


def matrixfn_second_derivative_fd(A_eigs, B, fn, k=None, step=1e-4):
    """Central second difference of t -> f(eigvalsh(diag(A_eigs) + t B)) at t = 0."""
    lam = _as_vectors(A_eigs)
    B = np.asarray(B, dtype=float)
    value, _, _ = _resolve_fn(fn, k)
    A = lam[..., :, None] * np.eye(lam.shape[-1])

    def F(t):
        return value(np.linalg.eigvalsh(A + t * B))

    return (F(step) - 2.0 * F(0.0) + F(-step)) / step ** 2


def sigma_bruteforce(lam):
    """Oracle: all e_0..e_n by explicit enumeration of the 2^n index subsets.

    Products are built subset by subset (each subset extends the one without its
    highest index) and then summed by cardinality; no recurrence is shared with
    ``elementary``.
    """
    lam = _as_vectors(lam)
    n = lam.shape[-1]
    size = 1 << n
    prod = np.ones(lam.shape[:-1] + (size,))
    card = np.zeros(size, dtype=int)
    for s in range(1, size):
        top = s.bit_length() - 1
        rest = s ^ (1 << top)
        prod[..., s] = prod[..., rest] * lam[..., top]
        card[s] = card[rest] + 1
    out = np.zeros(lam.shape[:-1] + (n + 1,))
    for m in range(n + 1):
        out[..., m] = prod[..., card == m].sum(axis=-1)
    return out


# ---------------------------------------------------------------------------
# campaigns

def campaign_sigma_oracle(seed, samples=10_000, n_values=range(2, 13), threads=1, tolerance=1e-12):
    """Recurrence vs subset enumeration, error relative to sigma_m(|lam|)."""
    from .campaign import merge_reports, run_campaign

    reports = []
    for n in n_values:
        def evaluate(rng, count, n=n):
            x = rng.standard_normal((count, n)) * np.exp(rng.uniform(-2, 2, (count, 1)))
            err = np.abs(elementary(x) - sigma_bruteforce(x)) / elementary(np.abs(x))
            return -err.max(axis=-1), {"lam": x}
        reports.append(run_campaign("sigma_oracle", evaluate, samples, (seed, n),
                                    tolerance, params={"n": n}, threads=threads, block_size=1024))
    return merge_reports("sigma_oracle", reports, params={"n_values": list(n_values), "samples_per_n": samples})


def campaign_newton_maclaurin(seed, samples=100_000, n_values=range(2, 9), threads=1, tolerance=1e-12):
    from .campaign import merge_reports, run_campaign

    reports = []
    for n in n_values:
        def evaluate(rng, count, n=n):
            x = rng.standard_normal((count, n))
            e = elementary(x)
            worst = np.full(count, np.inf)
            for m in range(1, n):
                p0, p1, p2 = (e[:, j] / comb(n, j) for j in (m - 1, m, m + 1))
                gap = p1 ** 2 - p0 * p2
                scale = np.maximum(1.0, np.maximum(p1 ** 2, np.abs(p0 * p2)))
                worst = np.minimum(worst, gap / scale)
            return worst, {"lam": x}
        reports.append(run_campaign("newton_maclaurin", evaluate, samples, (seed, n), tolerance,
                                    params={"n": n}, threads=threads))
    return merge_reports("newton_maclaurin", reports, params={"n_values": list(n_values), "samples_per_n": samples})


def _lemma7_evaluator(n, k, l, deltas):
    def evaluate(rng, count):
        W = sample_gamma(n, k, rng, size=count)
        w = rng.standard_normal((count, n))
        pieces = _quotient_pieces(W, w, k, l)
        lhs, rhs = _lemma7_from_pieces(pieces, k, l)
        worst = (lhs - rhs) / np.maximum(np.abs(lhs) + np.abs(rhs), 1e-300)
        for d in deltas:
            lhs, rhs = _lemma7_delta_from_pieces(pieces, k, l, d)
            worst = np.minimum(worst, (lhs - rhs) / np.maximum(np.abs(lhs) + np.abs(rhs), 1e-300))
        return worst, {"W": W, "w": w}
    return evaluate


def lemma7_equality_family(n_values=range(2, 7), scales=(0.1, 1.0, 10.0)):
    """Max |gap| of the lemma7 concavity inequality over W = c 1, w = s 1: the equality configuration."""
    worst = 0.0
    for n in n_values:
        for k in range(2, n + 1):
            for l in range(1, k):
                for c in scales:
                    for s in (-3.0, -1.0, 0.5, 2.0):
                        W = np.full(n, c)
                        w = np.full(n, s)
                        lhs, rhs = lemma7_sides(W, w, k, l)
                        worst = max(worst, abs(lhs - rhs) / max(abs(lhs) + abs(rhs), 1.0))
    return worst


def campaign_lemma7(seed, samples=100_000, n_values=range(2, 7), threads=1, tolerance=1e-9,
                    deltas=(0.1, 1.0, 10.0)):
    """The lemma7 inequalities over every 1 <= l < k <= n; the worst normalized gap per sample is kept."""
    from .campaign import merge_reports, run_campaign

    reports = []
    for n in n_values:
        for k in range(2, n + 1):
            for l in range(1, k):
                reports.append(run_campaign("lemma7", _lemma7_evaluator(n, k, l, deltas), samples,
                                            (seed, n, k, l), tolerance,
                                            params={"n": n, "k": k, "l": l}, threads=threads))
    out = merge_reports("lemma7", reports, params={"n_values": list(n_values), "samples_per_triple": samples,
                                                   "deltas": list(deltas)})
    eq = lemma7_equality_family(n_values)
    out.extra["equality_family_max_abs_gap"] = eq
    out.passed = out.passed and eq <= 1e-9
    return out


def sample_separated_spectrum(rng, count, n, separation=0.1, spread=2.0):
    """Sorted spectra in [-spread, spread + n*separation] with consecutive gaps >= separation."""
    gaps = separation + rng.exponential(0.5, (count, n - 1))
    lam = np.concatenate([np.zeros((count, 1)), np.cumsum(gaps, axis=-1)], axis=-1)
    return lam - spread * rng.uniform(0, 1, (count, 1))


def campaign_lemma9(seed, samples=1000, n_values=range(2, 7), tolerance=1e-5, step=1e-4):
    """Divided-difference formula vs the eigenvalue finite-difference oracle.

    The error is measured relative to the sum of magnitudes of the two parts of
    the formula (diagonal part and divided-difference part), which is the scale
    the finite-difference roundoff competes against.
    """
    from .campaign import CampaignReport, block_rng

    rng = block_rng(seed, 0)
    worst = np.inf
    argmin = {}
    count = 0
    for s in range(samples):
        n = int(rng.choice(list(n_values)))
        lam = sample_separated_spectrum(rng, 1, n)[0]
        if np.min(np.diff(lam)) < 1e-2 * np.abs(lam).max():
            lam = lam + 1.0
        B = rng.standard_normal((n, n))
        B = 0.5 * (B + B.T)
        k = int(rng.integers(2, n + 1))
        for fn in ("sigma_k", "sum_exp", "sum_squares"):
            exact = matrixfn_second_derivative(lam, B, fn, k)
            fd = matrixfn_second_derivative_fd(lam, B, fn, k, step=step)
            parts = _second_derivative_parts(lam, B, fn, k)
            rel = abs(exact - fd) / max(parts, 1e-300)
            count += 1
            if -rel < worst:
                worst = -rel
                argmin = {"A_eigs": lam, "B": B, "fn": fn, "k": k, "exact": exact, "fd": fd}
    return CampaignReport(lemma="lemma9", params={"n_values": list(n_values), "separation": 0.1, "step": step},
                          samples=count, min_gap=float(worst), tolerance=tolerance,
                          passed=bool(worst >= -tolerance),
                          argmin={k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in argmin.items()})


def _second_derivative_parts(lam, B, fn, k):
    diagB = np.diag(np.diag(B))
    first = matrixfn_second_derivative(lam, diagB, fn, k)
    total = matrixfn_second_derivative(lam, B, fn, k)
    return abs(first) + abs(total - first)
