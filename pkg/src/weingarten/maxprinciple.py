"""Term ledgers and composite third-derivative inequalities of the curvature estimates.

Third derivatives are free variables.  ``h3`` is an n x n array whose row i is
(h_11i, ..., h_nni); a ledger for index i only reads row i.  All batch-capable
helpers (names starting with an underscore or ``*_batch``) take kappa of shape
(b, n) and a row array y of shape (b, n).

The scalar-curvature ledger involves e^kappa.  Internally every term is
computed relative to e^{kappa_1} (the largest entry), so that campaigns with
kappa_1 up to 10^3 stay finite; the public ``scalar_ledger`` multiplies the
factor back in.
"""
from collections import namedtuple
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import exprel

from .errors import DomainError, PreconditionError
from .symfunc import deleted_elementary, elementary, in_gamma, pair_deleted_elementary

Ledger = namedtuple("Ledger", "A B C D E")


def _sum(ledger):
    return ledger.A + ledger.B + ledger.C + ledger.D - ledger.E


def _abs_sum(ledger):
    return sum(np.abs(t) for t in ledger)


def divided_exp(a, b, shift=0.0):
    """(e^a - e^b)/(a - b) * e^{-shift}, continuous across a = b.

    For |a - b| <= 1 the form e^min(a,b) exprel(|a - b|) avoids subtracting
    nearly equal numbers (and returns e^a at a = b); beyond that the direct
    quotient is exact to rounding and cannot overflow once shifted.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.minimum(a, b) - shift
    hi = np.maximum(a, b) - shift
    d = hi - lo
    near = d <= 1.0
    small = np.exp(lo) * exprel(np.where(near, d, 0.0))
    far = (np.exp(hi) - np.exp(lo)) / np.where(near, 1.0, d)
    return np.where(near, small, far)


# ---------------------------------------------------------------------------
# lemma10 scalar form

@dataclass
class InequalityParams:
    K: float
    alpha: float
    delta: float

    def __post_init__(self):
        if self.K < 0 or self.alpha < 0 or not (0 < self.delta <= 1):
            raise DomainError("need K >= 0, alpha >= 0, 0 < delta <= 1")


def _lemma10_terms(W, w, h, K, alpha, delta):
    e = elementary(W)
    s2 = deleted_elementary(W)[..., 1]
    g = np.sum(s2 * w, axis=-1)
    cross = np.sum(w, axis=-1) ** 2 - np.sum(w ** 2, axis=-1)
    t1 = K * g ** 2
    t3 = delta * W[..., h] * s2[..., h] * w[..., h] ** 2 / e[..., 1] ** 2
    t4 = alpha * (np.sum(w ** 2, axis=-1) - w[..., h] ** 2)
    return t1, -cross, -t3, t4


def lemma10_gap(W, w, h, params):
    """K (sigma_2)_h^2 - sum_{p!=r} w_pph w_rrh - delta w_hh sigma_2^hh w_hhh^2/sigma_1^2 + alpha sum_{i!=h} w_iih^2."""
    W = np.asarray(W, dtype=float)
    w = np.asarray(w, dtype=float)
    if not np.all(in_gamma(W, 2)):
        raise DomainError("W is not in Gamma_2")
    if not (0 <= h < W.shape[-1]):
        raise DomainError(f"index h={h} out of range")
    if not isinstance(params, InequalityParams):
        params = InequalityParams(*params)
    return sum(_lemma10_terms(W, w, h, params.K, params.alpha, params.delta))


def lemma10_matrix(W, h, K, alpha, delta):
    """Symmetric matrix M with lemma10_gap = w^T M w (batched over W)."""
    W = np.asarray(W, dtype=float)
    n = W.shape[-1]
    e = elementary(W)
    s2 = deleted_elementary(W)[..., 1]
    M = K * s2[..., :, None] * s2[..., None, :] - (np.ones((n, n)) - np.eye(n))
    M[..., h, h] -= delta * W[..., h] * s2[..., h] / e[..., 1] ** 2
    D = np.eye(n)
    D[h, h] = 0.0
    return M + alpha * D


# ---------------------------------------------------------------------------
# scalar-curvature ledger (P = sum e^kappa)

@dataclass
class ScalarLedgerInput:
    kappa: np.ndarray
    h3: np.ndarray
    K: float = 0.0
    epsilon: float = 0.1
    a: float = 1.0
    u: float = 1.0
    X_frame: np.ndarray = None

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.h3 = np.asarray(self.h3, dtype=float)
        n = self.kappa.shape[-1]
        if self.X_frame is None:
            self.X_frame = np.zeros(n)
        self.X_frame = np.asarray(self.X_frame, dtype=float)
        if self.h3.shape != (n, n):
            raise DomainError("h3 must be n x n")
        if np.any(np.diff(self.kappa) > 0):
            raise DomainError("kappa must be sorted descending")
        if not in_gamma(self.kappa, 2):
            raise DomainError("kappa is not in Gamma_2")
        if np.sum(np.exp(self.kappa - self.kappa.max())) * math.exp(min(self.kappa.max(), 700.0)) <= 1.0:
            raise DomainError("P = sum exp(kappa) must exceed 1")
        if self.K < 0 or self.epsilon <= 0 or self.a <= 0 or self.u <= 0:
            raise DomainError("need K >= 0 and epsilon, a, u > 0")


def _scalar_terms(kappa, y, i, K):
    """Ledger terms divided by e^{kappa_max}, plus log P; batched."""
    top = kappa.max(axis=-1, keepdims=True)
    ex = np.exp(kappa - top)
    Psc = ex.sum(axis=-1)
    logP = top[..., 0] + np.log(Psc)
    s1 = kappa.sum(axis=-1, keepdims=True)
    s2 = s1 - kappa                       # sigma_2^{ll} = sigma_1(kappa | l)
    g = np.sum(s2 * y, axis=-1)
    cross = np.sum(y, axis=-1) ** 2 - np.sum(y ** 2, axis=-1)
    A = ex[..., i] * (K * g ** 2 - cross)
    others = np.ones(kappa.shape[-1], dtype=bool)
    others[i] = False
    B = 2.0 * np.sum((ex * y ** 2)[..., others], axis=-1)
    C = s2[..., i] * np.sum(ex * y ** 2, axis=-1)
    dd = divided_exp(kappa, kappa[..., i:i + 1], top)
    D = 2.0 * np.sum((s2 * dd * y ** 2)[..., others], axis=-1)
    Pi = np.sum(ex * y, axis=-1)
    E = (1.0 / Psc + 1.0 / (Psc * logP)) * s2[..., i] * Pi ** 2
    return Ledger(A, B, C, D, E), Psc, logP, s2, Pi


def scalar_ledger(inp, i):
    """The five terms A_i..E_i for the test function built on P = sum e^kappa."""
    terms, _, _, _, _ = _scalar_terms(inp.kappa, inp.h3[i], i, inp.K)
    factor = math.exp(inp.kappa.max())
    return Ledger(*(float(t) * factor for t in terms))


def _check_lemma12_hyp(kappa, i, kappa_min):
    n = kappa.shape[-1]
    if i == 0:
        raise PreconditionError("index must differ from the largest curvature")
    if np.any(n * kappa[..., i] > kappa[..., 0]):
        raise PreconditionError("need n * kappa_i <= kappa_1")
    if np.any(kappa[..., 0] < kappa_min):
        raise PreconditionError(f"kappa_1 below the threshold {kappa_min}")


def lemma12_terms(kappa, y, i):
    """(gap, scale) of B_i + C_i + D_i - E_i, relative to e^{kappa_1}; batched."""
    t, _, _, _, _ = _scalar_terms(kappa, y, i, 0.0)
    return t.B + t.C + t.D - t.E, t.B + t.C + t.D + t.E


def lemma12_check(inp, i, kappa_min=0.0):
    _check_lemma12_hyp(inp.kappa, i, kappa_min)
    gap, _ = lemma12_terms(inp.kappa, inp.h3[i], i)
    return float(gap) * math.exp(inp.kappa.max())


def lemma13_terms(kappa, y, j):
    t, Psc, logP, s2, Pj = _scalar_terms(kappa, y, j, 0.0)
    n = kappa.shape[-1]
    E = (1.0 / Psc + (2.0 / (n - 1)) / (Psc * logP)) * s2[..., j] * Pj ** 2
    return t.B + t.C + t.D - E, t.B + t.C + t.D + E


def lemma13_check(inp, i, j, kappa_min=0.0):
    """lemma13 combination for index j >= i, under n kappa_i <= kappa_1."""
    n = inp.kappa.shape[-1]
    if j < i:
        raise PreconditionError("need j >= i")
    if n * inp.kappa[i] > inp.kappa[0]:
        raise PreconditionError("need n * kappa_i <= kappa_1")
    if inp.kappa[0] < kappa_min:
        raise PreconditionError(f"kappa_1 below the threshold {kappa_min}")
    gap, _ = lemma13_terms(inp.kappa, inp.h3[j], j)
    return float(gap) * math.exp(inp.kappa.max())


def critical_point_Pj(kappa, j, epsilon, a, u, X_j):
    """P_j forced by the first-order condition of the test function at its maximum.

    Returns the value divided by e^{kappa_max} (matching ``_scalar_terms``).
    """
    top = kappa.max(axis=-1)
    Psc = np.exp(kappa - top[..., None]).sum(axis=-1)
    logP = top + np.log(Psc)
    return Psc * logP * ((1.0 + epsilon) * kappa[..., j] * X_j / u - a * X_j)


def critical_X(kappa, y, j, epsilon, a, u):
    """Solve the first-order condition for <X, d_j> given the row of third derivatives."""
    top = kappa.max(axis=-1)
    Psc = np.exp(kappa - top[..., None]).sum(axis=-1)
    logP = top + np.log(Psc)
    Pj = np.sum(np.exp(kappa - top[..., None]) * y, axis=-1)
    coef = Psc * logP * ((1.0 + epsilon) * kappa[..., j] / u - a)
    if np.any(coef == 0):
        raise PreconditionError("first-order condition is degenerate for this (kappa_j, epsilon, a, u)")
    return Pj / coef


def lemma14_terms(kappa, y, j, K, epsilon, u, X_j):
    t, Psc, logP, s2, _ = _scalar_terms(kappa, y, j, K)
    # (A + ... - E)/(P log P) is independent of the e^{kappa_max} normalization
    first = _sum(t) / (Psc * logP)
    second = (1.0 + epsilon) * s2[..., j] * kappa[..., j] ** 2 * X_j ** 2 / u ** 2
    scale = _abs_sum(t) / (Psc * logP) + np.abs(second)
    return first + second, scale


def lemma14_check(inp, j, rtol=1e-8):
    """lemma14 combination for an index with n kappa_j > kappa_1.

    The inequality is a statement at a maximum point of the test function, so the
    first-order condition linking P_j, <X, d_j>, u, epsilon and a must hold; it is
    checked here (relative tolerance ``rtol``) and ``critical_X`` produces
    consistent inputs.
    """
    kappa = inp.kappa
    n = kappa.shape[-1]
    if n * kappa[j] <= kappa[0]:
        raise PreconditionError("need n * kappa_j > kappa_1")
    y = inp.h3[j]
    want = critical_point_Pj(kappa, j, inp.epsilon, inp.a, inp.u, inp.X_frame[j])
    w = np.exp(kappa - kappa.max())
    have = np.sum(w * y)
    # tolerance scaled by the size of the terms, so cancellation to ~0 is accepted
    Psc = w.sum()
    coef = Psc * (kappa.max() + np.log(Psc)) * ((1.0 + inp.epsilon) * kappa[j] / inp.u + abs(inp.a))
    size = coef * abs(inp.X_frame[j]) + np.sum(w * np.abs(y))
    if abs(want - have) > rtol * size:
        raise PreconditionError("first-order condition at the maximum point does not hold")
    gap, _ = lemma14_terms(kappa, y, j, inp.K, inp.epsilon, inp.u, inp.X_frame[j])
    return float(gap)


# ---------------------------------------------------------------------------
# convexity ledger (P = sum kappa^2)

@dataclass
class ConvexLedgerInput:
    kappa: np.ndarray
    h3: np.ndarray
    K: float = 0.0

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.h3 = np.asarray(self.h3, dtype=float)
        n = self.kappa.shape[-1]
        if self.h3.shape not in ((n, n), (n, n, n)):
            raise DomainError("h3 must be n x n (rows) or n x n x n (full tensor)")
        if np.any(self.kappa <= 0):
            raise DomainError("kappa must be strictly positive")
        if np.any(np.diff(self.kappa) > 0):
            raise DomainError("kappa must be sorted descending")
        if self.K < 0:
            raise DomainError("K must be nonnegative")

    def rows(self):
        """Row form: rows[i, l] = h_{lli}."""
        if self.h3.ndim == 2:
            return self.h3
        n = self.kappa.shape[-1]
        idx = np.arange(n)
        return self.h3[idx[None, :], idx[None, :], idx[:, None]]


def _convex_terms(kappa, y, i, k, K, d1=None, d2=None):
    n = kappa.shape[-1]
    if d1 is None:
        d1 = deleted_elementary(kappa)
    if d2 is None:
        d2 = pair_deleted_elementary(kappa)
    P = np.sum(kappa ** 2, axis=-1)
    sk1 = d1[..., k - 1]                  # sigma_k^{jj}
    sk2 = d2[..., k - 2]                  # sigma_k^{pp,qq}
    g = np.sum(sk1 * y, axis=-1)
    quad = np.einsum("...pq,...p,...q->...", sk2, y, y)
    A = kappa[..., i] / P * (K * g ** 2 - quad)
    B = 2.0 * np.sum(kappa / P[..., None] * sk2[..., :, i] * y ** 2, axis=-1)
    others = np.ones(n, dtype=bool)
    others[i] = False
    C = 2.0 * np.sum((sk1 * y ** 2)[..., others], axis=-1) / P
    D = sk1[..., i] * np.sum(y ** 2, axis=-1) / P
    E = 2.0 * sk1[..., i] / P ** 2 * np.sum(kappa * y, axis=-1) ** 2
    return Ledger(A, B, C, D, E)


def convex_ledger(inp, i, k):
    """The five terms A_i..E_i for the test function built on P = sum kappa^2."""
    n = inp.kappa.shape[-1]
    if not (2 <= k <= n):
        raise DomainError("need 2 <= k <= n")
    t = _convex_terms(inp.kappa, inp.rows()[i], i, k, inp.K)
    return Ledger(*(float(v) for v in t))


def convex_quadratic_matrix(kappa, i, k, K):
    """Matrix M (batched) with A_i + B_i + C_i + D_i - E_i = y^T M y for row y."""
    n = kappa.shape[-1]
    d1 = deleted_elementary(kappa)
    d2 = pair_deleted_elementary(kappa)
    P = np.sum(kappa ** 2, axis=-1)[..., None, None]
    sk1 = d1[..., k - 1]
    sk2 = d2[..., k - 2]
    ki = kappa[..., i][..., None, None]
    M = ki / P * (K * sk1[..., :, None] * sk1[..., None, :] - sk2)
    diag = 2.0 * kappa / P[..., 0] * sk2[..., :, i]
    others = np.ones(n)
    others[i] = 0.0
    diag = diag + 2.0 * sk1 * others / P[..., 0] + sk1[..., i:i + 1] / P[..., 0]
    M = M + diag[..., :, None] * np.eye(n)
    M = M - 2.0 * sk1[..., i][..., None, None] / P ** 2 * kappa[..., :, None] * kappa[..., None, :]
    return M


def quartic(x):
    """3x^4 + 2x^2 - 1 = (3x^2 - 1)(x^2 + 1); nonpositive exactly on x^2 <= 1/3."""
    x = np.asarray(x, dtype=float)
    return 3.0 * x ** 4 + 2.0 * x ** 2 - 1.0


def quartic_check(points=10_000, tolerance=1e-12):
    """Sign of the quartic on a uniform grid of [0, 1/sqrt(3)] and its value at the endpoint."""
    from .campaign import CampaignReport

    x = np.linspace(0.0, 1.0 / math.sqrt(3.0), int(points))
    q = quartic(x)
    j = int(np.argmax(q))
    end = float(abs(q[-1]))
    return CampaignReport(lemma="quartic", params={"interval": [0.0, float(x[-1])], "points": int(points)},
                          samples=int(points), min_gap=float(-q[j]), tolerance=tolerance,
                          passed=bool(q[j] <= tolerance and end <= tolerance),
                          argmin={"x": float(x[j])}, extra={"endpoint_abs_value": end})


def lemma17_check(inp, i, k):
    kappa = inp.kappa
    if i == 0:
        raise PreconditionError("index must differ from the largest curvature")
    if math.sqrt(3.0) * kappa[i] > kappa[0] * (1 + 1e-15):
        raise PreconditionError("need sqrt(3) kappa_i <= kappa_1")
    return float(_sum(_convex_terms(kappa, inp.rows()[i], i, k, inp.K)))


def lemma18_check(inp, i, k, lam, delta, delta_prime):
    """Ledger sum for i < lam (0-based) when kappa_lam/kappa_1 >= delta, kappa_{lam+1}/kappa_1 <= delta'.

    ``lam`` counts curvatures: the hypothesis involves the lam-th and (lam+1)-th
    largest entries, i.e. 0-based positions lam-1 and lam.
    """
    kappa = inp.kappa
    if not (1 <= lam <= k - 1):
        raise PreconditionError("need 1 <= lambda <= k - 1")
    if not (0 <= i <= lam - 1):
        raise PreconditionError("index must be among the lambda largest curvatures")
    if kappa[lam - 1] < delta * kappa[0]:
        raise PreconditionError("need kappa_lambda / kappa_1 >= delta")
    if kappa[lam] > delta_prime * kappa[0]:
        raise PreconditionError("need kappa_{lambda+1} / kappa_1 <= delta'")
    return float(_sum(_convex_terms(kappa, inp.rows()[i], i, k, inp.K)))


def default_deltas(k, delta_primes=None):
    """delta_1 = 1/sqrt(3); delta_{i+1} = min(delta_1, delta'_i) from a supplied delta' chain."""
    d1 = 1.0 / math.sqrt(3.0)
    out = [d1]
    for m in range(1, k):
        dp = d1 if delta_primes is None else delta_primes[m - 1]
        out.append(min(d1, dp))
    return out


def corollary19_check(kappa, h3, k, deltas, K):
    """Sum over i of A_i + B_i + C_i + D_i - E_i when some 2 <= i <= k has kappa_i <= delta_i kappa_1.

    With a full n x n x n tensor the mixed terms sigma_k^{pp,qq} h_pql^2 of the
    complete right-hand side are included; with the row form they vanish.
    """
    kappa = np.asarray(kappa, dtype=float)
    inp = ConvexLedgerInput(kappa, h3, K)
    n = kappa.shape[-1]
    if len(deltas) != k:
        raise DomainError("need one delta per index 1..k")
    hits = [m for m in range(1, k) if kappa[m] <= deltas[m] * kappa[0]]
    if not hits:
        raise PreconditionError("no index 2 <= i <= k with kappa_i <= delta_i kappa_1")
    rows = inp.rows()
    total = sum(_sum(_convex_terms(kappa, rows[i], i, k, K)) for i in range(n))
    if inp.h3.ndim == 3:
        total = total + _mixed_terms(kappa, inp.h3, k)
    return float(total)


def _mixed_terms(kappa, T, k):
    """Contributions of third derivatives with three distinct indices to the full sum."""
    n = kappa.shape[-1]
    P = np.sum(kappa ** 2)
    d1 = deleted_elementary(kappa)[..., k - 1]
    d2 = pair_deleted_elementary(kappa)[..., k - 2]
    out = 0.0
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            for l in range(n):
                if l in (p, q):
                    continue
                v = T[p, q, l] ** 2
                out += kappa[l] / P * d2[p, q] * v + d1[l] / P * v
    return out


def polarized_matrix(gap_fn, batch, n):
    """Symmetric M (batch, n, n) with gap_fn(y) = y^T M y, recovered by polarization.

    ``gap_fn`` maps rows y of shape (batch, n) to gaps of shape (batch,) and must be
    a quadratic form in y for every batch member.
    """
    eye = np.eye(n)
    diag = np.stack([gap_fn(np.broadcast_to(eye[a], (batch, n))) for a in range(n)], axis=-1)
    M = np.zeros((batch, n, n))
    M[:, np.arange(n), np.arange(n)] = diag
    for a in range(n):
        for b in range(a + 1, n):
            v = gap_fn(np.broadcast_to(eye[a] + eye[b], (batch, n)))
            M[:, a, b] = M[:, b, a] = 0.5 * (v - diag[:, a] - diag[:, b])
    return M


def worst_direction(M):
    """Unit eigenvector for the smallest eigenvalue of each matrix in the batch."""
    _, vecs = np.linalg.eigh(M)
    return vecs[..., :, 0]


# ---------------------------------------------------------------------------
# campaigns
#
# Every campaign evaluates each sampled configuration twice: once with a random
# row of third derivatives and once with the eigenvector of the smallest
# eigenvalue of the quadratic form (the worst direction).  The normalized gap is
# gap / (sum of absolute values of the terms).

INV_SQRT3 = 1.0 / math.sqrt(3.0)


def _fill(rng, count, draw, max_rounds=2000):
    """Concatenate accepted draws until ``count`` rows are available."""
    parts = []
    have = 0
    for _ in range(max_rounds):
        batch = draw(rng, max(64, 2 * (count - have)))
        if len(batch):
            parts.append(batch)
            have += len(batch)
        if have >= count:
            return np.concatenate(parts)[:count]
    raise RuntimeError("sampler acceptance rate too low for the configured family")


def _loguniform(rng, lo, hi, size):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _worst_of(gaps, scales, current, arg, candidate):
    r = gaps / np.maximum(scales, 1e-300)
    better = r < current
    return np.where(better, r, current), np.where(better, candidate, arg)


# lemma10 -------------------------------------------------------------------

def sample_lemma10_family(rng, count, n, sigma1_max=100.0, sigma2_min=1.0):
    """Gamma_2 points with sigma_2 >= sigma2_min and sigma_1 <= sigma1_max."""
    from .symfunc import sample_gamma

    def draw(rng, m):
        W = sample_gamma(n, 2, rng, size=m)
        e = elementary(W)
        s_lo = np.sqrt(sigma2_min / e[:, 2])
        s_hi = sigma1_max / e[:, 1]
        ok = s_lo <= s_hi
        W, s_lo, s_hi = W[ok], s_lo[ok], s_hi[ok]
        s = np.exp(rng.uniform(np.log(s_lo), np.log(s_hi)))
        pin = rng.uniform(size=len(W)) < 0.1
        s = np.where(pin, s_lo, s)
        return W * s[:, None]

    return _fill(rng, count, draw)


def campaign_lemma10(constants, samples, seed, n_values=(2, 3, 4, 5, 6), sigma1_max=100.0,
                     sigma2_min=1.0, threads=1, tolerance=0.0):
    from .campaign import merge_reports, run_campaign

    K, alpha, delta = constants
    reports = []
    per = max(1, samples // len(n_values))
    for n in n_values:
        def evaluate(rng, count, n=n):
            W = sample_lemma10_family(rng, count, n, sigma1_max, sigma2_min)
            w_rand = rng.standard_normal((count, n))
            worst = np.full(count, np.inf)
            w_arg = np.zeros((count, n))
            h_arg = np.zeros(count, dtype=int)
            for h in range(n):
                w_adv = worst_direction(lemma10_matrix(W, h, K, alpha, delta))
                for w in (w_rand, w_adv):
                    terms = _lemma10_terms(W, w, h, K, alpha, delta)
                    r = sum(terms) / np.maximum(sum(np.abs(t) for t in terms), 1e-300)
                    better = r < worst
                    worst = np.where(better, r, worst)
                    w_arg = np.where(better[:, None], w, w_arg)
                    h_arg = np.where(better, h, h_arg)
            return worst, {"W": W, "w": w_arg, "h": h_arg}
        reports.append(run_campaign("lemma10", evaluate, per, (seed, 10, n), tolerance,
                                    params={"n": n}, threads=threads,
                                    constants={"K": K, "alpha": alpha, "delta": delta}))
    return merge_reports("lemma10", reports,
                         params={"n_values": list(n_values), "sigma1_max": sigma1_max,
                                 "sigma2_min": sigma2_min},
                         constants={"K": K, "alpha": alpha, "delta": delta})


# scalar ledger (lemma12-14) -------------------------------------------------

def _gamma2_mask(kappa):
    e = elementary(kappa)
    return (e[:, 1] > 0) & (e[:, 2] > 0)


def sample_scalar_family(rng, count, n, kind, index, kappa1_min, kappa1_max=1e3, sigma2_min=None):
    """Sorted Gamma_2 spectra with kappa_1 in [kappa1_min, kappa1_max].

    kind='small': positions >= index satisfy n kappa <= kappa_1;
    kind='large': positions <= index satisfy n kappa > kappa_1.
    """
    def draw(rng, m):
        k1 = _loguniform(rng, kappa1_min, kappa1_max, m)
        k1[rng.uniform(size=m) < 0.1] = kappa1_min
        neg = rng.uniform(0, 1, (m, 1))
        rest = k1[:, None] * rng.uniform(-1, 1, (m, n - 1)) * np.where(
            rng.uniform(size=(m, n - 1)) < 0.5, 1.0, neg)
        rest = np.minimum(rest, k1[:, None])
        if kind == "small":
            seg = slice(index - 1, n - 1)
            rest[:, seg] = np.minimum(rest[:, seg], k1[:, None] / n)
        else:
            seg = slice(0, index)
            lo = k1[:, None] / n
            rest[:, seg] = lo + (k1[:, None] - lo) * rng.uniform(1e-9, 1, (m, index))
        rest = -np.sort(-rest, axis=1)
        kappa = np.concatenate([k1[:, None], rest], axis=1)
        ok = _gamma2_mask(kappa)
        if kind == "small":
            ok &= n * kappa[:, index] <= kappa[:, 0]
        else:
            ok &= n * kappa[:, index] > kappa[:, 0]
        if sigma2_min is not None:
            ok &= elementary(kappa)[:, 2] >= sigma2_min
        return kappa[ok]

    return _fill(rng, count, draw)


def _scalar_row_campaign(name, gap_fn, sampler, samples, seed, tolerance, params, constants, threads):
    from .campaign import run_campaign

    def evaluate(rng, count):
        kappa, extra = sampler(rng, count)
        n = kappa.shape[-1]
        y_rand = rng.standard_normal((count, n))
        M = polarized_matrix(lambda y: gap_fn(kappa, y, extra)[0], count, n)
        y_adv = worst_direction(M)
        worst = np.full(count, np.inf)
        y_arg = np.zeros((count, n))
        for y in (y_rand, y_adv):
            g, s = gap_fn(kappa, y, extra)
            r = g / np.maximum(s, 1e-300)
            better = r < worst
            worst = np.where(better, r, worst)
            y_arg = np.where(better[:, None], y, y_arg)
        inputs = {"kappa": kappa, "h3_row": y_arg}
        inputs.update({k: v for k, v in extra.items() if np.ndim(v) >= 1})
        return worst, inputs

    return run_campaign(name, evaluate, samples, seed, tolerance, params=params,
                        constants=constants, threads=threads)


def campaign_lemma12(constants, samples, seed, n_values=(2, 3, 4, 5, 6), kappa1_max=1e3,
                     threads=1, tolerance=1e-9, which=12):
    """lemma12 campaign (lemma13 with which=13); constants = (kappa1_min,)."""
    from .campaign import merge_reports

    (kappa1_min,) = constants
    subs = [(n, i) for n in n_values for i in range(1, n)]
    per = max(1, samples // len(subs))
    reports = []
    for n, i in subs:
        if which == 12:
            def sampler(rng, count, n=n, i=i):
                return sample_scalar_family(rng, count, n, "small", i, kappa1_min, kappa1_max), {}

            def gap_fn(kappa, y, extra, i=i):
                return lemma12_terms(kappa, y, i)
        else:
            def sampler(rng, count, n=n, i=i):
                kappa = sample_scalar_family(rng, count, n, "small", i, kappa1_min, kappa1_max)
                j = rng.integers(i, n, count)
                return kappa, {"j": j}

            def gap_fn(kappa, y, extra, n=n):
                j = extra["j"]
                g = np.empty(len(kappa))
                s = np.empty(len(kappa))
                for jj in np.unique(j):
                    sel = j == jj
                    g[sel], s[sel] = lemma13_terms(kappa[sel], y[sel], int(jj))
                return g, s
        reports.append(_scalar_row_campaign(f"lemma{which}", gap_fn, sampler, per, (seed, which, n, i),
                                            tolerance, {"n": n, "i": i}, {"kappa1_min": kappa1_min},
                                            threads))
    return merge_reports(f"lemma{which}", reports,
                         params={"n_values": list(n_values), "kappa1_max": kappa1_max},
                         constants={"kappa1_min": kappa1_min})


def campaign_lemma13(constants, samples, seed, **kw):
    return campaign_lemma12(constants, samples, seed, which=13, **kw)


def campaign_lemma14(constants, samples, seed, n_values=(2, 3, 4, 5, 6), kappa1_min=1.0,
                     kappa1_max=1e3, sigma2_min=1.0, a=1.0, u_range=(0.5, 2.0), threads=1,
                     tolerance=1e-9):
    """constants = (K, epsilon); <X, d_j> is fixed by the first-order condition."""
    from .campaign import merge_reports

    K, epsilon = constants
    subs = [(n, j) for n in n_values for j in range(n)]
    per = max(1, samples // len(subs))
    reports = []
    for n, j in subs:
        def sampler(rng, count, n=n, j=j):
            def draw(rng, m):
                kappa = sample_scalar_family(rng, m, n, "large", j, kappa1_min, kappa1_max, sigma2_min)
                u = rng.uniform(u_range[0], u_range[1], m)
                ok = np.abs((1.0 + epsilon) * kappa[:, j] / u - a) > 1e-8
                return np.concatenate([kappa, u[:, None]], axis=1)[ok]
            both = _fill(rng, count, draw)
            return both[:, :n], {"u": both[:, n]}

        def gap_fn(kappa, y, extra, j=j):
            u = extra["u"]
            X = critical_X(kappa, y, j, epsilon, a, u)
            return lemma14_terms(kappa, y, j, K, epsilon, u, X)

        reports.append(_scalar_row_campaign("lemma14", gap_fn, sampler, per, (seed, 14, n, j), tolerance,
                                            {"n": n, "j": j}, {"K": K, "epsilon": epsilon}, threads))
    return merge_reports("lemma14", reports,
                         params={"n_values": list(n_values), "kappa1_min": kappa1_min,
                                 "kappa1_max": kappa1_max, "sigma2_min": sigma2_min, "a": a,
                                 "u_range": list(u_range)},
                         constants={"K": K, "epsilon": epsilon})


# convexity ledger (lemma17, lemma18, corollary19) ----------------------------

def _normalize_sigma_k(rng, kappa, k, f_range, kappa1_max):
    sk = elementary(kappa)[:, k]
    target = _loguniform(rng, f_range[0], f_range[1], len(kappa))
    out = kappa * (target / sk)[:, None] ** (1.0 / k)
    return out[(out[:, 0] <= kappa1_max) & np.all(out > 0, axis=1)]


def sample_lemma17_family(rng, count, n, k, i, f_range=(1.0, 10.0), kappa1_max=1e3):
    def draw(rng, m):
        kappa = np.ones((m, n))
        kappa[:, 1:] = rng.uniform(0, 1, (m, n - 1))
        cap = INV_SQRT3 * np.where(rng.uniform(size=m) < 0.2, 1.0, rng.uniform(0, 1, m))
        kappa[:, i:] = np.minimum(kappa[:, i:], cap[:, None])
        kappa[:, i] = np.where(rng.uniform(size=m) < 0.1, INV_SQRT3, kappa[:, i])
        kappa = np.maximum(kappa, 1e-6)
        kappa[:, 1:] = -np.sort(-kappa[:, 1:], axis=1)
        return _normalize_sigma_k(rng, kappa, k, f_range, kappa1_max)
    return _fill(rng, count, draw)


def sample_lemma18_family(rng, count, n, k, lam, delta, delta_prime, f_range=(1.0, 10.0), kappa1_max=1e3):
    def draw(rng, m):
        kappa = np.ones((m, n))
        kappa[:, 1:lam] = rng.uniform(delta, 1, (m, lam - 1))
        kappa[:, lam:] = rng.uniform(0, delta_prime, (m, n - lam)) * rng.uniform(0, 1, (m, 1)) ** 0.5
        pin = rng.uniform(size=m)
        if lam >= 2:
            kappa[pin < 0.25, lam - 1] = delta
        kappa[(pin >= 0.25) & (pin < 0.5), lam] = delta_prime
        kappa = np.maximum(kappa, 1e-6)
        kappa[:, 1:] = -np.sort(-kappa[:, 1:], axis=1)
        ok = (kappa[:, lam - 1] >= delta) & (kappa[:, lam] <= delta_prime)
        return _normalize_sigma_k(rng, kappa[ok], k, f_range, kappa1_max)
    return _fill(rng, count, draw)


def sample_corollary19_family(rng, count, n, k, deltas, f_range=(1.0, 10.0), kappa1_max=1e3):
    """Positive spectra with some 2 <= i <= k (1-based) such that kappa_i <= delta_i kappa_1."""
    def draw(rng, m):
        kappa = np.ones((m, n))
        kappa[:, 1:] = rng.uniform(0, 1, (m, n - 1)) ** rng.uniform(0.2, 3.0, (m, 1))
        hit = rng.integers(1, k, m)
        d = np.asarray(deltas)[hit]
        for pos in range(1, n):
            sel = pos >= hit
            kappa[sel, pos] = np.minimum(kappa[sel, pos], d[sel] * rng.uniform(0, 1, sel.sum()) ** 0.3)
        kappa = np.maximum(kappa, 1e-6)
        kappa[:, 1:] = -np.sort(-kappa[:, 1:], axis=1)
        return _normalize_sigma_k(rng, kappa, k, f_range, kappa1_max)
    return _fill(rng, count, draw)


def _convex_rows_eval(kappa, k, K, rows, rng):
    """Worst normalized gap over the listed row indices, random and adversarial directions."""
    count, n = kappa.shape
    d1 = deleted_elementary(kappa)
    d2 = pair_deleted_elementary(kappa)
    worst = np.full(count, np.inf)
    y_arg = np.zeros((count, n))
    i_arg = np.zeros(count, dtype=int)
    y_rand = rng.standard_normal((count, n))
    for i in rows:
        y_adv = worst_direction(convex_quadratic_matrix(kappa, i, k, K))
        for y in (y_rand, y_adv):
            t = _convex_terms(kappa, y, i, k, K, d1, d2)
            r = _sum(t) / np.maximum(_abs_sum(t), 1e-300)
            better = r < worst
            worst = np.where(better, r, worst)
            y_arg = np.where(better[:, None], y, y_arg)
            i_arg = np.where(better, i, i_arg)
    return worst, y_arg, i_arg


def campaign_lemma17(constants, samples, seed, n_values=(2, 3, 4, 5, 6), f_range=(1.0, 10.0),
                     kappa1_max=1e3, threads=1, tolerance=1e-9):
    from .campaign import merge_reports, run_campaign

    (K,) = constants
    subs = [(n, k, i) for n in n_values for k in range(2, n + 1) for i in range(1, n)]
    per = max(1, samples // len(subs))
    reports = []
    for n, k, i in subs:
        def evaluate(rng, count, n=n, k=k, i=i):
            kappa = sample_lemma17_family(rng, count, n, k, i, f_range, kappa1_max)
            worst, y, _ = _convex_rows_eval(kappa, k, K, [i], rng)
            return worst, {"kappa": kappa, "h3_row": y}
        reports.append(run_campaign("lemma17", evaluate, per, (seed, 17, n, k, i), tolerance,
                                    params={"n": n, "k": k, "i": i}, constants={"K": K}, threads=threads))
    return merge_reports("lemma17", reports,
                         params={"n_values": list(n_values), "f_range": list(f_range), "kappa1_max": kappa1_max},
                         constants={"K": K})


def campaign_lemma18_single(constants, samples, seed, n, k, lam, delta, f_range=(1.0, 10.0),
                            kappa1_max=1e3, threads=1, tolerance=1e-9):
    """One (n, k, lambda, delta) configuration; constants = (delta_prime, K)."""
    from .campaign import run_campaign

    delta_prime, K = constants

    def evaluate(rng, count):
        kappa = sample_lemma18_family(rng, count, n, k, lam, delta, delta_prime, f_range, kappa1_max)
        worst, y, i = _convex_rows_eval(kappa, k, K, range(lam), rng)
        return worst, {"kappa": kappa, "h3_row": y, "i": i}

    key = (seed, 18, n, k, lam, int(round(delta * 1e6)))
    return run_campaign("lemma18", evaluate, samples, key, tolerance,
                        params={"n": n, "k": k, "lambda": lam, "delta": delta},
                        constants={"delta_prime": delta_prime, "K": K}, threads=threads)


def campaign_corollary19_single(constants, samples, seed, n, k, deltas, f_range=(1.0, 10.0),
                                kappa1_max=1e3, threads=1, tolerance=1e-9):
    """Sum over all rows for one (n, k); constants = (K,)."""
    from .campaign import run_campaign

    (K,) = constants

    def evaluate(rng, count):
        kappa = sample_corollary19_family(rng, count, n, k, deltas, f_range, kappa1_max)
        d1 = deleted_elementary(kappa)
        d2 = pair_deleted_elementary(kappa)
        # random rows for every index, summed
        Y = rng.standard_normal((count, n, n))
        total = np.zeros(count)
        scale = np.zeros(count)
        for i in range(n):
            t = _convex_terms(kappa, Y[:, i], i, k, K, d1, d2)
            total += _sum(t)
            scale += _abs_sum(t)
        worst = total / np.maximum(scale, 1e-300)
        h3 = Y.copy()
        # adversarial: the single worst row direction, other rows zero
        for i in range(n):
            y = worst_direction(convex_quadratic_matrix(kappa, i, k, K))
            t = _convex_terms(kappa, y, i, k, K, d1, d2)
            r = _sum(t) / np.maximum(_abs_sum(t), 1e-300)
            better = r < worst
            worst = np.where(better, r, worst)
            adv = np.zeros((count, n, n))
            adv[:, i] = y
            h3 = np.where(better[:, None, None], adv, h3)
        return worst, {"kappa": kappa, "h3_rows": h3}

    return run_campaign("corollary19", evaluate, samples, (seed, 19, n, k), tolerance,
                        params={"n": n, "k": k, "deltas": list(deltas)}, constants={"K": K},
                        threads=threads)


# ---------------------------------------------------------------------------
# constant search

@dataclass
class SearchResult:
    lemma: str
    constants: tuple
    min_gap: float
    passed: bool
    tried: list = field(default_factory=list)
    report: object = None

    def to_dict(self):
        out = {"lemma": self.lemma, "constants": list(self.constants), "min_gap": self.min_gap,
               "passed": self.passed, "tried": [[list(c), g] for c, g in self.tried]}
        if self.report is not None:
            out["report"] = self.report.to_dict()
        return out


def _lemma7_runner(constants, samples, seed, **kw):
    from .symfunc import campaign_lemma7
    return campaign_lemma7(seed, samples=samples, **kw)


CAMPAIGNS = {
    "lemma7": _lemma7_runner,
    "lemma10": campaign_lemma10,
    "lemma12": campaign_lemma12,
    "lemma13": campaign_lemma13,
    "lemma14": campaign_lemma14,
    "lemma17": campaign_lemma17,
}

POW10 = (1.0, 10.0, 100.0, 1000.0)
DEFAULT_GRIDS = {
    "lemma7": [()],
    "lemma10": [(K, a, d) for K in POW10 for a in (1.0, 10.0, 100.0) for d in (1.0, 0.1, 0.01)],
    "lemma12": [(1.0,), (10.0,), (100.0,)],
    "lemma13": [(1.0,), (10.0,), (100.0,)],
    "lemma14": [(K, e) for K in POW10 for e in (0.1, 0.01, 0.001)],
    "lemma17": [(K,) for K in POW10],
    "lemma18": [(dp, K) for dp in (INV_SQRT3, 0.1, 0.01, 1e-3, 1e-4) for K in POW10],
    "corollary19": [(K,) for K in POW10],
}


def constant_search(lemma, sample_budget, grid, seed, runner=None, **options):
    """Scan ``grid`` in order; return the first tuple whose campaign passes.

    If none passes, the tuple with the largest minimum gap is returned with
    ``passed=False``.  ``runner`` overrides the registered campaign for
    ``lemma`` (used for the per-configuration lemma18 and corollary19 runs).
    """
    grid = [tuple(g) for g in grid]
    if not grid:
        raise DomainError("constant grid is empty")
    run = runner or CAMPAIGNS.get(lemma)
    if run is None:
        raise DomainError(f"unknown lemma id {lemma!r}")
    tried = []
    best = None
    for const in grid:
        rep = run(const, sample_budget, seed, **options)
        tried.append((const, rep.min_gap))
        if rep.passed:
            return SearchResult(lemma, const, rep.min_gap, True, tried, rep)
        if best is None or rep.min_gap > best[1].min_gap:
            best = (const, rep)
    return SearchResult(lemma, best[0], best[1].min_gap, False, tried, best[1])


def search_lemma18(sample_budget, seed, n_values=(3, 4, 5), deltas=(1.0, 0.5, 0.1), grid=None, **options):
    """Empirical delta'(delta) for every (n, k, lambda, delta); budget split evenly."""
    from .campaign import merge_reports

    grid = grid or DEFAULT_GRIDS["lemma18"]
    subs = [(n, k, lam, d) for n in n_values for k in range(2, n + 1) for lam in range(1, k) for d in deltas]
    per = max(1, sample_budget // len(subs))
    table = []
    reports = []
    for n, k, lam, d in subs:
        res = constant_search("lemma18", per, grid, seed,
                              runner=lambda c, s, sd, n=n, k=k, lam=lam, d=d: campaign_lemma18_single(
                                  c, s, sd, n, k, lam, d, **options))
        table.append({"n": n, "k": k, "lambda": lam, "delta": d, "delta_prime": res.constants[0],
                      "K": res.constants[1], "min_gap": res.min_gap, "passed": res.passed})
        reports.append(res.report)
    out = merge_reports("lemma18", reports, params={"n_values": list(n_values), "deltas": list(deltas),
                                                    "samples_per_config": per})
    out.extra["delta_prime_table"] = table
    return out


def delta_chain(n, k, sample_budget, seed, grid=None, **options):
    """delta_1 = 1/sqrt(3); delta_{i+1} = min(delta_1, delta'(lambda=i, delta=delta_i))."""
    grid = grid or DEFAULT_GRIDS["lemma18"]
    deltas = [INV_SQRT3]
    for lam in range(1, k):
        res = constant_search("lemma18", sample_budget, grid, seed,
                              runner=lambda c, s, sd, lam=lam: campaign_lemma18_single(
                                  c, s, sd, n, k, lam, deltas[-1], **options))
        if not res.passed:
            raise PreconditionError(f"no delta' found for lambda={lam}, delta={deltas[-1]}")
        deltas.append(min(INV_SQRT3, res.constants[0]))
    return deltas


def search_corollary19(sample_budget, seed, n_values=(3, 4, 5), grid=None, chain_budget=None, **options):
    """Build the delta chain per (n, k) from lemma18 searches, then search K for the full sum."""
    from .campaign import merge_reports

    grid = grid or DEFAULT_GRIDS["corollary19"]
    subs = [(n, k) for n in n_values for k in range(2, n + 1)]
    per = max(1, sample_budget // len(subs))
    chain_budget = chain_budget or max(1, per // 4)
    reports = []
    chains = []
    for n, k in subs:
        deltas = delta_chain(n, k, chain_budget, seed, **options)
        res = constant_search("corollary19", per, grid, seed,
                              runner=lambda c, s, sd, n=n, k=k, deltas=deltas: campaign_corollary19_single(
                                  c, s, sd, n, k, deltas, **options))
        chains.append({"n": n, "k": k, "deltas": deltas, "K": res.constants[0], "min_gap": res.min_gap,
                       "passed": res.passed})
        reports.append(res.report)
    out = merge_reports("corollary19", reports, params={"n_values": list(n_values), "samples_per_config": per})
    out.extra["delta_chains"] = chains
    return out
