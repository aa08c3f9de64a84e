"""The sharpened Rényi EPI exponent alpha(p) and the functions behind it.

For ``p > 1`` the exponent is ``(1 - sup_λ A(λ)/H(λ))^{-1}`` where ``H`` is
the binary entropy and ``A`` collects the sharp Young constants. The closed
form below evaluates the ratio at ``λ = 1/2``; :func:`ratio_sup` finds the
supremum numerically so the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

LN2 = math.log(2.0)
# Taylor coefficients of the closed-form bracket in e = p - 1
_BRACKET_SERIES = (-1.0 / 4.0, 1.0 / 8.0, -7.0 / 96.0, 3.0 / 64.0, -31.0 / 960.0)
_SERIES_CUTOFF = 1e-4


def holder_conjugate(s: float) -> float:
    """``s'`` with ``1/s + 1/s' = 1``; ``1 <-> inf``."""
    s = float(s)
    if not s >= 1.0:
        raise ValueError(f"Hölder conjugate needs s >= 1, got {s!r}")
    if s == 1.0:
        return math.inf
    if s == math.inf:
        return 1.0
    return s / (s - 1.0)


def young_constant(s: float) -> float:
    """Sharp Young constant ``c_s = s^{1/s} (s')^{-1/s'}``; equals 1 at ``s = 1`` and ``s = inf``."""
    s = float(s)
    if not s >= 1.0:
        raise ValueError(f"Young constant needs s >= 1, got {s!r}")
    if s == 1.0 or s == math.inf:
        return 1.0
    sc = s / (s - 1.0)
    return math.exp(math.log(s) / s - math.log(sc) / sc)


def bernoulli_entropy(lam: float) -> float:
    """Binary entropy in nats, with ``H(0) = H(1) = 0``."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"λ must lie in [0, 1], got {lam!r}")
    return -_xlogx(lam) - _xlogx(1.0 - lam)


def _xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"the exponent is defined for p > 1, got {p!r}")
    return p


def young_exponents(lam: float, p: float) -> tuple[float, float]:
    """The pair ``(q, r)`` with ``λ = p'/q'`` and ``1 - λ = p'/r'``."""
    p = _check_p(p)
    pc = holder_conjugate(p)
    qc = pc / lam if lam > 0 else math.inf
    rc = pc / (1.0 - lam) if lam < 1 else math.inf
    q = 1.0 if qc == math.inf else qc / (qc - 1.0)
    r = 1.0 if rc == math.inf else rc / (rc - 1.0)
    return q, r


def a_function(lam: float, p: float) -> float:
    """``A(λ) = p' [ (1-1/p')log(1-1/p') - (1-λ/p')log(1-λ/p') - (1-(1-λ)/p')log(1-(1-λ)/p') ]``."""
    p = _check_p(p)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"λ must lie in [0, 1], got {lam!r}")
    pc = holder_conjugate(p)
    return pc * (_xlogx(1.0 - 1.0 / pc) - _xlogx(1.0 - lam / pc) - _xlogx(1.0 - (1.0 - lam) / pc))


def a_function_qr(lam: float, p: float) -> float:
    """``A(λ) = p' (log(q)/q + log(r)/r - log(p)/p)`` through the Young exponents.

    This is the sign for which ``p' log(c_p / (c_q c_r)) = H(λ) - A(λ)``; it
    agrees with :func:`a_function`.
    """
    p = _check_p(p)
    q, r = young_exponents(lam, p)
    pc = holder_conjugate(p)
    return pc * (math.log(q) / q + math.log(r) / r - math.log(p) / p)


def proof_derivatives(lam: float, p: float) -> tuple[float, float, float, float]:
    """``(A', H', A'', H'')`` at ``λ`` in (0, 1)."""
    p = _check_p(p)
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError("derivatives of H need λ strictly inside (0, 1)")
    pc = holder_conjugate(p)
    da = math.log((pc - lam) / (pc - (1.0 - lam)))
    dh = math.log((1.0 - lam) / lam)
    d2a = (1.0 - 2.0 * pc) / ((pc - lam) * (pc - (1.0 - lam)))
    d2h = -1.0 / (lam * (1.0 - lam))
    return da, dh, d2a, d2h


def second_derivative_ratio(lam: float, p: float) -> float:
    """``A''/H'' = (2p' - 1) (1 + p'(p'-1)/(λ(1-λ)))^{-1}``."""
    pc = holder_conjugate(_check_p(p))
    return (2.0 * pc - 1.0) / (1.0 + pc * (pc - 1.0) / (lam * (1.0 - lam)))


def ratio(lam: float, p: float) -> float:
    return a_function(lam, p) / bernoulli_entropy(lam)


def ratio_sup(p: float, grid: int = 257, tol: float = 1e-12) -> tuple[float, float]:
    """``sup_{0<λ<1} A(λ)/H(λ)`` and its maximiser.

    A uniform interior grid locates the best cell; golden-section search then
    refines inside the bracket formed by its neighbours.
    """
    p = _check_p(p)
    if grid < 128:
        raise ValueError("grid must have at least 128 points")
    lams = np.arange(1, grid + 1) / (grid + 1.0)
    vals = np.array([ratio(lam, p) for lam in lams])
    k = int(np.argmax(vals))
    lo = lams[max(k - 1, 0)]
    hi = lams[min(k + 1, grid - 1)]
    res = optimize.minimize_scalar(
        lambda lam: -ratio(lam, p), bracket=(lo, lams[k], hi), method="golden", tol=tol
    )
    best, arg = -float(res.fun), float(res.x)
    if vals[k] > best:
        best, arg = float(vals[k]), float(lams[k])
    return best, arg


def _bracket(p: float) -> float:
    e = p - 1.0
    if abs(e) < _SERIES_CUTOFF:
        return sum(c * e ** (k + 1) for k, c in enumerate(_BRACKET_SERIES))
    return (p + 1.0) / (p - 1.0) * math.log((p + 1.0) / (2.0 * p)) + math.log(p) / (p - 1.0)


def _shifted_bracket(p: float) -> float:
    """``log 2 + bracket(p)``, arranged to avoid cancellation.

    With ``e = p - 1`` this equals ``N / e`` where
    ``N = (p+1) log1p(1/p) + log p - 2 log 2``. For ``p < 2`` the same ``N`` is
    written as ``e log 2 + (2+e)(log1p(e/2) - log1p(e)) + log1p(e)``, whose
    leading term dominates as ``e -> 0``.
    """
    e = p - 1.0
    if abs(e) < _SERIES_CUTOFF:
        return LN2 + _bracket(p)
    if p >= 2.0:
        num = (p + 1.0) * math.log1p(1.0 / p) + math.log(p) - 2.0 * LN2
    else:
        num = e * LN2 + (2.0 + e) * (math.log1p(0.5 * e) - math.log1p(e)) + math.log1p(e)
    return num / e


def alpha(p: float, exploratory: bool = False) -> float:
    """Closed-form exponent ``(1 + bracket(p)/log 2)^{-1}``.

    ``exploratory=True`` evaluates the same expression for ``0 < p < 1`` where
    no inequality is claimed.
    """
    p = float(p)
    if exploratory:
        if not p > 0.0 or p == 1.0:
            raise ValueError("exploratory alpha needs p > 0, p != 1")
    else:
        _check_p(p)
    return LN2 / _shifted_bracket(p)


def alpha_opt(p: float, grid: int = 257) -> float:
    sup, _ = ratio_sup(p, grid)
    return 1.0 / (1.0 - sup)


def bm16_exponent(p: float) -> float:
    """The earlier exponent ``(p + 1)/2``."""
    return (_check_p(p) + 1.0) / 2.0


def alpha_lower_bound(p: float) -> float:
    """``(p - 1) / (2 log2((p + 1)/2))``."""
    p = _check_p(p)
    return (p - 1.0) / (2.0 * math.log2((p + 1.0) / 2.0))


@dataclass(frozen=True)
class ExponentContext:
    p: float
    p_conj: float
    lam: float
    q: float
    r: float
    c_p: float
    c_q: float
    c_r: float
    H: float
    A: float
    alpha: float


def exponent_context(p: float, lam: float) -> ExponentContext:
    p = _check_p(p)
    q, r = young_exponents(lam, p)
    return ExponentContext(
        p=p,
        p_conj=holder_conjugate(p),
        lam=float(lam),
        q=q,
        r=r,
        c_p=young_constant(p),
        c_q=young_constant(q),
        c_r=young_constant(r),
        H=bernoulli_entropy(lam),
        A=a_function(lam, p),
        alpha=alpha(p),
    )


@dataclass(frozen=True)
class ExponentReport:
    p: float
    alpha_closed: float
    alpha_opt: float
    bm16: float
    lower_bound: float
    argmax_lambda: float

    @property
    def ordered(self) -> bool:
        return self.lower_bound <= self.alpha_closed < self.bm16

    def as_row(self) -> dict:
        return {
            "p": self.p,
            "alpha": self.alpha_closed,
            "alpha_opt": self.alpha_opt,
            "bm16": self.bm16,
            "lower_bound": self.lower_bound,
            "argmax_lambda": self.argmax_lambda,
        }


def comparison_bounds(p: float, grid: int = 257) -> ExponentReport:
    """Closed-form and optimised exponents next to the earlier upper and lower bounds."""
    p = _check_p(p)
    sup, arg = ratio_sup(p, grid)
    report = ExponentReport(
        p=p,
        alpha_closed=alpha(p),
        alpha_opt=1.0 / (1.0 - sup),
        bm16=bm16_exponent(p),
        lower_bound=alpha_lower_bound(p),
        argmax_lambda=arg,
    )
    if not report.ordered:
        raise ArithmeticError(f"bound ordering fails at p={p!r}: {report}")
    return report
