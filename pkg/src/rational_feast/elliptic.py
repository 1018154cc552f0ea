"""Complete elliptic integral K and the Jacobi functions sn, cn, dn.

All routines use the *modulus* convention: ``K(kappa)`` integrates
``1/sqrt((1-t^2)(1-kappa^2 t^2))``, so ``kappa = 0.5`` here corresponds to
the parameter ``m = 0.25`` used by scipy and Matlab.

Moduli very close to one are better described by the complementary modulus
``kappa' = sqrt(1 - kappa^2)``.  Every public function accepts either
``kappa`` or the keyword ``kappa_prime``; passing ``kappa_prime`` directly
avoids the cancellation in ``1 - kappa`` when, e.g., ``kappa' = 1e-6``.
"""

import math

from .errors import DomainError

_EPS = 2.220446049250313e-16
_MAX_AGM_STEPS = 64


def _moduli(kappa, kappa_prime):
    """Return ``(kappa, kappa_prime)`` after validating whichever was given."""
    if (kappa is None) == (kappa_prime is None):
        raise TypeError("pass exactly one of kappa or kappa_prime")
    if kappa_prime is None:
        kappa = float(kappa)
        if not 0.0 <= kappa < 1.0:
            raise DomainError(f"modulus must lie in [0, 1), got {kappa!r}")
        return kappa, math.sqrt((1.0 - kappa) * (1.0 + kappa))
    kappa_prime = float(kappa_prime)
    if not 0.0 < kappa_prime <= 1.0:
        raise DomainError(
            f"complementary modulus must lie in (0, 1], got {kappa_prime!r}")
    return math.sqrt((1.0 - kappa_prime) * (1.0 + kappa_prime)), kappa_prime


def agm(a, b):
    """Arithmetic-geometric mean of two non-negative numbers."""
    a, b = float(a), float(b)
    if a < 0 or b < 0:
        raise DomainError("agm is defined for non-negative arguments")
    for _ in range(_MAX_AGM_STEPS):
        if abs(a - b) <= _EPS * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_elliptic_K(kappa=None, *, kappa_prime=None):
    """Complete elliptic integral of the first kind, ``K(kappa)``.

    Computed as ``pi / (2 agm(1, kappa'))``.

    >>> abs(complete_elliptic_K(0.0) - math.pi / 2) < 1e-16
    True
    """
    _, kp = _moduli(kappa, kappa_prime)
    return math.pi / (2.0 * agm(1.0, kp))


def _landen(u, k, kp):
    # descending Landen / AGM; accurate when u is well inside [0, K/2]
    a_seq = [1.0]
    c_seq = [k]
    a, b = 1.0, kp
    for _ in range(_MAX_AGM_STEPS):
        if abs(c_seq[-1]) <= _EPS * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)

    n = len(a_seq) - 1
    phi = math.ldexp(a_seq[n] * u, n)
    for i in range(n, 0, -1):
        phi = 0.5 * (phi + math.asin(c_seq[i] * math.sin(phi) / a_seq[i]))

    sn = math.sin(phi)
    cn = math.cos(phi)
    # dn > 0 for real u; this form keeps full accuracy when kappa -> 1
    dn = math.sqrt(cn * cn + (kp * sn) ** 2)
    return sn, cn, dn


def sncndn_at_fraction(f, kappa_prime, complement=None):
    """Return ``(sn, cn, dn)`` at ``u = f * K`` for ``0 <= f <= 1``.

    Near the quarter period ``cn`` and ``dn`` are tiny when ``kappa'`` is, so
    the argument is reflected about ``K`` and ``K/2`` with the addition
    theorems, whose terms then all have the same sign.  ``complement`` may
    carry ``1 - f`` computed without rounding by the caller.
    """
    kp = float(kappa_prime)
    k = math.sqrt((1.0 - kp) * (1.0 + kp))
    f = float(f)
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"fraction of K must lie in [0, 1], got {f!r}")
    K = complete_elliptic_K(kappa_prime=kp)
    if k == 0.0:
        return math.sin(f * K), math.cos(f * K), 1.0
    if f > 0.5:
        g = 1.0 - f if complement is None else float(complement)
        sv, cv, dv = sncndn_at_fraction(g, kp)
        return cv / dv, kp * sv / dv, kp / dv
    if f <= 0.25:
        return _landen(f * K, k, kp)

    # u = K/2 - v with v <= K/4
    sv, cv, dv = _landen((0.5 - f) * K, k, kp)
    sh = 1.0 / math.sqrt(1.0 + kp)
    ch = math.sqrt(kp) * sh
    dh = math.sqrt(kp)
    denom = cv * cv + kp * sv * sv
    sn = (sh * cv * dv - ch * sv * dh) / denom
    cn = (ch * cv + sh * sv * dh * dv) / denom
    dn = (dh * dv + k * k * sh * ch * sv * cv) / denom
    return sn, cn, dn


def jacobi_sncndn(u, kappa=None, *, kappa_prime=None):
    """Return ``(sn, cn, dn)`` of the real argument ``u``.

    Uses the descending Landen (AGM) scheme: the modulus is driven to zero
    along the AGM sequence, where the functions reduce to ``sin`` and ``cos``
    of an amplitude, which is then transported back.  On ``[0, K]`` the
    quarter-period reflections of :func:`sncndn_at_fraction` are applied.
    """
    k, kp = _moduli(kappa, kappa_prime)
    u = float(u)
    if k == 0.0:
        return math.sin(u), math.cos(u), 1.0
    K = complete_elliptic_K(kappa_prime=kp)
    if 0.0 <= u <= K:
        return sncndn_at_fraction(u / K, kp, complement=(K - u) / K)
    return _landen(u, k, kp)


def jacobi_sn(w, kappa=None, *, kappa_prime=None):
    """Jacobi elliptic function ``sn(w; kappa)`` for ``0 <= w <= K(kappa)``.

    ``sn(w; kappa) = x`` inverts ``w = int_0^x dt / sqrt((1-t^2)(1-kappa^2 t^2))``.
    """
    k, kp = _moduli(kappa, kappa_prime)
    K = complete_elliptic_K(kappa_prime=kp)
    w = float(w)
    if not -_EPS * K <= w <= K * (1 + 4 * _EPS):
        raise DomainError(f"argument must lie in [0, K] = [0, {K!r}], got {w!r}")
    w = min(max(w, 0.0), K)
    return sncndn_at_fraction(w / K, kp, complement=(K - w) / K)[0]


def jacobi_sd_inverse(y, kappa=None, *, kappa_prime=None):
    """Solve ``sn(w)/dn(w) = y`` for ``w`` in ``[0, K]``.

    ``sd`` increases monotonically from 0 to ``1/kappa'`` on ``[0, K]``.
    """
    from scipy.optimize import brentq

    k, kp = _moduli(kappa, kappa_prime)
    K = complete_elliptic_K(kappa_prime=kp)
    if not 0.0 <= y < 1.0 / kp:
        raise DomainError(f"sd takes values in [0, 1/kappa') , got {y!r}")
    if y == 0.0:
        return 0.0

    def f(w):
        sn, _, dn = sncndn_at_fraction(w / K, kp, complement=(K - w) / K)
        return sn / dn - y

    return brentq(f, 0.0, K, xtol=4 * _EPS * K, rtol=4 * _EPS, maxiter=200)
