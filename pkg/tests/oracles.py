"""Independent reference computations used by the test suite."""
import numpy as np


def char_poly(a):
    """Coefficients of det(lambda I - A), highest degree first (Faddeev-LeVerrier)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    c = 1.0
    for k in range(1, n + 1):
        m = a @ m + c * np.eye(n)
        c = -np.trace(a @ m) / k
        coeffs.append(c)
    return np.array(coeffs)


def _horner(coeffs, x):
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _derivative(coeffs):
    deg = len(coeffs) - 1
    return np.array([c * (deg - i) for i, c in enumerate(coeffs[:-1])])


def largest_real_root(coeffs, bound):
    """Largest root of a polynomial with only real roots and positive leading term.

    Above the largest root of p' the polynomial p is increasing, so bisection
    on [root(p'), bound] is bracketed.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if len(coeffs) == 2:
        return -coeffs[1] / coeffs[0]
    lo = largest_real_root(_derivative(coeffs), bound)
    hi = bound
    if _horner(coeffs, lo) >= 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _horner(coeffs, mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def max_eigenvalue_bisection(a):
    a = np.asarray(a, dtype=float)
    bound = float(np.max(np.sum(np.abs(a), axis=1))) + 1.0  # Gershgorin
    return largest_real_root(char_poly(a), bound)
