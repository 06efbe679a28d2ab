"""Distribution tails used by the tests of fit and significance."""
import math

from scipy.special import gammaincc, gammaln

NCX2_TAIL_EPS = 1e-14


def chi2_sf(x, df):
    """Upper tail of the central chi-square distribution."""
    if df <= 0:
        raise ValueError("chi-square needs df > 0")
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def noncentral_chi2_sf(x, df, nc):
    """P[X >= x] for X ~ chi2(df, nc): a Poisson(nc/2) mixture of central tails.

    Terms are summed outward from the Poisson mode until the weight left
    on either side is below ``NCX2_TAIL_EPS``.
    """
    if nc < 0:
        raise ValueError("noncentrality must be >= 0")
    if nc == 0:
        return chi2_sf(x, df)
    if x <= 0:
        return 1.0
    mu = nc / 2.0
    mode = int(math.floor(mu))

    def weight(j):
        return math.exp(-mu + j * math.log(mu) - gammaln(j + 1.0))

    total = weight(mode) * float(gammaincc(df / 2.0 + mode, x / 2.0))
    j = mode + 1
    while True:
        w = weight(j)
        total += w * float(gammaincc(df / 2.0 + j, x / 2.0))
        if w < NCX2_TAIL_EPS and j > mu:
            break
        j += 1
    j = mode - 1
    while j >= 0:
        w = weight(j)
        total += w * float(gammaincc(df / 2.0 + j, x / 2.0))
        if w < NCX2_TAIL_EPS:
            break
        j -= 1
    return min(1.0, max(0.0, total))


def normal_two_sided_p(z):
    """2 * (1 - Phi(|z|))."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def normal_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))
