"""Adjustment indices (NFI, CFI, RFI, TLI, RMSEA, chi2/df) and their verdict bands."""
import math
from dataclasses import asdict, dataclass, field

from .stats import chi2_sf, noncentral_chi2_sf

CLOSE_FIT_RMSEA = 0.05
CLOSE_FIT_ALPHA = 0.05

# (lower edge, verdict), closed on the left, highest first
INCREMENTAL_BANDS = ((0.95, "very_good"), (0.90, "good"), (0.80, "suffering"))
# (upper edge, verdict), closed on the right, lowest first
RATIO_BANDS = ((1.0, "very_good"), (2.0, "good"), (5.0, "suffering"))
RMSEA_BANDS = ((0.05, "very_good"), (0.08, "good"), (0.10, "mediocre"))


def _incremental(value):
    if value is None:
        return None
    for edge, verdict in INCREMENTAL_BANDS:
        if value >= edge:
            return verdict
    return "bad"


def _upper_banded(value, bands, worst):
    if value is None:
        return None
    for edge, verdict in bands:
        if value <= edge:
            return verdict
    return worst


@dataclass(frozen=True)
class FitSummary:
    chisq_prop: float
    df_prop: int
    chisq_null: float
    df_null: int
    n: int
    p_value: float
    chisq_df_ratio: float
    nfi: float
    cfi: float
    rfi: float
    tli: float
    rmsea: float
    rmsea_close_p: float
    srmr: float = None
    verdicts: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def compute_indices(chisq_prop, df_prop, chisq_null, df_null, n, srmr=None):
    """All adjustment indices for a proposed model against its baseline.

    Indices undefined for the inputs (saturated model, zero baseline
    chi-square) come back as ``None``.
    """
    if df_prop < 0 or df_null <= 0 or chisq_prop < 0 or chisq_null < 0 or n <= 1:
        raise ValueError("need df_prop >= 0, df_null > 0, chi-squares >= 0, n > 1")
    saturated = df_prop == 0
    null_ratio = chisq_null / df_null
    prop_ratio = None if saturated else chisq_prop / df_prop

    nfi = None if chisq_null == 0 else min(1.0, max(0.0, 1.0 - chisq_prop / chisq_null))

    num = max(chisq_prop - df_prop, 0.0)
    den = max(chisq_null - df_null, 0.0)
    if den == 0.0:
        cfi = 1.0 if num == 0.0 else 0.0
    else:
        cfi = min(1.0, max(0.0, 1.0 - num / den))

    rfi = None if saturated or null_ratio == 0 else 1.0 - prop_ratio / null_ratio
    tli = None if saturated or null_ratio == 1.0 else (null_ratio - prop_ratio) / (null_ratio - 1.0)

    if saturated:
        rmsea = close_p = p_value = None
    else:
        rmsea = math.sqrt(max((chisq_prop - df_prop) / (df_prop * (n - 1)), 0.0))
        close_p = noncentral_chi2_sf(chisq_prop, df_prop, CLOSE_FIT_RMSEA ** 2 * df_prop * (n - 1))
        p_value = chi2_sf(chisq_prop, df_prop)

    summary = FitSummary(
        chisq_prop=chisq_prop, df_prop=df_prop, chisq_null=chisq_null, df_null=df_null,
        n=n, p_value=p_value, chisq_df_ratio=prop_ratio, nfi=nfi, cfi=cfi, rfi=rfi,
        tli=tli, rmsea=rmsea, rmsea_close_p=close_p, srmr=srmr,
    )
    return _with_verdicts(summary)


def classify(summary):
    """Verdict per index. RFI has no bands and is omitted."""
    close = summary.rmsea_close_p
    return {
        "chisq_df": _upper_banded(summary.chisq_df_ratio, RATIO_BANDS, "bad"),
        "nfi": _incremental(summary.nfi),
        "cfi": _incremental(summary.cfi),
        "tli": _incremental(summary.tli),
        "rmsea": _upper_banded(summary.rmsea, RMSEA_BANDS, "unacceptable"),
        "rmsea_close_fit": None if close is None else close >= CLOSE_FIT_ALPHA,
    }


def _with_verdicts(summary):
    object.__setattr__(summary, "verdicts", classify(summary))
    return summary
