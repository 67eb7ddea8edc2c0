"""Independent reference implementations used to cross-check the package.

Everything in here is deliberately written against the contracts, not
against the production code: different algorithms, different libraries,
no imports from defacewatch. Tests compare the two paths.
"""

from __future__ import annotations

import math
import re


def naive_keyword_count(text: str, keyword: str, mode: str) -> int:
    """Count keyword occurrences in plain text by brute-force position scan.

    Candidates are every occurrence position (overlapping), found via a
    lookahead regex. Selection is greedy left-to-right: a candidate is
    accepted when it does not overlap the previously accepted match and,
    in word_boundary mode, both neighbours are non-alphanumeric or edges.
    """
    lowered = text.lower()
    kw = keyword.lower()
    positions = [m.start() for m in re.finditer(f"(?={re.escape(kw)})", lowered)]
    count = 0
    next_free = 0
    for i in positions:
        if i < next_free:
            continue
        if mode == "word_boundary":
            left_ok = i == 0 or not lowered[i - 1].isalnum()
            end = i + len(kw)
            right_ok = end >= len(lowered) or not lowered[end].isalnum()
            if not (left_ok and right_ok):
                continue
        count += 1
        next_free = i + len(kw)
    return count


def flag_oracle(counts: list[int]) -> str:
    """Classify a count series with regex over its sign string.

    Independent formulation of the five lifecycle predicates; precedence
    is encoded by the order of the early returns.
    """
    if not counts:
        raise ValueError("empty series")
    signs = "".join("+" if c > 0 else "0" for c in counts)
    if "+" not in signs:
        return "not_found"
    if re.search(r"\+.*0.*\+", signs):
        return "repeat_defacement"
    if signs.endswith("0"):
        return "fixed"
    if "0" not in signs and len(set(counts)) == 1:
        return "defaced_constant"
    return "defaced_fluctuating"


def sort_stats(values: list[float]) -> dict:
    """Mean/median/quartiles/outliers by explicit sort and interpolation.

    Quantiles use linear interpolation between closest ranks over the
    sorted data (the inclusive method). Outliers follow the 1.5*IQR rule.
    """
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        raise ValueError("empty data")

    def quantile(p: float) -> float:
        if n == 1:
            return float(xs[0])
        pos = p * (n - 1)
        lo = math.floor(pos)
        hi = math.ceil(pos)
        frac = pos - lo
        return xs[lo] * (1.0 - frac) + xs[hi] * frac

    q1 = quantile(0.25)
    med = quantile(0.5)
    q3 = quantile(0.75)
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr
    return {
        "mean": sum(xs) / n,
        "median": med,
        "q1": q1,
        "q3": q3,
        "outliers": [x for x in xs if x < low_fence or x > high_fence],
    }


def strip_tags_text(html: str) -> str:
    """Crude tag stripper for plain-text comparison on generated fixtures.

    Drops script/style subtrees, then removes tags and decodes the few
    entities the fixture generator may emit. Only valid for markup our
    own generators produce; real-world HTML goes through the package.
    """
    no_scripts = re.sub(
        r"(?is)<(script|style)\b[^>]*>.*?</\1\s*>", " ", html
    )
    no_tags = re.sub(r"(?s)<[^>]*>", " ", no_scripts)
    return (
        no_tags.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", '"')
    )


def bucket_oracle(delta_hours: float) -> str:
    """Bucket a remediation delta; each boundary closes the left bucket."""
    if delta_hours <= 24.0:
        return "≤24h"
    if delta_hours <= 72.0:
        return "24–72h"
    if delta_hours <= 168.0:
        return "72–168h"
    return ">168h"


def psl_has_suffix(psl_path, suffix: str) -> bool:
    """Check a suffix is listed in the on-disk public suffix database."""
    with open(psl_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("//") and line == suffix:
                return True
    return False
