"""Result rows and the normalized duality gap used in reports."""

import math
from dataclasses import asdict, dataclass, field

GAP_EPS = 1e-8
LN2 = math.log(2.0)


def gap(lb, ub):
    """Normalized duality gap ``|ub - lb| / max(|ub|, |lb|, 1e-8)``."""
    return abs(ub - lb) / max(abs(ub), abs(lb), GAP_EPS)


def convert_log2(value, log_base):
    """Re-express a base-2 log value in ``log_base`` (``2`` or ``"e"``)."""
    if str(log_base) == "2":
        return value
    if str(log_base) == "e":
        return value * LN2
    raise ValueError(f"unsupported log base {log_base!r}")


@dataclass
class ReportRow:
    name: str
    n: int
    r: int
    lb: float
    lb_optimal: bool
    time_bnb_s: float
    ub: float
    time_lp_s: float
    gap: float
    log_base: str = "e"
    subset: list = field(default_factory=list)

    def to_json(self):
        """Mapping in the published report schema (1-based subset)."""
        return {
            "name": self.name,
            "n": self.n,
            "r": self.r,
            "lb_log": self.lb,
            "ub_log": self.ub,
            "gap": self.gap,
            "optimal": self.lb_optimal,
            "subset": [int(i) + 1 for i in sorted(self.subset)],
            "time_bnb_s": self.time_bnb_s,
            "time_lp_s": self.time_lp_s,
            "log_base": self.log_base,
        }

    def as_dict(self):
        return asdict(self)


HEADER = ("Name", "n", "r", "LB", "Time", "UB", "Time", "GAP")


def _fmt_num(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "N.A."
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.6g}"


def format_table(rows):
    """Plain-text table; optimal lower bounds carry a ``(*)`` marker."""
    body = []
    for row in rows:
        lb = _fmt_num(row.lb) + ("(*)" if row.lb_optimal else "")
        body.append((
            row.name,
            str(row.n),
            str(row.r),
            lb,
            f"{row.time_bnb_s:.2f}",
            _fmt_num(row.ub),
            f"{row.time_lp_s:.2f}",
            f"{row.gap:.2f}" if math.isfinite(row.gap) else "N.A.",
        ))
    widths = [max(len(h), *(len(b[k]) for b in body)) if body else len(h) for k, h in enumerate(HEADER)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(HEADER, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for b in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip())
    return "\n".join(lines)
