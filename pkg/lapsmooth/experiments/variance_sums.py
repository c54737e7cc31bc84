"""
Direct summation check of the variance-sum bounds

    (1/8) s - 1  <=  sum_{k=2}^n (t k^(2/d) + 1)^(-2)  <=  s + extra(d)
    (1/32) s - 1 <=  sum_{k=2}^n (t k^(2/d) + 1)^(-4)  <=  2 s          (d <= 4)

with s = t^(-d/2) and extra(d) = 3 s (d < 4), t^(-2) log n (d = 4),
t^(-2) n^(1 - 4/d) (d > 4). Only pairs with 1 <= s <= n are checked.
"""

from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput


class VarianceSumRow(BaseModel):
    d: int
    t: float
    n: int
    checked: bool
    sum_squared: Optional[float] = None
    sum_fourth: Optional[float] = None
    estimation_lower: Optional[float] = None
    estimation_upper: Optional[float] = None
    testing_lower: Optional[float] = None
    testing_upper: Optional[float] = None
    holds: Optional[bool] = None

    @property
    def margins(self) -> Dict[str, float]:
        """Slack of every checked inequality (nonnegative when it holds)."""
        if not self.checked:
            return {}
        margins = {
            "estimation_lower": self.sum_squared - self.estimation_lower,
            "estimation_upper": self.estimation_upper - self.sum_squared,
        }
        if self.testing_upper is not None:
            margins["testing_lower"] = self.sum_fourth - self.testing_lower
            margins["testing_upper"] = self.testing_upper - self.sum_fourth
        return margins


def estimation_upper_extra(t: float, d: int, n: int) -> float:
    s = t ** (-d / 2.0)
    if d < 4:
        return 3.0 * s
    if d == 4:
        return np.log(n) / t ** 2
    return n ** (1.0 - 4.0 / d) / t ** 2


def variance_sum_row(d: int, t: float, n: int) -> VarianceSumRow:
    s = t ** (-d / 2.0)
    if not 1.0 <= s <= n:
        return VarianceSumRow(d=d, t=t, n=n, checked=False)
    k = np.arange(2, n + 1, dtype=np.float64)
    shrink = 1.0 / (t * k ** (2.0 / d) + 1.0)
    squared = shrink ** 2
    sum_squared = float(np.sum(squared))
    sum_fourth = float(np.sum(squared ** 2))

    row = VarianceSumRow(
        d=d,
        t=t,
        n=n,
        checked=True,
        sum_squared=sum_squared,
        sum_fourth=sum_fourth,
        estimation_lower=s / 8.0 - 1.0,
        estimation_upper=s + estimation_upper_extra(t, d, n),
    )
    if d <= 4:
        row.testing_lower = s / 32.0 - 1.0
        row.testing_upper = 2.0 * s
    row.holds = all(margin >= 0 for margin in row.margins.values())
    return row


def run_variance_sum_check(d_list: Sequence[int], t_grid: Sequence[float], n: int) -> List[VarianceSumRow]:
    """Evaluate every (d, t) pair; pairs outside 1 <= t^(-d/2) <= n are marked unchecked."""
    return [variance_sum_row(int(d), float(t), int(n)) for d in d_list for t in t_grid]


class VarianceSumExperiment(Experiment):
    """Variance-sum inequalities by direct summation."""

    kind = ExperimentKind.VARIANCE_SUMS

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        n = cfg.n_grid[-1]
        rows = run_variance_sum_check(cfg.d_list, cfg.t_grid, n)
        checked = [row for row in rows if row.checked]
        failures = [row for row in checked if not row.holds]
        summary: Dict[str, Any] = {
            "n": n,
            "checked": len(checked),
            "skipped": len(rows) - len(checked),
            "all_hold": not failures,
            "smallest_margin": min((min(row.margins.values()) for row in checked), default=None),
        }
        if failures:
            self.logger.warning(f"{len(failures)} variance-sum inequalities failed", n=n)
        header = ["d", "t", "n", "checked", "sum_squared", "sum_fourth", "estimation_lower",
                  "estimation_upper", "testing_lower", "testing_upper", "holds"]
        table = [[row.d, row.t, row.n, row.checked, row.sum_squared, row.sum_fourth, row.estimation_lower,
                  row.estimation_upper, row.testing_lower, row.testing_upper, row.holds] for row in rows]
        return ExperimentOutput(
            tables={"variance_sums.csv": (header, table)},
            documents={"summary.json": summary},
            result=rows,
            summary=summary,
        )
