"""Experiment grids for the four regret tables.

Tables 1-3 use Bernoulli rewards under the uniform, ``(pi/2) sin(pi mu)`` and
``1 - cos(pi mu)`` priors; table 4 replays the URL latency dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

from .policies import PolicySpec, parse_policy
from .priors import PriorModel, parse_prior


@dataclass(frozen=True)
class TableRow:
    key: str
    label: str
    policy: str

    @property
    def spec(self) -> PolicySpec:
        return parse_policy(self.policy)


@dataclass(frozen=True)
class TableSpec:
    table_id: int
    title: str
    prior: str | None
    horizons: tuple[int, ...]
    rows: tuple[TableRow, ...]
    # table 4 reports regret per trial
    per_trial: bool = False

    @property
    def prior_model(self) -> PriorModel | None:
        return parse_prior(self.prior) if self.prior else None

    def select(self, keys=None) -> tuple[TableRow, ...]:
        if not keys:
            return self.rows
        known = {r.key for r in self.rows}
        unknown = set(keys) - known
        if unknown:
            raise KeyError(f"table {self.table_id} has no rows {sorted(unknown)}; rows are {sorted(known)}")
        return tuple(r for r in self.rows if r.key in keys)


_HORIZONS = (100, 1000, 10_000, 100_000)

_CBT_ROWS = (
    TableRow("cbt", "CBT (zeta = C n^-1/(beta+1))", "cbt:zeta=asymptotic,b=loglog,c=loglog"),
    TableRow("empirical-cbt", "CBT empirical", "empirical-cbt:b=loglog,c=loglog"),
)
_TWO_TARGET_ROWS = tuple(TableRow(f"two-target-{f}", f"Two-target f={f}", f"two-target:f={f}") for f in (3, 6, 9))
_UCBF_ROW = TableRow("ucbf", "UCB-F K=auto", "ucbf:K=auto")
_NONRECALL_ROW = TableRow("nonrecall-run", "n^1/(beta+1)-run (non-recall)", "nonrecall-s-run")

TABLES = {
    1: TableSpec(
        1,
        "Bernoulli rewards, uniform prior (beta=1)",
        "uniform",
        _HORIZONS,
        _CBT_ROWS
        + (
            TableRow("1-failure", "1-failure", "f-failure:f=1"),
            TableRow("run", "sqrt(n)-run", "s-run"),
            _NONRECALL_ROW,
            TableRow("learning", "log(n)sqrt(n)-learning", "m-learning"),
        )
        + _TWO_TARGET_ROWS
        + (_UCBF_ROW,),
    ),
    2: TableSpec(
        2,
        "Bernoulli rewards, g = (pi/2) sin(pi mu) (beta=2)",
        "sin",
        _HORIZONS,
        _CBT_ROWS + _TWO_TARGET_ROWS + (_UCBF_ROW, _NONRECALL_ROW),
    ),
    3: TableSpec(
        3,
        "Bernoulli rewards, g = 1 - cos(pi mu) (beta=3)",
        "1-cos",
        _HORIZONS,
        _CBT_ROWS + _TWO_TARGET_ROWS + (_UCBF_ROW, _NONRECALL_ROW),
    ),
    4: TableSpec(
        4,
        "URL latency rewards, average regret R_n/n",
        None,
        (130, 1300),
        (
            TableRow("empirical-cbt", "CBT empirical", "empirical-cbt:b=loglog,c=loglog"),
            TableRow("eps-greedy", "eps-greedy 0.05", "eps-greedy:eps=0.05"),
            TableRow("eps-first", "eps-first 0.15", "eps-first:eps=0.15"),
            TableRow("eps-decreasing", "eps-decreasing 1.0", "eps-decreasing:eps=1.0"),
        ),
        per_trial=True,
    ),
}
