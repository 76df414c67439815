"""Multiple price list (MPL) tasks and the self-report risk battery.

An MPL is a table of ten binary lottery choices in which one option grows
relatively more attractive down the rows; the row where a participant
switches reveals their risk preference. Five built-in lists are defined
here, together with scoring (safe-choice counts and their average across
lists), consistency diagnostics (switch counts, dominated choices), and
the 11-point willingness-to-take-risk question battery.

Option A is the safe option in every built-in row: it has the lower
payoff spread in lists 1, 2 and 5 and is a certain amount in lists 3
and 4. Money is held in integer euro-cents and probabilities as exact
rationals, so expected values are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .errors import UnknownTaskError, ValidationError

Choice = str  # "A" or "B"

CHOICE_SAFE = "A"
CHOICE_RISKY = "B"
ROWS_PER_TASK = 10
TASK_IDS = (1, 2, 3, 4, 5)
LIKERT_MIN = 0
LIKERT_MAX = 10


@dataclass(frozen=True)
class MoneyAmount:
    """A non-negative amount of money in integer euro-cents."""

    cents: int

    def __post_init__(self):
        if not isinstance(self.cents, int) or isinstance(self.cents, bool):
            raise ValidationError(f"money must be integer cents, got {self.cents!r}")
        if self.cents < 0:
            raise ValidationError(f"money must be non-negative, got {self.cents}")

    @property
    def euros(self) -> Fraction:
        return Fraction(self.cents, 100)

    def __str__(self) -> str:
        if self.cents % 100 == 0:
            return f"€{self.cents // 100}"
        return f"€{self.cents / 100:.2f}"


@dataclass(frozen=True)
class Lottery:
    """One or two (probability, payoff) outcomes with probabilities summing to 1."""

    outcomes: tuple[tuple[Fraction, MoneyAmount], ...]

    def __post_init__(self):
        if not 1 <= len(self.outcomes) <= 2:
            raise ValidationError("lottery must have 1 or 2 outcomes")
        total = Fraction(0)
        for prob, payoff in self.outcomes:
            if not isinstance(prob, Fraction):
                raise ValidationError("probabilities must be exact rationals")
            if not 0 <= prob <= 1:
                raise ValidationError(f"probability {prob} outside [0, 1]")
            if not isinstance(payoff, MoneyAmount):
                raise ValidationError("payoffs must be MoneyAmount")
            total += prob
        if total != 1:
            raise ValidationError(f"probabilities sum to {total}, expected 1")

    def support(self) -> tuple[MoneyAmount, ...]:
        return tuple(payoff for _, payoff in self.outcomes)


@dataclass(frozen=True)
class MPLRow:
    option_a: Lottery  # the designated safe option in all built-in rows
    option_b: Lottery


@dataclass(frozen=True)
class MPLTask:
    id: int
    rows: tuple[MPLRow, ...]

    def __post_init__(self):
        if len(self.rows) != ROWS_PER_TASK:
            raise ValidationError(
                f"task {self.id} has {len(self.rows)} rows, expected {ROWS_PER_TASK}"
            )


@dataclass(frozen=True)
class ChoiceSheet:
    """A participant's ten A/B choices over one task."""

    task_id: int
    choices: tuple[Choice, ...]

    def __post_init__(self):
        if len(self.choices) != ROWS_PER_TASK:
            raise ValidationError(
                f"sheet for task {self.task_id} has {len(self.choices)} choices, "
                f"expected {ROWS_PER_TASK}"
            )
        for i, c in enumerate(self.choices):
            if c not in (CHOICE_SAFE, CHOICE_RISKY):
                raise ValidationError(f"choice {i} is {c!r}, expected 'A' or 'B'")


@dataclass(frozen=True)
class ConsistencyReport:
    """Advisory diagnostics for one sheet; never affects scoring.

    dominated_choices holds 0-based row indices where the unchosen option
    strictly first-order stochastically dominates the chosen one.
    """

    switch_count: int
    multiple_switch: bool
    dominated_choices: tuple[int, ...]


@dataclass(frozen=True)
class LikertAnswers:
    """Validated 0..10 answers; health may be None (not applicable)."""

    general: int
    occupation: int
    health: int | None
    personal_finances: int
    job_finances: int


@dataclass(frozen=True)
class RiskMeasures:
    """The two risk-preference measures plus the domain answers.

    Either side may be absent while a session is only partially scored:
    mpl_avg_safe is the mean safe-choice count over the five lists
    (range 0..10), risk_grq the general-domain willingness answer.
    """

    mpl_avg_safe: float | None = None
    risk_grq: int | None = None
    likert: LikertAnswers | None = None

    def merged_with(self, other: "RiskMeasures") -> "RiskMeasures":
        return RiskMeasures(
            mpl_avg_safe=other.mpl_avg_safe if other.mpl_avg_safe is not None else self.mpl_avg_safe,
            risk_grq=other.risk_grq if other.risk_grq is not None else self.risk_grq,
            likert=other.likert if other.likert is not None else self.likert,
        )


@dataclass(frozen=True)
class LikertQuestion:
    key: str
    text: str
    answerable: bool
    allows_na: bool


@dataclass(frozen=True)
class LikertBattery:
    scale_min: int
    scale_max: int
    anchor_min: str
    anchor_max: str
    questions: tuple[LikertQuestion, ...]


_LIKERT_QUESTIONS = (
    LikertQuestion(
        "general",
        "Can you tell me to what extent you are, in general, willing or unwilling to take risks?",
        answerable=True,
        allows_na=False,
    ),
    LikertQuestion(
        "domain_preamble",
        "People can behave differently in different situations. How do you assess your "
        "willingness to take risks in the following matters:",
        answerable=False,
        allows_na=False,
    ),
    LikertQuestion("occupation", "... in your career choice?", answerable=True, allows_na=False),
    LikertQuestion("health", "... in your health?", answerable=True, allows_na=True),
    LikertQuestion(
        "personal_finances", "... in your personal financial affairs?", answerable=True, allows_na=False
    ),
    LikertQuestion(
        "job_finances", "... in your work-related financial matters?", answerable=True, allows_na=False
    ),
)


def likert_battery() -> LikertBattery:
    """The six-entry willingness-to-take-risk battery on the 0..10 scale."""
    return LikertBattery(
        scale_min=LIKERT_MIN,
        scale_max=LIKERT_MAX,
        anchor_min="not at all willing to take risks",
        anchor_max="very willing to take risks",
        questions=_LIKERT_QUESTIONS,
    )


def record_likert(answers: Mapping[str, int | None]) -> RiskMeasures:
    """Validate battery answers and return the self-report measure fragment.

    Every answerable question must be present with an integer in 0..10;
    only health additionally accepts None. Raises ValidationError naming
    the offending question otherwise.
    """
    by_key = {q.key: q for q in _LIKERT_QUESTIONS}
    for key in answers:
        if key not in by_key or not by_key[key].answerable:
            raise ValidationError(f"likert: {key!r} is not an answerable question")
    validated: dict[str, int | None] = {}
    for q in _LIKERT_QUESTIONS:
        if not q.answerable:
            continue
        if q.key not in answers:
            raise ValidationError(f"likert: missing answer for {q.key!r}")
        value = answers[q.key]
        if value is None:
            if not q.allows_na:
                raise ValidationError(f"likert: {q.key!r} does not allow 'not applicable'")
            validated[q.key] = None
            continue
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValidationError(f"likert: {q.key!r} answer must be an integer, got {value!r}")
        if not LIKERT_MIN <= value <= LIKERT_MAX:
            raise ValidationError(
                f"likert: {q.key!r} answer {value} outside {LIKERT_MIN}..{LIKERT_MAX}"
            )
        validated[q.key] = value
    likert = LikertAnswers(
        general=validated["general"],
        occupation=validated["occupation"],
        health=validated["health"],
        personal_finances=validated["personal_finances"],
        job_finances=validated["job_finances"],
    )
    return RiskMeasures(risk_grq=likert.general, likert=likert)


def _certain(cents: int) -> Lottery:
    return Lottery(((Fraction(1), MoneyAmount(cents)),))


def _two(p_num: int, p_den: int, hi_cents: int, lo_cents: int) -> Lottery:
    p = Fraction(p_num, p_den)
    if p == 1:
        return _certain(hi_cents)
    if p == 0:
        return _certain(lo_cents)
    return Lottery(((p, MoneyAmount(hi_cents)), (1 - p, MoneyAmount(lo_cents))))


def _ladder(hi_cents: int, lo_cents: int) -> tuple[Lottery, ...]:
    # p(high payoff) climbs 0.1 .. 1.0 down the ten rows
    return tuple(_two(k, 10, hi_cents, lo_cents) for k in range(1, 11))


def builtin_tasks() -> tuple[MPLTask, ...]:
    """The five built-in multiple price lists.

    Lists 1 and 2 vary the probability of the high payoff down the rows
    for both options; lists 3 and 4 pit a growing certain amount against
    a fixed lottery; list 5 fixes the safe lottery and raises the risky
    option's high payoff.
    """
    mpl1 = MPLTask(1, tuple(MPLRow(a, b) for a, b in zip(_ladder(8000, 6400), _ladder(15400, 400))))
    mpl2 = MPLTask(2, tuple(MPLRow(a, b) for a, b in zip(_ladder(9900, 4100), _ladder(13400, 1900))))
    mpl3_certs = (5200, 5700, 6300, 6800, 7300, 7800, 8200, 8800, 9400, 10100)
    mpl3_b = _two(1, 2, 13000, 3000)
    mpl3 = MPLTask(3, tuple(MPLRow(_certain(c), mpl3_b) for c in mpl3_certs))
    mpl4_certs = (3900, 4600, 5600, 6400, 7000, 7500, 7900, 8400, 8800, 9300)
    mpl4_b = Lottery(((Fraction(33, 100), MoneyAmount(2000)), (Fraction(67, 100), MoneyAmount(11000))))
    mpl4 = MPLTask(4, tuple(MPLRow(_certain(c), mpl4_b) for c in mpl4_certs))
    mpl5_a = _two(1, 2, 9000, 7000)
    mpl5_highs = (10300, 10900, 11500, 12200, 12800, 13100, 13800, 15300, 17000, 18600)
    mpl5 = MPLTask(5, tuple(MPLRow(mpl5_a, _two(1, 2, h, 3500)) for h in mpl5_highs))
    return (mpl1, mpl2, mpl3, mpl4, mpl5)


# Whole-euro expected values as printed on the task sheets (rounded),
# (option A, option B) per row. Recomputed EVs must land within half a euro.
PRINTED_EVS: dict[int, tuple[tuple[int, int], ...]] = {
    1: tuple(zip((66, 67, 69, 70, 72, 74, 75, 77, 78, 80), (19, 34, 49, 64, 79, 94, 109, 124, 139, 154))),
    2: tuple(zip((47, 53, 58, 64, 70, 76, 82, 87, 93, 99), (31, 42, 54, 65, 77, 88, 100, 111, 123, 134))),
    3: tuple(zip((52, 57, 63, 68, 73, 78, 82, 88, 94, 101), (80,) * 10)),
    4: tuple(zip((39, 46, 56, 64, 70, 75, 79, 84, 88, 93), (80,) * 10)),
    5: tuple(zip((80,) * 10, (69, 72, 75, 79, 82, 83, 87, 94, 103, 111))),
}


def expected_value(lottery: Lottery) -> Fraction:
    """Exact expected value in euros."""
    return sum((prob * payoff.euros for prob, payoff in lottery.outcomes), Fraction(0))


def _task_index(tasks: Sequence[MPLTask] | None) -> dict[int, MPLTask]:
    if tasks is None:
        tasks = builtin_tasks()
    return {t.id: t for t in tasks}


def _resolve(sheet: ChoiceSheet, tasks: Sequence[MPLTask] | None) -> MPLTask:
    index = _task_index(tasks)
    if sheet.task_id not in index:
        raise UnknownTaskError(f"no task with id {sheet.task_id} is registered")
    return index[sheet.task_id]


def count_safe(sheet: ChoiceSheet, tasks: Sequence[MPLTask] | None = None) -> int:
    """Number of rows where the safe option (A) was chosen."""
    _resolve(sheet, tasks)
    return sum(1 for c in sheet.choices if c == CHOICE_SAFE)


def avg_safe(sheets: Iterable[ChoiceSheet], tasks: Sequence[MPLTask] | None = None) -> float:
    """Mean safe-choice count over exactly one sheet per task 1..5."""
    sheets = list(sheets)
    seen = [s.task_id for s in sheets]
    if sorted(seen) != list(TASK_IDS):
        raise ValidationError(
            f"need exactly one sheet per task {list(TASK_IDS)}, got task ids {seen}"
        )
    return fmean(count_safe(s, tasks) for s in sheets)


def _cdf_pairs(lottery: Lottery) -> list[tuple[Fraction, Fraction]]:
    # (payoff in euros, cumulative probability of <= payoff), ascending
    acc: dict[Fraction, Fraction] = {}
    for prob, payoff in lottery.outcomes:
        acc[payoff.euros] = acc.get(payoff.euros, Fraction(0)) + prob
    points = sorted(acc)
    out = []
    run = Fraction(0)
    for v in points:
        run += acc[v]
        out.append((v, run))
    return out


def strictly_dominates(x: Lottery, y: Lottery) -> bool:
    """True when x first-order stochastically dominates y, strictly somewhere."""
    cx = _cdf_pairs(x)
    cy = _cdf_pairs(y)
    support = sorted({v for v, _ in cx} | {v for v, _ in cy})

    def cdf(pairs: list[tuple[Fraction, Fraction]], v: Fraction) -> Fraction:
        best = Fraction(0)
        for point, cum in pairs:
            if point <= v:
                best = cum
            else:
                break
        return best

    strict = False
    for v in support:
        fx, fy = cdf(cx, v), cdf(cy, v)
        if fx > fy:
            return False
        if fx < fy:
            strict = True
    return strict


def consistency(sheet: ChoiceSheet, tasks: Sequence[MPLTask] | None = None) -> ConsistencyReport:
    """Switch count over adjacent rows plus dominated-choice flags."""
    task = _resolve(sheet, tasks)
    switches = sum(
        1 for a, b in zip(sheet.choices, sheet.choices[1:]) if a != b
    )
    dominated = []
    for i, (row, choice) in enumerate(zip(task.rows, sheet.choices)):
        chosen, other = (
            (row.option_a, row.option_b) if choice == CHOICE_SAFE else (row.option_b, row.option_a)
        )
        if strictly_dominates(other, chosen):
            dominated.append(i)
    return ConsistencyReport(
        switch_count=switches,
        multiple_switch=switches > 1,
        dominated_choices=tuple(dominated),
    )


def lottery_to_wire(lottery: Lottery) -> dict:
    return {
        "outcomes": [
            {"prob_num": p.numerator, "prob_den": p.denominator, "cents": m.cents}
            for p, m in lottery.outcomes
        ]
    }


def lottery_from_wire(doc: Mapping) -> Lottery:
    return Lottery(
        tuple(
            (Fraction(o["prob_num"], o["prob_den"]), MoneyAmount(o["cents"]))
            for o in doc["outcomes"]
        )
    )


def tasks_to_json(tasks: Sequence[MPLTask] | None = None) -> str:
    """Canonical JSON document of the tasks; byte-stable for golden files."""
    if tasks is None:
        tasks = builtin_tasks()
    doc = {
        "format": "mpl-tasks",
        "version": 1,
        "tasks": [
            {
                "id": t.id,
                "rows": [
                    {
                        "option_a": lottery_to_wire(r.option_a),
                        "option_b": lottery_to_wire(r.option_b),
                    }
                    for r in t.rows
                ],
            }
            for t in tasks
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
