import itertools
import json
from fractions import Fraction

import pytest

from riskbench import elicitation as el
from riskbench.errors import UnknownTaskError, ValidationError


def brute_count_safe(choices):
    return sum(1 for c in choices if c == "A")


def brute_switch_count(choices):
    return sum(1 for a, b in zip(choices, choices[1:]) if a != b)


class TestBuiltinTasks:
    def test_five_tasks_ten_rows(self):
        tasks = el.builtin_tasks()
        assert [t.id for t in tasks] == [1, 2, 3, 4, 5]
        assert all(len(t.rows) == 10 for t in tasks)

    def test_certainty_rows_collapse_to_single_outcome(self):
        tasks = el.builtin_tasks()
        row10 = tasks[0].rows[9]
        assert row10.option_a.outcomes == ((Fraction(1), el.MoneyAmount(8000)),)
        assert row10.option_b.outcomes == ((Fraction(1), el.MoneyAmount(15400)),)

    def test_mpl4_row1_option_b(self):
        b = el.builtin_tasks()[3].rows[0].option_b
        assert b.outcomes == (
            (Fraction(33, 100), el.MoneyAmount(2000)),
            (Fraction(67, 100), el.MoneyAmount(11000)),
        )

    def test_probabilities_are_exact_rationals(self):
        for task in el.builtin_tasks():
            for row in task.rows:
                for lot in (row.option_a, row.option_b):
                    total = Fraction(0)
                    for p, _ in lot.outcomes:
                        assert isinstance(p, Fraction)
                        total += p
                    assert total == 1

    def test_every_printed_ev_within_half_euro(self):
        for task in el.builtin_tasks():
            for i, row in enumerate(task.rows):
                printed_a, printed_b = el.PRINTED_EVS[task.id][i]
                assert abs(el.expected_value(row.option_a) - printed_a) <= Fraction(1, 2)
                assert abs(el.expected_value(row.option_b) - printed_b) <= Fraction(1, 2)


class TestExpectedValue:
    def test_mpl1_row1_option_b_is_19(self):
        b = el.builtin_tasks()[0].rows[0].option_b
        assert el.expected_value(b) == Fraction(19)

    def test_mpl3_option_b_is_80(self):
        for row in el.builtin_tasks()[2].rows:
            assert el.expected_value(row.option_b) == Fraction(80)

    def test_degenerate_certainty(self):
        lot = el.Lottery(((Fraction(1), el.MoneyAmount(5200)),))
        assert el.expected_value(lot) == Fraction(52)


class TestScoring:
    def test_count_safe_extremes(self):
        assert el.count_safe(el.ChoiceSheet(1, ("A",) * 10)) == 10
        assert el.count_safe(el.ChoiceSheet(1, ("B",) * 10)) == 0

    def test_count_safe_mixed(self):
        sheet = el.ChoiceSheet(2, tuple("AAAA") + tuple("BBBBBB"))
        assert el.count_safe(sheet) == 4

    def test_count_safe_unknown_task(self):
        with pytest.raises(UnknownTaskError):
            el.count_safe(el.ChoiceSheet(9, ("A",) * 10))

    def test_safe_plus_risky_is_ten(self):
        for bits in range(0, 1024, 37):
            choices = tuple("A" if bits & (1 << i) else "B" for i in range(10))
            sheet = el.ChoiceSheet(3, choices)
            n_b = sum(1 for c in choices if c == "B")
            assert el.count_safe(sheet) + n_b == 10

    def test_avg_safe_all_safe(self):
        sheets = [el.ChoiceSheet(i, ("A",) * 10) for i in el.TASK_IDS]
        assert el.avg_safe(sheets) == 10.0

    def test_avg_safe_hand_means(self):
        def sheet_with(task_id, n_safe):
            return el.ChoiceSheet(task_id, ("A",) * n_safe + ("B",) * (10 - n_safe))

        sheets = [sheet_with(i + 1, n) for i, n in enumerate((3, 4, 5, 6, 7))]
        assert el.avg_safe(sheets) == pytest.approx(5.0)
        sheets = [sheet_with(i + 1, n) for i, n in enumerate((10, 0, 10, 0, 0))]
        assert el.avg_safe(sheets) == pytest.approx(4.0)

    def test_avg_safe_permutation_invariant(self):
        sheets = [
            el.ChoiceSheet(i + 1, ("A",) * n + ("B",) * (10 - n))
            for i, n in enumerate((2, 9, 1, 7, 4))
        ]
        expected = sum((2, 9, 1, 7, 4)) / 5
        for perm in itertools.permutations(sheets):
            assert el.avg_safe(perm) == pytest.approx(expected)

    def test_avg_safe_missing_or_duplicate_task(self):
        sheets = [el.ChoiceSheet(1, ("A",) * 10)] * 5
        with pytest.raises(ValidationError):
            el.avg_safe(sheets)
        with pytest.raises(ValidationError):
            el.avg_safe([el.ChoiceSheet(i, ("A",) * 10) for i in (1, 2, 3, 4)])


class TestConsistency:
    def test_single_switch(self):
        rep = el.consistency(el.ChoiceSheet(1, tuple("AAAAABBBBB")))
        assert rep.switch_count == 1
        assert not rep.multiple_switch

    def test_alternating(self):
        rep = el.consistency(el.ChoiceSheet(1, tuple("ABABABABAB")))
        assert rep.switch_count == 9
        assert rep.multiple_switch

    def test_all_safe_mpl1_row10_dominated(self):
        rep = el.consistency(el.ChoiceSheet(1, ("A",) * 10))
        assert rep.dominated_choices == (9,)

    def test_all_safe_mpl2_row10_dominated(self):
        rep = el.consistency(el.ChoiceSheet(2, ("A",) * 10))
        assert rep.dominated_choices == (9,)

    def test_risky_sheets_have_no_dominated_rows(self):
        for task_id in el.TASK_IDS:
            rep = el.consistency(el.ChoiceSheet(task_id, ("B",) * 10))
            assert rep.dominated_choices == ()

    def test_switch_count_matches_brute_force_over_all_sheets(self):
        for bits in range(1024):
            choices = tuple("A" if bits & (1 << i) else "B" for i in range(10))
            rep = el.consistency(el.ChoiceSheet(1, choices))
            assert rep.switch_count == brute_switch_count(choices)
            assert rep.multiple_switch == (rep.switch_count > 1)

    def test_strict_dominance_helper(self):
        better = el.Lottery(((Fraction(1), el.MoneyAmount(15400)),))
        worse = el.Lottery(((Fraction(1), el.MoneyAmount(8000)),))
        assert el.strictly_dominates(better, worse)
        assert not el.strictly_dominates(worse, better)
        assert not el.strictly_dominates(better, better)


class TestLikert:
    def test_battery_shape(self):
        battery = el.likert_battery()
        assert len(battery.questions) == 6
        assert battery.scale_min == 0 and battery.scale_max == 10
        health = next(q for q in battery.questions if q.key == "health")
        assert health.allows_na
        assert sum(1 for q in battery.questions if not q.answerable) == 1

    @pytest.mark.parametrize("value", [0, 10])
    def test_scale_extremes(self, value):
        answers = {"general": value, "occupation": 5, "health": 5,
                   "personal_finances": 5, "job_finances": 5}
        assert el.record_likert(answers).risk_grq == value

    def test_health_na_allowed_occupation_not(self):
        base = {"general": 5, "occupation": 3, "health": None,
                "personal_finances": 2, "job_finances": 4}
        fragment = el.record_likert(base)
        assert fragment.likert.health is None
        bad = dict(base, occupation=None, health=5)
        with pytest.raises(ValidationError, match="occupation"):
            el.record_likert(bad)

    def test_out_of_range_names_question(self):
        answers = {"general": 11, "occupation": 3, "health": None,
                   "personal_finances": 2, "job_finances": 4}
        with pytest.raises(ValidationError, match="general"):
            el.record_likert(answers)

    def test_preamble_not_answerable(self):
        answers = {"general": 5, "occupation": 3, "health": None,
                   "personal_finances": 2, "job_finances": 4, "domain_preamble": 5}
        with pytest.raises(ValidationError, match="domain_preamble"):
            el.record_likert(answers)


class TestTaskExport:
    def test_canonical_document_is_stable(self):
        first = el.tasks_to_json()
        assert first == el.tasks_to_json()
        doc = json.loads(first)
        assert doc["format"] == "mpl-tasks"
        assert [t["id"] for t in doc["tasks"]] == [1, 2, 3, 4, 5]
        row = doc["tasks"][0]["rows"][0]["option_b"]["outcomes"][0]
        assert row == {"cents": 15400, "prob_den": 10, "prob_num": 1}

    def test_wire_round_trip(self):
        for task in el.builtin_tasks():
            for row in task.rows:
                wire = el.lottery_to_wire(row.option_a)
                assert el.lottery_from_wire(wire) == row.option_a


class TestMoney:
    def test_non_negative(self):
        with pytest.raises(ValidationError):
            el.MoneyAmount(-1)

    def test_str(self):
        assert str(el.MoneyAmount(8000)) == "€80"
        assert str(el.MoneyAmount(8050)) == "€80.50"
