"""Dynamic rule derivation, schedule advancement, and attempt verification."""

from __future__ import annotations

import random
from datetime import datetime

import pytest

from dissectauth.dissection import BlockScheme
from dissectauth.errors import InvalidRule
from dissectauth.rules import (
    AlphabetMode,
    DecoySpec,
    PlainSecretHandle,
    RuleSpec,
    RuleState,
    RuleVariant,
    advance,
    derive_expected,
    dry_run_cycle,
    initial_state,
    rule_reachable_values,
    shift_char,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
    verify_attempt,
)

T0 = datetime(2024, 5, 1, 15, 30)
NO_DECOY = DecoySpec()
SCHEME = BlockScheme()
SALT = b"\x05" * 16


def caesar(positions=(1,), deltas=(-2,), cycle=4, mode=AlphabetMode.LETTERS26):
    return RuleSpec(
        RuleVariant.CAESAR,
        positions=tuple(positions),
        deltas=tuple(deltas),
        cycle_length=cycle,
        alphabet_mode=mode,
    )


class TestCaesar:
    def test_first_shift_minus_two(self):
        expected, tv = derive_expected("yomnot", caesar(), initial_state(caesar()), T0)
        assert expected == "womnot"
        assert tv is None

    def test_repeated_shift_walks_w_u_s_q(self):
        spec = caesar()
        state = initial_state(spec)
        seen = []
        for _ in range(4):
            expected, _ = derive_expected("yomnot", spec, state, T0)
            seen.append(expected[0])
            state = advance(spec, state)
        assert seen == ["w", "u", "s", "q"]
        # the cycle wraps: next login expects 'w' again
        expected, _ = derive_expected("yomnot", spec, state, T0)
        assert expected[0] == "w"

    def test_alnum36_wraps_digit_to_letter(self):
        assert shift_char("9", 1, AlphabetMode.ALNUM36) == "a"
        spec = caesar(positions=(3,), deltas=(1,), cycle=2, mode=AlphabetMode.ALNUM36)
        expected, _ = derive_expected("ab9d", spec, initial_state(spec), T0)
        assert expected == "abad"

    def test_shift_is_a_bijection_both_modes(self):
        rng = random.Random(1)
        for mode, alphabet in (
            (AlphabetMode.LETTERS26, "abcdefghijklmnopqrstuvwxyz"),
            (AlphabetMode.ALNUM36, "abcdefghijklmnopqrstuvwxyz0123456789"),
        ):
            for _ in range(200):
                ch = rng.choice(alphabet)
                delta = rng.randint(-80, 80)
                assert shift_char(shift_char(ch, delta, mode), -delta, mode) == ch

    def test_letters26_rejects_digit_positions(self):
        with pytest.raises(InvalidRule):
            validate_spec(caesar(positions=(5,)), "yomn0t")


class TestTimeRule:
    def test_paper_clock_values(self):
        spec = RuleSpec(RuleVariant.TIME, offset_minutes=15)
        state = initial_state(spec)
        _, tv = derive_expected("yomnot", spec, state, datetime(2024, 5, 1, 15, 30))
        assert tv == 45
        _, tv = derive_expected("yomnot", spec, state, datetime(2024, 5, 1, 15, 59))
        assert tv == 14

    def test_secret_unchanged_and_value_in_range(self):
        spec = RuleSpec(RuleVariant.TIME, offset_minutes=59)
        for minute in range(0, 60, 7):
            expected, tv = derive_expected(
                "yomnot", spec, initial_state(spec), datetime(2024, 5, 1, 8, minute)
            )
            assert expected == "yomnot"
            assert tv is not None and 0 <= tv <= 59

    def test_positions_forbidden(self):
        with pytest.raises(InvalidRule):
            RuleSpec(RuleVariant.TIME, positions=(1,), offset_minutes=5)


class TestSpecialChar:
    def test_four_cycle_repeats(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&", "*", "#"))
        state = initial_state(spec)
        seen = []
        for _ in range(8):
            expected, _ = derive_expected("yomnot2025", spec, state, T0)
            seen.append(expected[1])
            state = advance(spec, state)
        assert seen == ["@", "&", "*", "#", "@", "&", "*", "#"]

    def test_reachable_values_are_exactly_the_charset(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&", "*", "#"))
        assert rule_reachable_values(spec, "yomnot2025", 2) == {"@", "&", "*", "#"}


class TestSpace:
    def test_repeat_counts_unroll(self):
        spec = RuleSpec(RuleVariant.SPACE, space_schedule=((1, 2), (3, 1)))
        state = initial_state(spec)
        inserted_at = []
        for _ in range(6):
            expected, _ = derive_expected("yomnot", spec, state, T0)
            inserted_at.append(expected.index(" ") + 1)
            state = advance(spec, state)
        assert inserted_at == [1, 1, 3, 1, 1, 3]

    def test_insertion_preserves_all_base_characters(self):
        spec = RuleSpec(RuleVariant.SPACE, space_schedule=((3, 1),))
        expected, _ = derive_expected("yomnot", spec, initial_state(spec), T0)
        assert expected == "yo mnot"
        assert len(expected) == 7


class TestLeetAndCase:
    def test_leet_substitutes_scheduled_positions(self):
        spec = RuleSpec(RuleVariant.LEET, leet_schedule=((1,), ()))
        expected, _ = derive_expected("yomnot", spec, initial_state(spec), T0)
        assert expected == "eomnot"

    def test_case_toggle_reaches_both_cases(self):
        spec = RuleSpec(RuleVariant.CHAR_CASE, case_schedule=((1,), ()))
        assert rule_reachable_values(spec, "yomnot", 1) == {"y", "Y"}

    def test_case_on_non_letter_is_identity(self):
        spec = RuleSpec(RuleVariant.CHAR_CASE, case_schedule=((3,),))
        expected, _ = derive_expected("yo2not", spec, initial_state(spec), T0)
        assert expected == "yo2not"


class TestMixed:
    def test_children_apply_left_to_right(self):
        spec = RuleSpec(
            RuleVariant.MIXED,
            children=(
                RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&")),
                RuleSpec(RuleVariant.CHAR_CASE, case_schedule=((1,),)),
            ),
        )
        expected, _ = derive_expected("yomnot", spec, initial_state(spec), T0)
        assert expected == "Y@mnot"

    def test_cycle_is_lcm_of_children(self):
        spec = RuleSpec(
            RuleVariant.MIXED,
            children=(
                RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&", "*")),
                RuleSpec(RuleVariant.CHAR_CASE, case_schedule=((1,), ())),
            ),
        )
        assert spec.effective_cycle() == 6

    def test_nested_mixed_rejected(self):
        child = RuleSpec(RuleVariant.MIXED, children=(RuleSpec(RuleVariant.STATIC),))
        with pytest.raises(InvalidRule):
            RuleSpec(RuleVariant.MIXED, children=(child,))

    def test_time_child_supplies_auxiliary_value(self):
        spec = RuleSpec(
            RuleVariant.MIXED,
            children=(
                RuleSpec(RuleVariant.TIME, offset_minutes=15),
                RuleSpec(RuleVariant.CHAR_CASE, case_schedule=((1,),)),
            ),
        )
        expected, tv = derive_expected("yomnot", spec, initial_state(spec), T0)
        assert expected == "Yomnot"
        assert tv == 45


class TestAdvance:
    def test_cursor_wraps_at_cycle_end(self):
        spec = caesar(cycle=3)
        state = RuleState(login_index=7, cursors=(2,))
        nxt = advance(spec, state)
        assert nxt.cursors == (0,)
        assert nxt.login_index == 8

    def test_static_only_counts_logins(self):
        spec = RuleSpec(RuleVariant.STATIC)
        nxt = advance(spec, initial_state(spec))
        assert nxt.cursors == (0,)
        assert nxt.login_index == 1


def make_specs(rng: random.Random, base: str) -> list[RuleSpec]:
    n = len(base)
    letter_positions = [i + 1 for i, c in enumerate(base) if c.isalpha()]
    specs: list[RuleSpec] = [RuleSpec(RuleVariant.STATIC)]
    if letter_positions:
        pos = rng.choice(letter_positions)
        specs.append(
            caesar(positions=(pos,), deltas=(rng.choice([-3, -2, -1, 1, 2]),), cycle=rng.randint(2, 5))
        )
        specs.append(
            caesar(positions=(pos,), deltas=(rng.choice([-2, 1]),), cycle=3, mode=AlphabetMode.ALNUM36)
        )
        specs.append(RuleSpec(RuleVariant.CHAR_CASE, case_schedule=((letter_positions[0],), ())))
        specs.append(
            RuleSpec(
                RuleVariant.LEET,
                leet_map=(("y", "e"), ("t", "7"), ("o", "0"), ("n", "9"), (base[letter_positions[0] - 1], "4")),
                leet_schedule=((letter_positions[0],), ()),
            )
        )
    specs.append(RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(rng.randint(1, n),), charset=("@", "&", "*", "#")))
    specs.append(RuleSpec(RuleVariant.SPACE, space_schedule=((rng.randint(1, n + 1), rng.randint(1, 2)), (rng.randint(1, n + 1), 1))))
    specs.append(RuleSpec(RuleVariant.TIME, offset_minutes=rng.randint(0, 59)))
    return specs


class TestVerifyAttempt:
    def verify(self, attempt, spec, state, base="yomnot2025", tv=None, decoy=NO_DECOY, when=T0):
        return verify_attempt(
            attempt,
            tv,
            PlainSecretHandle(base),
            spec,
            state,
            decoy,
            when,
            scheme=SCHEME,
            user_salt=SALT,
        )

    def test_exact_dynamic_value_matches_cleanly(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&", "*", "#"))
        state = RuleState(login_index=5, cursors=(1,))
        expected, _ = derive_expected("yomnot2025", spec, state, T0)
        matched, comparison, report = self.verify(expected, spec, state)
        assert matched
        assert comparison.match_percentage == 100.0
        assert not report.deviated
        assert not report.decoy_violated

    def test_decoy_alteration_flagged(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&"))
        state = initial_state(spec)
        expected, _ = derive_expected("yomnot2025", spec, state, T0)
        tampered = expected[:4] + "X" + expected[5:]  # position 5 is the decoy
        decoy = DecoySpec(decoy_positions=frozenset({5}), enabled=True)
        matched, _, report = self.verify(tampered, spec, state, decoy=decoy)
        assert not matched
        assert report.decoy_violated
        assert report.deviated

    def test_decoy_never_fires_on_exact_expected(self):
        spec = caesar()
        state = initial_state(spec)
        expected, _ = derive_expected("yomnot", spec, state, T0)
        decoy = DecoySpec(decoy_positions=frozenset({4, 5}), enabled=True)
        matched, _, report = self.verify(expected, spec, state, base="yomnot", decoy=decoy)
        assert matched
        assert not report.decoy_violated

    def test_stale_replay_rejected_with_rule_positions_flagged(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&", "*", "#"))
        state = initial_state(spec)
        observed, _ = derive_expected("yomnot2025", spec, state, T0)
        advanced = advance(spec, state)
        matched, comparison, report = self.verify(observed, spec, advanced)
        assert not matched
        assert report.deviation_positions == frozenset({2})
        # the stale value is still inside the rule's reachable set
        assert not report.unreachable_rule_positions

    def test_unreachable_value_at_rule_position_is_deviation(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&", "*", "#"))
        state = initial_state(spec)
        expected, _ = derive_expected("yomnot2025", spec, state, T0)
        attempt = expected[:1] + "z" + expected[2:]  # 'z' is outside the charset
        matched, _, report = self.verify(attempt, spec, state)
        assert not matched
        assert report.deviated
        assert report.unreachable_rule_positions == frozenset({2})

    def test_non_rule_position_mismatch_is_deviation(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&"))
        state = initial_state(spec)
        expected, _ = derive_expected("yomnot2025", spec, state, T0)
        attempt = expected[:6] + "X" + expected[7:]
        matched, _, report = self.verify(attempt, spec, state)
        assert not matched
        assert report.deviated
        assert 7 in report.non_rule_mismatches

    def test_time_rule_window_and_missing_value(self):
        spec = RuleSpec(RuleVariant.TIME, offset_minutes=15)
        state = initial_state(spec)
        matched, _, report = self.verify("yomnot2025", spec, state, tv=45)
        assert matched and not report.deviated
        matched, _, report = self.verify("yomnot2025", spec, state, tv=46)
        assert matched  # inside the +-1 minute default window
        matched, _, report = self.verify("yomnot2025", spec, state, tv=50)
        assert not matched and report.deviated
        matched, _, report = self.verify("yomnot2025", spec, state, tv=None)
        assert not matched and report.deviated

    def test_time_window_wraps_mod_60(self):
        spec = RuleSpec(RuleVariant.TIME, offset_minutes=1)
        state = initial_state(spec)
        when = datetime(2024, 5, 1, 15, 59)  # expected value 0
        matched, _, _ = self.verify("yomnot2025", spec, state, tv=59, when=when)
        assert matched


class TestRoundTripProperties:
    def test_derive_then_verify_round_trip_all_variants(self):
        rng = random.Random(2024)
        bases = ["yomnot2025", "stargate", "qlmzervx91", "mapleleaf"]
        checked = 0
        for base in bases:
            for spec in make_specs(rng, base):
                cycle = spec.effective_cycle()
                state = initial_state(spec)
                for _ in range(min(cycle * 2, 12)):
                    when = datetime(2024, 5, 1, rng.randint(0, 23), rng.randint(0, 59))
                    expected, tv = derive_expected(base, spec, state, when)
                    matched, comparison, report = verify_attempt(
                        expected, tv, PlainSecretHandle(base), spec, state, NO_DECOY,
                        when, scheme=SCHEME, user_salt=SALT,
                    )
                    assert matched, (spec.variant, state)
                    assert not report.deviated
                    assert comparison.match_percentage == 100.0
                    state = advance(spec, state)
                    checked += 1
        assert checked >= 80

    def test_schedule_periodicity(self):
        rng = random.Random(7)
        for base in ["yomnot2025", "orchard"]:
            for spec in make_specs(rng, base):
                if spec.variant is RuleVariant.TIME:
                    continue
                cycle = spec.effective_cycle()
                state = initial_state(spec)
                states = [state]
                for _ in range(cycle):
                    state = advance(spec, state)
                    states.append(state)
                first, _ = derive_expected(base, spec, states[0], T0)
                again, _ = derive_expected(base, spec, states[cycle], T0)
                assert first == again

    def test_replay_rejected_at_non_identity_steps(self):
        rng = random.Random(99)
        rejected = identity_steps = 0
        for base in ["yomnot2025", "telescope"]:
            for spec in make_specs(rng, base):
                if spec.variant in (RuleVariant.STATIC, RuleVariant.TIME):
                    continue
                state = initial_state(spec)
                for _ in range(spec.effective_cycle()):
                    prev, _ = derive_expected(base, spec, state, T0)
                    state = advance(spec, state)
                    now, _ = derive_expected(base, spec, state, T0)
                    matched, _, _ = verify_attempt(
                        prev, None, PlainSecretHandle(base), spec, state, NO_DECOY,
                        T0, scheme=SCHEME, user_salt=SALT,
                    )
                    if prev == now:
                        identity_steps += 1
                        assert matched
                    else:
                        rejected += 1
                        assert not matched
        assert rejected > 10


class TestSerialization:
    def test_round_trip_every_variant(self):
        rng = random.Random(5)
        for spec in make_specs(rng, "yomnot2025"):
            again = spec_from_dict(spec_to_dict(spec))
            assert again.variant == spec.variant
            assert again.effective_cycle() == spec.effective_cycle()
            expected_a, _ = derive_expected("yomnot2025", spec, initial_state(spec), T0)
            expected_b, _ = derive_expected("yomnot2025", again, initial_state(again), T0)
            assert expected_a == expected_b

    def test_mixed_round_trip(self):
        spec = RuleSpec(
            RuleVariant.MIXED,
            children=(
                RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&")),
                RuleSpec(RuleVariant.TIME, offset_minutes=10),
            ),
        )
        again = spec_from_dict(spec_to_dict(spec))
        assert [c.variant for c in again.children] == [RuleVariant.SPECIAL_CHAR, RuleVariant.TIME]


class TestDryRun:
    def test_dry_run_lists_cycle(self):
        spec = RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(2,), charset=("@", "&"))
        assert dry_run_cycle(spec, "yomnot") == ["y@mnot", "y&mnot"]

    def test_position_beyond_secret_rejected(self):
        with pytest.raises(InvalidRule):
            dry_run_cycle(RuleSpec(RuleVariant.SPECIAL_CHAR, positions=(9,), charset=("@",)), "short")
