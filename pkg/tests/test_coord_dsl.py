import random

import pytest

from dsl_helpers import random_program, vote_axis_oracle
from l3go.coord_dsl import (
    BINDING_NAMES,
    BinOp,
    DivisionByZeroError,
    DslSyntaxError,
    DuplicateAxisError,
    EmptyInputError,
    MissingAxisError,
    Ref,
    UnboundIdentifierError,
    UnknownIdentifierError,
    VoteConfig,
    eval_program,
    format_program,
    majority_vote,
    make_bindings,
    parse_program,
)
from l3go.geometry import Aabb, Vec3

BASE = Aabb(Vec3(-0.45, -0.45, -0.06), Vec3(0.45, 0.45, 0.06))
PART = Vec3(0.08, 0.08, 0.45)
BINDINGS = make_bindings(BASE, PART)


def bindings_with(**overrides):
    values = dict(BINDINGS)
    values.update(overrides)
    return values


class TestParse:
    def test_attachment_program(self):
        src = ("x = base.center.x\n"
               "y = base.min.y - part.size.y / 2\n"
               "z = base.max.z + part.size.z / 2\n")
        program = parse_program(src)
        assert program.x == Ref("base.center.x")
        assert isinstance(program.y, BinOp) and program.y.op == "-"

    def test_missing_axis(self):
        with pytest.raises(MissingAxisError, match="z"):
            parse_program("x = 1\ny = 2")

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError):
            parse_program("x = foo.bar\ny = 0\nz = 0")

    def test_duplicate_axis(self):
        with pytest.raises(DuplicateAxisError):
            parse_program("x = 1\nx = 2\ny = 0\nz = 0")

    def test_semicolon_separators(self):
        program = parse_program("x = 1; y = 2; z = 3")
        assert eval_program(program, BINDINGS).as_tuple() == (1, 2, 3)

    def test_error_position(self):
        with pytest.raises(DslSyntaxError) as err:
            parse_program("x = 1\ny = (2\nz = 3")
        assert err.value.line == 2

    def test_rejects_trailing_garbage(self):
        with pytest.raises(DslSyntaxError):
            parse_program("x = 1 1\ny = 2\nz = 3")

    def test_rejects_wrong_arity(self):
        with pytest.raises(DslSyntaxError, match="argument"):
            parse_program("x = min(1)\ny = 2\nz = 3")


class TestEval:
    def test_attach_on_top(self):
        program = parse_program("x = 0\ny = 0\nz = base.max.z + part.size.z / 2")
        out = eval_program(program, bindings_with(**{"base.max.z": 1.0, "part.size.z": 0.4}))
        assert out.z == pytest.approx(1.2)

    def test_min_function(self):
        program = parse_program("x = min(base.min.x, 0)\ny = 0\nz = 0")
        out = eval_program(program, bindings_with(**{"base.min.x": -0.5}))
        assert out.x == -0.5

    def test_division_by_zero(self):
        program = parse_program("x = 0\ny = base.size.y / (base.size.y - base.size.y)\nz = 0")
        with pytest.raises(DivisionByZeroError):
            eval_program(program, BINDINGS)

    def test_precedence(self):
        program = parse_program("x = 1 + 2 * 3\ny = 10 - 4 - 3\nz = 8 / 2 / 2")
        assert eval_program(program, BINDINGS).as_tuple() == (7, 3, 2)

    def test_missing_binding(self):
        program = parse_program("x = part.size.x\ny = 0\nz = 0")
        partial = {k: v for k, v in BINDINGS.items() if k != "part.size.x"}
        with pytest.raises(UnboundIdentifierError):
            eval_program(program, partial)

    def test_nonfinite_binding_rejected(self):
        program = parse_program("x = 0\ny = 0\nz = 0")
        with pytest.raises(UnboundIdentifierError):
            eval_program(program, bindings_with(**{"base.min.x": float("inf")}))


class TestRoundTrip:
    def test_fixture_programs(self):
        sources = [
            "x = base.center.x\ny = base.min.y - part.size.y / 2\nz = base.max.z + part.size.z / 2",
            "x = -(base.size.x + 1) * 2\ny = min(1, max(2, 3))\nz = abs(-3)",
            "x = 1 - 2 - 3\ny = 1 - (2 - 3)\nz = 2 / 3 / 4",
        ]
        for src in sources:
            program = parse_program(src)
            assert parse_program(format_program(program)) == program

    def test_random_asts(self):
        rng = random.Random(113)
        for _ in range(300):
            program = random_program(rng)
            assert parse_program(format_program(program)) == program


class TestMajorityVote:
    def test_two_of_three(self):
        samples = [Vec3(1.0, 0, 0), Vec3(1.0, 0, 0), Vec3(2.0, 0, 0)]
        assert majority_vote(samples).x == 1.0

    def test_all_distinct_takes_first(self):
        samples = [Vec3(1.0, 5.0, 9.0), Vec3(2.0, 6.0, 8.0), Vec3(3.0, 7.0, 7.0)]
        assert majority_vote(samples) == Vec3(1.0, 5.0, 9.0)

    def test_rounded_bucket_wins_with_first_representative(self):
        samples = [Vec3(1.0004, 0, 0), Vec3(1.0002, 0, 0), Vec3(5.0, 0, 0)]
        assert majority_vote(samples, VoteConfig(decimals=3)).x == 1.0004

    def test_single_sample_identity(self):
        v = Vec3(0.123, 4.5, -6.7)
        assert majority_vote([v]) == v

    def test_pair_majority(self):
        v, w = Vec3(1, 2, 3), Vec3(9, 9, 9)
        assert majority_vote([v, v, w]) == v

    def test_axes_vote_independently(self):
        samples = [Vec3(1.0, 9.0, 5.0), Vec3(1.0, 8.0, 6.0), Vec3(2.0, 8.0, 7.0)]
        out = majority_vote(samples)
        assert out.as_tuple() == (1.0, 8.0, 5.0)

    def test_permutation_invariant_with_strict_majority(self):
        rng = random.Random(5)
        base = [Vec3(1.2344, 2, 3), Vec3(1.2341, 2, 3), Vec3(9.0, 2, 3)]
        expected = majority_vote(base)
        for _ in range(10):
            shuffled = base[:]
            rng.shuffle(shuffled)
            got = majority_vote(shuffled)
            assert round(got.x, 3) == round(expected.x, 3)

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            majority_vote([])

    def test_matches_oracle_sample(self):
        rng = random.Random(77)
        for _ in range(500):
            n = rng.randint(1, 7)
            values = [rng.choice([1.0, 1.0001, 1.001, 2.0, rng.uniform(0, 3)])
                      for _ in range(n)]
            got = majority_vote([Vec3(v, 0, 0) for v in values]).x
            assert got == vote_axis_oracle(values, 3)


def test_binding_names_cover_namespace():
    assert len(BINDING_NAMES) == 15
    assert "base.center.y" in BINDING_NAMES
    assert "part.size.z" in BINDING_NAMES
    assert set(BINDINGS) == set(BINDING_NAMES)
