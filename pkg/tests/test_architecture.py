import importlib.resources
import json

import pytest

from setdecomp.architecture import (Algebraic, Architecture, Integrator,
                                    SubFunction, architecture_from_dict,
                                    architecture_to_dict, classify,
                                    load_architecture, validate_coverage)
from setdecomp.errors import (CoverageViolation, ParseError, ProducerConflict,
                              ValidationError)
from setdecomp.expr import BinOp, Num, Var, parse_expr
from setdecomp.intervals import RangeMap
from setdecomp.requirements import FunctionalRequirement

CRUISE = str(importlib.resources.files("setdecomp") / "data" / "cruise.json")


@pytest.fixture(scope="module")
def cruise():
    arch, _ = load_architecture(CRUISE)
    return arch


def _tiny_arch(top_inputs=None):
    """x --f--> y, with optional mismatched top contract."""
    top = FunctionalRequirement("top",
                                inputs=top_inputs or RangeMap.of(x=(0, 1)),
                                outputs=RangeMap.of(y=(0, 10)))
    f = SubFunction(id="f", kind=Algebraic(exprs=(("y", Var("x")),)),
                    inputs=RangeMap.of(x=(-1, 2)), outputs=RangeMap.of(y=(-5, 20)))
    return Architecture(top=top, subfunctions=(f,))


class TestValidation:
    def test_duplicate_ids_rejected(self):
        f = SubFunction(id="f", kind=Algebraic(exprs=(("y", Var("x")),)),
                        inputs=RangeMap.of(x=(0, 1)), outputs=RangeMap.of(y=(0, 1)))
        g = SubFunction(id="f", kind=Algebraic(exprs=(("z", Var("y")),)),
                        inputs=RangeMap.of(y=(0, 1)), outputs=RangeMap.of(z=(0, 1)))
        with pytest.raises(ValidationError):
            Architecture(top=FunctionalRequirement("t"), subfunctions=(f, g))

    def test_undeclared_expression_variable_rejected(self):
        f = SubFunction(id="f", kind=Algebraic(exprs=(("y", Var("ghost")),)),
                        outputs=RangeMap.of(y=(0, 1)))
        with pytest.raises(ValidationError, match="ghost"):
            Architecture(top=FunctionalRequirement("t"), subfunctions=(f,))

    def test_integrator_state_must_be_an_output(self):
        f = SubFunction(id="f", kind=Integrator("s", "d", "s0"),
                        inputs=RangeMap.of(d=(0, 1), s0=(0, 1)),
                        outputs=RangeMap.of(y=(0, 1)))
        with pytest.raises(ValidationError):
            Architecture(top=FunctionalRequirement("t"), subfunctions=(f,))

    def test_producer_conflict(self):
        f = SubFunction(id="f", kind=Algebraic(exprs=(("y", Num(1.0)),)),
                        outputs=RangeMap.of(y=(0, 1)))
        g = SubFunction(id="g", kind=Algebraic(exprs=(("y", Num(2.0)),)),
                        outputs=RangeMap.of(y=(0, 1)))
        arch = Architecture(top=FunctionalRequirement("t"), subfunctions=(f, g))
        with pytest.raises(ProducerConflict):
            arch.producer_of()

    def test_coverage_violation_names_the_variable(self):
        top = FunctionalRequirement("top", inputs=RangeMap.of(q=(0, 1)),
                                    outputs=RangeMap.of(y=(0, 1)))
        f = SubFunction(id="f", kind=Algebraic(exprs=(("y", Var("x")),)),
                        inputs=RangeMap.of(x=(0, 1)), outputs=RangeMap.of(y=(0, 1)))
        arch = Architecture(top=top, subfunctions=(f,))
        with pytest.raises(CoverageViolation, match="q"):
            validate_coverage(arch)


class TestClassification:
    def test_cruise_groups(self, cruise):
        cls = classify(cruise)
        names = {label: {v.name for v in group}
                 for label, group in cls.groups().items()}
        assert names["x"] == {"v_0", "v_r"}
        assert names["x_tilde"] == set()
        assert names["c"] == set()
        assert names["c_tilde"] == {"omega_m"}
        assert names["u"] == set()
        assert names["u_tilde"] == {"m"}
        assert names["y1"] == set()
        assert names["y2"] == {"vdot", "Fr", "F", "Fa", "T", "u", "omega"}
        assert names["y3"] == {"v"}
        assert names["y4"] == set()

    def test_groups_are_exclusive_and_exhaustive(self, cruise):
        cls = classify(cruise)
        seen = [v.name for g in cls.groups().values() for v in g]
        assert len(seen) == len(set(seen))
        assert set(seen) == {"v_0", "v_r", "m", "omega_m", "v", "vdot", "Fr",
                             "F", "Fa", "T", "u", "omega"}

    def test_design_and_performance_spaces(self, cruise):
        cls = classify(cruise)
        assert {v.name for v in cls.design_names()} == {"v_0", "v_r", "m", "omega_m"}
        assert len(cls.performance_names()) == 8

    def test_tiny_arch_classifies(self):
        cls = classify(_tiny_arch())
        assert {v.name for v in cls.x} == {"x"}
        # y is a top output consumed by nothing inside: terminal (y4), not fed back (y3)
        assert {v.name for v in cls.y4} == {"y"}
        assert {v.name for v in cls.y3} == set()


class TestJson:
    def test_cruise_round_trip(self, cruise):
        doc = architecture_to_dict(cruise)
        again = architecture_from_dict(json.loads(json.dumps(doc)))
        assert again == cruise

    def test_malformed_json_reports_position(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"top": ???}')
        with pytest.raises(ParseError, match=r"line 1"):
            load_architecture(bad)

    def test_missing_section_is_a_validation_error(self, tmp_path):
        f = tmp_path / "incomplete.json"
        f.write_text('{"top": {"name": "t"}}')
        with pytest.raises(ValidationError):
            load_architecture(f)

    def test_expression_parsing(self):
        e = parse_expr(["+", ["var", "a"], 2])
        assert e == BinOp("+", Var("a"), Num(2.0))
        with pytest.raises(ParseError):
            parse_expr(["pow", ["var", "a"], 0.5])
        with pytest.raises(ParseError):
            parse_expr(["frobnicate", 1, 2])


def test_cruise_has_eight_subfunctions(cruise):
    assert [sf.id for sf in cruise.subfunctions] == [f"f{i}" for i in range(1, 9)]
    kinds = {sf.id: type(sf.kind).__name__ for sf in cruise.subfunctions}
    assert kinds["f1"] == "Integrator"
    assert kinds["f8"] == "Algebraic"
    f8 = next(sf for sf in cruise.subfunctions if sf.id == "f8")
    assert [s.name for s in f8.kind.states] == ["e8"]
