import json
import stat
import sys

import numpy as np
import pytest

from knobtune.evaluators import (
    CRASH,
    OK,
    CrashyQuadratic,
    EmbeddedQuadratic,
    EvaluatorSpawnError,
    ExternalCommand,
    SpecialValueCliff,
    default_effective_dims,
    make_embedded_quadratic,
    make_evaluator,
)
from knobtune.pipeline import KnobAssignment
from knobtune.space import effective_numeric_range

from conftest import knob, make_space


def quad_space(n=6):
    return make_space(*[
        knob(f"k{i}", "real", min=0.0, max=1.0, default=0.5) for i in range(n)
    ])


def assignment_for(space, **overrides):
    values = space.defaults()
    values.update(overrides)
    return KnobAssignment(values)


class TestEmbeddedQuadratic:
    def test_peak_at_planted_optimum(self):
        space = quad_space()
        targets = np.array([0.3, 0.6])
        ev = EmbeddedQuadratic(space, (0, 2), targets, peak=100.0)
        out = ev.evaluate(assignment_for(space, k0=0.3, k2=0.6))
        assert out.status == OK
        assert out.value == pytest.approx(100.0)

    def test_non_effective_knob_has_zero_weight(self):
        space = quad_space()
        ev = EmbeddedQuadratic(space, (0, 2), np.array([0.3, 0.6]))
        a = ev.evaluate(assignment_for(space, k1=0.0)).value
        b = ev.evaluate(assignment_for(space, k1=1.0)).value
        assert a == b

    def test_worst_corner_value(self):
        # 8 effective dims, weight 10, targets at distance 1 -> 100 - 80
        space = quad_space(90)
        dims = tuple(range(8))
        ev = EmbeddedQuadratic(space, dims, np.ones(8), weight=10.0, peak=100.0)
        out = ev.evaluate(
            KnobAssignment({k.name: 0.0 for k in space.knobs})
        )
        assert out.value == pytest.approx(20.0)

    def test_noise_comes_from_injected_stream(self):
        space = quad_space()
        a = EmbeddedQuadratic(space, (0,), np.array([0.5]), noise_sd=1.0,
                              rng=np.random.default_rng(7))
        b = EmbeddedQuadratic(space, (0,), np.array([0.5]), noise_sd=1.0,
                              rng=np.random.default_rng(7))
        assign = assignment_for(space)
        assert a.evaluate(assign).value == b.evaluate(assign).value

    def test_pure_when_noise_free(self):
        space = quad_space()
        ev = EmbeddedQuadratic(space, (0,), np.array([0.5]))
        assign = assignment_for(space, k0=0.123)
        assert ev.evaluate(assign).value == ev.evaluate(assign).value

    def test_default_effective_dims_skip_hybrids(self, pg96_space):
        dims = default_effective_dims(pg96_space, 8)
        assert len(dims) == len(set(dims)) == 8
        for i in dims:
            k = pg96_space.knobs[i]
            assert k.kind != "categorical" and not k.special_values


class TestSpecialValueCliff:
    def setup_method(self):
        self.space = make_space(
            knob("flush", "integer", min=0, max=256, special_values=[0], default=0),
            knob("other", "real", min=0.0, max=1.0, default=0.5),
        )
        self.ev = SpecialValueCliff(self.space, "flush")

    def test_special_value_scores_base_plus_bonus(self):
        out = self.ev.evaluate(assignment_for(self.space, flush=0))
        assert out.value == pytest.approx(80.0)

    def test_min_regular_value_is_worst(self):
        out = self.ev.evaluate(assignment_for(self.space, flush=1))
        assert out.value == pytest.approx(50.0)

    def test_max_regular_below_special(self):
        out = self.ev.evaluate(assignment_for(self.space, flush=256))
        assert out.value == pytest.approx(70.0)
        assert out.value < 80.0

    def test_special_strictly_dominates_every_regular_value(self):
        lo, hi = effective_numeric_range(self.space["flush"])
        regulars = [
            self.ev.evaluate(assignment_for(self.space, flush=v)).value
            for v in range(lo, hi + 1, 15)
        ]
        assert max(regulars) <= 80.0 - (self.ev.bonus - self.ev.regular_gain)

    def test_monotone_in_regular_value(self):
        values = [self.ev.evaluate(assignment_for(self.space, flush=v)).value
                  for v in (1, 50, 150, 256)]
        assert values == sorted(values)

    def test_requires_hybrid_knob(self):
        with pytest.raises(ValueError):
            SpecialValueCliff(self.space, "other")


class TestCrashyQuadratic:
    def test_crash_box(self):
        space = quad_space()
        inner = EmbeddedQuadratic(space, (0,), np.array([0.2]))
        ev = CrashyQuadratic(inner, "k1", crash_lo=0.8, crash_hi=1.0)
        assert ev.evaluate(assignment_for(space, k1=0.9)).status == CRASH
        assert ev.evaluate(assignment_for(space, k1=0.5)).status == OK


def write_stub(tmp_path, name, body):
    path = tmp_path / name
    path.write_text("#!" + sys.executable + "\n" + body)
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


STUB_OK = """
import json, sys
args = sys.argv
config = args[args.index("--config") + 1]
output = args[args.index("--output") + 1]
doc = json.load(open(config))
with open(output, "w") as fh:
    json.dump({"status": "ok", "value": 123.0}, fh)
"""

STUB_EXIT_1 = """
import sys
sys.exit(1)
"""

STUB_SLEEP = """
import time
time.sleep(60)
"""

STUB_GARBAGE = """
import sys
args = sys.argv
output = args[args.index("--output") + 1]
open(output, "w").write("not json at all")
"""


class TestExternalCommand:
    def test_protocol_roundtrip(self, tmp_path, mini_space):
        cmd = write_stub(tmp_path, "ok.py", STUB_OK)
        ev = ExternalCommand([cmd], timeout=30)
        out = ev.evaluate(assignment_for(mini_space))
        assert out.status == OK and out.value == 123.0

    def test_config_file_contains_assignment(self, tmp_path, mini_space):
        body = """
import json, sys
args = sys.argv
config = json.load(open(args[args.index("--config") + 1]))
value = float(config["commit_delay"])
with open(args[args.index("--output") + 1], "w") as fh:
    json.dump({"status": "ok", "value": value}, fh)
"""
        cmd = write_stub(tmp_path, "echo.py", body)
        out = ExternalCommand([cmd]).evaluate(
            assignment_for(mini_space, commit_delay=4321)
        )
        assert out.value == 4321.0

    def test_nonzero_exit_is_crash(self, tmp_path, mini_space):
        cmd = write_stub(tmp_path, "fail.py", STUB_EXIT_1)
        assert ExternalCommand([cmd]).evaluate(assignment_for(mini_space)).status == CRASH

    def test_timeout_is_crash(self, tmp_path, mini_space):
        cmd = write_stub(tmp_path, "slow.py", STUB_SLEEP)
        out = ExternalCommand([cmd], timeout=0.5).evaluate(assignment_for(mini_space))
        assert out.status == CRASH
        assert out.wall_time == pytest.approx(0.5, abs=0.4)

    def test_garbled_output_is_crash(self, tmp_path, mini_space):
        cmd = write_stub(tmp_path, "garbage.py", STUB_GARBAGE)
        assert ExternalCommand([cmd]).evaluate(assignment_for(mini_space)).status == CRASH

    def test_missing_output_is_crash(self, tmp_path, mini_space):
        cmd = write_stub(tmp_path, "noop.py", "pass\n")
        assert ExternalCommand([cmd]).evaluate(assignment_for(mini_space)).status == CRASH

    def test_spawn_failure_raises(self, mini_space):
        ev = ExternalCommand(["/nonexistent/command"])
        with pytest.raises(EvaluatorSpawnError):
            ev.evaluate(assignment_for(mini_space))


class TestMakeEvaluator:
    def test_synthetic_grammar(self, pg96_space):
        rng = np.random.default_rng(0)
        ev = make_evaluator(
            "synthetic:embedded_quadratic:noise_sd=0.5,n_effective=4",
            pg96_space, rng,
        )
        assert isinstance(ev, EmbeddedQuadratic)
        assert ev.noise_sd == 0.5 and len(ev.effective_dims) == 4

    def test_cliff_defaults_to_first_hybrid(self, pg96_space):
        ev = make_evaluator("synthetic:special_value_cliff", pg96_space,
                            np.random.default_rng(0))
        assert isinstance(ev, SpecialValueCliff)
        assert ev.knob_name == "backend_flush_after"

    def test_crashy_grammar(self, pg96_space):
        ev = make_evaluator(
            "synthetic:crashy_quadratic:crash_knob=commit_delay,crash_lo=0.9",
            pg96_space, np.random.default_rng(0),
        )
        assert isinstance(ev, CrashyQuadratic)
        assert ev.crash_knob == "commit_delay" and ev.crash_lo == 0.9

    def test_exec_grammar(self, pg96_space):
        ev = make_evaluator("exec:mycmd --flag value", pg96_space,
                            np.random.default_rng(0), timeout=5)
        assert ev.command == ["mycmd", "--flag", "value"]
        assert ev.timeout == 5

    def test_targets_independent_of_session_stream(self, pg96_space):
        a = make_embedded_quadratic(pg96_space, rng=np.random.default_rng(1))
        b = make_embedded_quadratic(pg96_space, rng=np.random.default_rng(999))
        assert np.array_equal(a.targets, b.targets)
        assert a.effective_dims == b.effective_dims

    def test_unknown_kinds_rejected(self, pg96_space):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            make_evaluator("synthetic:nope", pg96_space, rng)
        with pytest.raises(ValueError):
            make_evaluator("weird:thing", pg96_space, rng)
        with pytest.raises(ValueError):
            make_evaluator("synthetic:embedded_quadratic:bogus=1", pg96_space, rng)
