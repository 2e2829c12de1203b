import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windcommit.agents import (AuditLog, NullBackend, ScriptedBackend,
                               build_agent1_prompt, build_agent2_prompt,
                               compute_error_stats, deterministic_calibration,
                               extract_prob_new, refine_probabilities,
                               render_probability_vector,
                               validate_probability_vector)
from windcommit.errors import (BackendError, DomainError, ExtractionError,
                               ValidationError)
from windcommit.scenario_tree import (PAPER_DEFAULT_PROBABILITIES,
                                      ProbabilityVector, QuantileSet)

CANON = QuantileSet((0.01, 0.1, 0.5, 0.9, 0.99))
DEFAULTS = ProbabilityVector(PAPER_DEFAULT_PROBABILITIES)

EXAMPLE_REPLY = ("The calculation resulted in the prob_new finally selected: "
                 "0.05, 0.25, 0.4, 0.25, 0.05.")


class TestComputeErrorStats:
    def test_identical_series(self):
        stats = compute_error_stats([3.0, 4.0, 5.0], [3.0, 4.0, 5.0])
        assert stats.mu == 0.0 and stats.sigma == 0.0
        assert stats.errors == (0.0, 0.0, 0.0)

    def test_two_point_sample(self):
        stats = compute_error_stats([5.0, 3.0], [4.0, 4.0])
        assert stats.errors == (1.0, -1.0)
        assert stats.mu == 0.0
        assert stats.sigma == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_three_point_sample(self):
        stats = compute_error_stats([2.0, 4.0, 6.0], [1.0, 2.0, 3.0])
        assert stats.mu == pytest.approx(2.0)
        assert stats.sigma == pytest.approx(1.0)

    def test_single_sample_sigma_zero(self):
        assert compute_error_stats([4.0], [3.0]).sigma == 0.0

    def test_length_mismatch_and_empty(self):
        with pytest.raises(DomainError):
            compute_error_stats([1.0], [1.0, 2.0])
        with pytest.raises(DomainError):
            compute_error_stats([], [])

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=20),
           st.floats(-100, 100))
    @settings(max_examples=50, deadline=None)
    def test_translation_consistency(self, forecast, c):
        actual = [f + 1.5 for f in forecast]
        a = compute_error_stats(actual, forecast)
        b = compute_error_stats([x + c for x in actual], forecast)
        assert b.mu == pytest.approx(a.mu + c, abs=1e-9)
        assert b.sigma == pytest.approx(a.sigma, abs=1e-9)


class TestAgent1Prompt:
    def prompt(self, history=((4.0, 3.0), (5.0, 5.5))):
        stats = compute_error_stats([a for a, _ in history] or [0.0],
                                    [f for _, f in history] or [0.0])
        return build_agent1_prompt(stats, CANON, DEFAULTS, history)

    def test_contains_quantiles_defaults_and_contract(self):
        text = self.prompt()
        assert "prob_new" in text
        assert "[0.01, 0.1, 0.5, 0.9, 0.99]" in text
        assert "[0.05556, 0.24444, 0.4, 0.24444, 0.05556]" in text
        assert "sums to 1" in text
        assert "justification" in text.lower()
        assert "explanation" in text.lower()

    def test_contains_worked_example_formulas(self):
        text = self.prompt()
        assert "e(t) = Actual(t) - Forecasted(t)" in text
        assert "mu = sum(e(t)) / N" in text
        assert "sigma = sqrt(sum((e(t) - mu)^2) / (N - 1))" in text

    def test_empty_history_still_well_formed(self):
        stats = compute_error_stats([3.0], [3.0])
        text = build_agent1_prompt(stats, CANON, DEFAULTS, [])
        assert "no historical data" in text

    def test_stats_embedded(self):
        stats = compute_error_stats([1.0, 3.0], [1.0, 1.0])  # mu=1, sigma~1.414
        text = build_agent1_prompt(stats, CANON, DEFAULTS, [(1.0, 1.0), (3.0, 1.0)])
        assert "mu = 1" in text
        assert "sigma = 1.414213562" in text


class TestExtractProbNew:
    def test_paper_worked_example(self):
        assert extract_prob_new(EXAMPLE_REPLY) == [0.05, 0.25, 0.4, 0.25, 0.05]

    def test_json_shape_after_trigger(self):
        reply = ("As requested, the prob_new finally selected is given below.\n"
                 "{ 'prob_new': [0.05, 0.25, 0.4, 0.25, 0.05] }")
        assert extract_prob_new(reply) == [0.05, 0.25, 0.4, 0.25, 0.05]

    def test_missing_phrase(self):
        with pytest.raises(ExtractionError):
            extract_prob_new("no probabilities here")

    def test_wrong_count(self):
        with pytest.raises(ExtractionError):
            extract_prob_new("the prob_new finally selected: 0.5, 0.5")

    def test_case_insensitive(self):
        reply = "THE PROB_NEW FINALLY SELECTED: 0.1, 0.2, 0.4, 0.2, 0.1"
        assert extract_prob_new(reply) == [0.1, 0.2, 0.4, 0.2, 0.1]

    @given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=5, max_size=5))
    @settings(max_examples=100, deadline=None)
    def test_json_render_round_trip(self, values):
        reply = ("the prob_new finally selected:\n"
                 "{ 'prob_new': " + json.dumps(values) + " }")
        assert extract_prob_new(reply) == pytest.approx(values, rel=1e-12)


class TestValidateProbabilityVector:
    def test_accepts_exact(self):
        v = validate_probability_vector([0.05, 0.25, 0.4, 0.25, 0.05], 5)
        assert v.p == (0.05, 0.25, 0.4, 0.25, 0.05)

    def test_renormalizes_small_drift(self):
        raw = [0.1, 0.2, 0.4, 0.2, 0.0999]
        v = validate_probability_vector(raw, 5)
        assert sum(v.p) == pytest.approx(1.0, abs=1e-15)
        assert v.p == pytest.approx([x / 0.9999 for x in raw], rel=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError) as e:
            validate_probability_vector([0.5, -0.1, 0.2, 0.2, 0.2], 5)
        assert e.value.reason == "negativity"

    def test_rejects_wrong_length(self):
        with pytest.raises(ValidationError) as e:
            validate_probability_vector([0.5, 0.5], 5)
        assert e.value.reason == "length"

    def test_rejects_sum_drift(self):
        with pytest.raises(ValidationError) as e:
            validate_probability_vector([0.3, 0.3, 0.3, 0.3, 0.3], 5)
        assert e.value.reason == "sum"


class TestDeterministicCalibration:
    def test_all_zero_errors_full_shrink(self):
        stats = compute_error_stats([1.0] * 4, [1.0] * 4)
        v = deterministic_calibration(stats, CANON, DEFAULTS, floor=0.01, shrink=1.0)
        expected = np.array([0.01, 0.01, 1.0, 0.01, 0.01]) / 1.04
        assert v.p == pytest.approx(expected, rel=1e-12)

    def test_zero_shrink_returns_defaults(self):
        stats = compute_error_stats([5.0, 1.0], [2.0, 2.0])
        v = deterministic_calibration(stats, CANON, DEFAULTS, shrink=0.0)
        # defaults already exceed the floor, so the blend is the identity
        assert v.p == pytest.approx(DEFAULTS.p, rel=1e-12)

    def test_symmetric_sample_palindromic_output(self):
        errors = [0.8, -0.8, 1.7, -1.7, 0.2, -0.2]
        stats = compute_error_stats(errors, [0.0] * len(errors))
        v = deterministic_calibration(stats, CANON, DEFAULTS, shrink=1.0)
        assert v.p == pytest.approx(tuple(reversed(v.p)), rel=1e-10)

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=30),
           st.floats(0, 1))
    @settings(max_examples=60, deadline=None)
    def test_floor_and_unit_sum(self, errors, shrink):
        stats = compute_error_stats(errors, [0.0] * len(errors))
        v = deterministic_calibration(stats, CANON, DEFAULTS, shrink=shrink)
        floor = 0.01
        assert all(p >= floor / (1 + len(v.p) * floor) - 1e-12 for p in v.p)
        assert sum(v.p) == pytest.approx(1.0, abs=1e-12)


class TestRefineProbabilities:
    def stats(self):
        return compute_error_stats([4.0, 5.0], [4.5, 4.5])

    def test_llm_path_with_scripted_backend(self):
        audit = AuditLog()
        backend = ScriptedBackend([EXAMPLE_REPLY])
        vec, tag = refine_probabilities(backend, self.stats(), CANON, DEFAULTS,
                                        audit=audit)
        assert tag == "llm"
        assert vec.p == pytest.approx([0.05, 0.25, 0.4, 0.25, 0.05], rel=1e-12)
        assert len(audit.exchanges) == 2  # agent 1 + agent 2

    def test_null_backend_falls_back(self):
        vec, tag = refine_probabilities(NullBackend(), self.stats(), CANON, DEFAULTS)
        assert tag == "fallback"
        expected = deterministic_calibration(self.stats(), CANON, DEFAULTS)
        assert vec.p == expected.p

    def test_garbage_then_valid_reply(self):
        audit = AuditLog()
        backend = ScriptedBackend(["no numbers in this one", EXAMPLE_REPLY])
        vec, tag = refine_probabilities(backend, self.stats(), CANON, DEFAULTS,
                                        max_retries=1, audit=audit)
        assert tag == "llm"
        assert vec.p == pytest.approx([0.05, 0.25, 0.4, 0.25, 0.05], rel=1e-12)
        assert len(audit.exchanges) == 2

    def test_persistent_garbage_exhausts_retries(self):
        audit = AuditLog()
        backend = ScriptedBackend(["garbage"])
        vec, tag = refine_probabilities(backend, self.stats(), CANON, DEFAULTS,
                                        max_retries=2, audit=audit)
        assert tag == "fallback"
        assert sum(vec.p) == pytest.approx(1.0, abs=1e-12)
        assert len(audit.exchanges) == 2 * 3  # three attempts, two calls each

    def test_audit_log_file(self, tmp_path):
        path = tmp_path / "audit.jsonl"
        refine_probabilities(ScriptedBackend([EXAMPLE_REPLY]), self.stats(),
                             CANON, DEFAULTS, audit=AuditLog(path))
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["direction"] for r in records] == ["agent1", "agent2", "outcome"]
        assert records[-1]["payload"]["provenance"] == "llm"

    @given(st.text(max_size=300))
    @settings(max_examples=200, deadline=None)
    def test_always_returns_valid_vector(self, reply):
        backend = ScriptedBackend([reply if reply.strip() else "empty"])
        vec, tag = refine_probabilities(backend, self.stats(), CANON, DEFAULTS,
                                        max_retries=0)
        assert tag in ("llm", "fallback")
        assert len(vec.p) == 5
        assert all(p >= 0 for p in vec.p)
        assert sum(vec.p) == pytest.approx(1.0, abs=1e-9)


def test_render_probability_vector():
    assert render_probability_vector(PAPER_DEFAULT_PROBABILITIES) == \
        "[0.05556, 0.24444, 0.4, 0.24444, 0.05556]"


def test_agent2_prompt_embeds_reply_and_contract():
    text = build_agent2_prompt("some upstream answer")
    assert "the prob_new finally selected" in text
    assert "prob_new" in text
    assert "some upstream answer" in text
    assert "JSON" in text
