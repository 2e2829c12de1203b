"""Two-agent probability calibration pipeline.

Agent 1 is asked to revise the branch probabilities from forecast-error
statistics; Agent 2 extracts the final vector from Agent 1's free-form
answer. Any failure along the way falls back to a deterministic statistical
calibration so the engine always has a usable vector.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .errors import BackendError, DomainError, ExtractionError, ValidationError
from .scenario_tree import (ProbabilityVector, QuantileSet, inverse_normal_cdf,
                            midpoint_boundaries)

TRIGGER_PHRASE = "the prob_new finally selected"
DEFAULT_SUM_TOL = 1e-3
DEFAULT_FLOOR = 0.01
DEFAULT_SHRINK = 0.5


@dataclass(frozen=True)
class ErrorStats:
    """Forecast-error sample statistics (sample std, N-1 denominator)."""

    errors: tuple
    mu: float
    sigma: float
    count: int


def compute_error_stats(actual, forecast) -> ErrorStats:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.ndim != 1 or a.shape != f.shape:
        raise DomainError("actual and forecast must be 1-D series of equal length")
    if a.size == 0:
        raise DomainError("error statistics need at least one sample")
    e = a - f
    mu = float(np.mean(e))
    sigma = float(np.std(e, ddof=1)) if e.size > 1 else 0.0
    return ErrorStats(tuple(float(v) for v in e), mu, sigma, int(e.size))


class ChatBackend:
    """Minimal chat interface: send an ordered message list, get a text reply."""

    def send(self, messages) -> str:
        raise NotImplementedError


class NullBackend(ChatBackend):
    """Always fails; forces the deterministic fallback path."""

    def send(self, messages):
        raise BackendError("null backend: no LLM configured")


class ScriptedBackend(ChatBackend):
    """Replays configured replies in order, cycling when exhausted."""

    def __init__(self, replies):
        self.replies = list(replies)
        if not self.replies:
            raise DomainError("scripted backend needs at least one reply")
        self._cursor = 0

    @classmethod
    def from_file(cls, path):
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        return cls(lines)

    def send(self, messages):
        reply = self.replies[self._cursor % len(self.replies)]
        self._cursor += 1
        return reply


class HttpChatBackend(ChatBackend):
    """Chat-completions HTTP client. The API key comes from the environment
    (WINDCOMMIT_API_KEY), never from config files."""

    def __init__(self, base_url, model, api_key, temperature=None,
                 timeout=60.0, max_retries=2):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout
        self.max_retries = max_retries

    def send(self, messages):
        payload = {"model": self.model, "messages": list(messages)}
        if self.temperature is not None:
            payload["temperature"] = self.temperature
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last = None
        for _ in range(self.max_retries + 1):
            try:
                resp = requests.post(f"{self.base_url}/chat/completions",
                                     json=payload, headers=headers,
                                     timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as e:
                last = e
        raise BackendError(f"chat backend failed after retries: {last}")


class AuditLog:
    """Append-only record of every agent exchange and outcome.

    Each record is one JSON line: timestamp, direction (agent1/agent2/outcome),
    payload. Kept in memory as well so tests can inspect a session."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.records = []

    def record(self, direction, payload):
        rec = {"timestamp": time.time(), "direction": direction, "payload": payload}
        self.records.append(rec)
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(rec) + "\n")

    @property
    def exchanges(self):
        return [r for r in self.records if r["direction"] in ("agent1", "agent2")]


def _render_vector(v):
    return "[" + ", ".join(f"{x:.5f}".rstrip("0").rstrip(".") if "." in f"{x:.5f}" else f"{x:.5f}"
                           for x in v) + "]"


def render_probability_vector(v) -> str:
    """Bracketed decimal rendering used in prompts and reports."""
    return _render_vector(list(v))


def build_agent1_prompt(stats: ErrorStats, quantiles: QuantileSet,
                        default_probs: ProbabilityVector, history) -> str:
    """Agent-1 task: revise branch probabilities from observed forecast errors.

    ``history`` is a sequence of (actual, forecast) pairs shown to the agent.
    """
    q_text = render_probability_vector(quantiles.levels)
    p_text = render_probability_vector(default_probs.p)
    if history:
        hist_lines = "\n".join(f"  step {i + 1}: actual={a:.6g} GW, forecast={f:.6g} GW"
                               for i, (a, f) in enumerate(history))
    else:
        hist_lines = "  (no historical data available yet)"
    return f"""You are assisting with a wind power scenario tree built on an AR(1) process.
Five fixed quantiles {q_text} represent possible deviations (errors) in wind
power forecasts. The engine initially assigns the probability vector {p_text}
to these five branches.

Your task is to revise these probabilities based on historical forecast error
data. The new probability vector prob_new must satisfy:
- A new probability vector prob_new associated with the same five quantiles
  remains non-negative and sums to 1.
- A justification or reasoning for how the new distribution was derived
  (which may involve statistical calibration or heuristic adjustments).
- An explanation of why the revised probabilities may yield more realistic or
  robust outcomes for wind power planning compared to the original
  symmetrical distribution.

Worked example of the statistics involved:
a) Compute the errors: for each pair of actual and forecasted values,
   e(t) = Actual(t) - Forecasted(t)
b) Derive the mean and standard deviation of the errors:
   mu = sum(e(t)) / N
   sigma = sqrt(sum((e(t) - mu)^2) / (N - 1))

Historical data (actual vs forecast wind power):
{hist_lines}

Computed statistics over {stats.count} samples:
  mean error mu = {stats.mu:.10g} GW
  sample standard deviation sigma = {stats.sigma:.10g} GW

End your answer with a sentence of the form:
"the prob_new finally selected: p1, p2, p3, p4, p5"
"""


def build_agent2_prompt(agent1_reply: str) -> str:
    """Agent-2 task: extract the final vector from Agent 1's answer."""
    return f"""Your task is to extract 'the prob_new finally selected' from the given text.
Search for the exact phrase to locate the probability values. The final output
must strictly follow this JSON format:
{{ 'prob_new': [p1, p2, p3, p4, p5] }}

For example:
Input: 'The calculation resulted in the prob_new finally selected: 0.05, 0.25, 0.4, 0.25, 0.05.'
Output: {{ 'prob_new': [0.05, 0.25, 0.4, 0.25, 0.05] }}

Make sure to extract only the specified values and return them in the correct
format. Include the phrase "the prob_new finally selected" before the JSON.

Text:
{agent1_reply}
"""


_NUMBER = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_NUMBER_RUN = re.compile(
    r"[^0-9\[+-]{0,80}?((?:[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?[,;:\s]*)+)")


def extract_prob_new(reply: str, expected_len: int = 5):
    """Locate the trigger phrase and parse the probability list that follows.

    Accepts plain comma/space lists and the bracketed JSON shape; returns the
    raw (unvalidated) list of floats."""
    m = re.search(re.escape(TRIGGER_PHRASE), reply, re.IGNORECASE)
    if not m:
        raise ExtractionError(f"phrase {TRIGGER_PHRASE!r} not found in reply")
    tail = reply[m.end():]
    bracket = tail.find("[")
    if bracket != -1:
        close = tail.find("]", bracket)
        if close == -1:
            raise ExtractionError("unterminated bracketed list after trigger phrase")
        numbers = _NUMBER.findall(tail[bracket + 1:close])
    else:
        run = _NUMBER_RUN.match(tail)
        if not run:
            raise ExtractionError("no numeric list found after trigger phrase")
        numbers = _NUMBER.findall(run.group(1))
    if len(numbers) != expected_len:
        raise ExtractionError(
            f"expected {expected_len} probabilities, found {len(numbers)}")
    try:
        return [float(x) for x in numbers]
    except ValueError as e:
        raise ExtractionError(f"unparseable number in reply: {e}") from e


def validate_probability_vector(v, expected_len: int,
                                sum_tol: float = DEFAULT_SUM_TOL) -> ProbabilityVector:
    """Reject wrong length / negative entries / sum drift beyond sum_tol;
    otherwise renormalize to sum exactly 1."""
    values = [float(x) for x in v]
    if len(values) != expected_len:
        raise ValidationError(
            f"expected {expected_len} entries, got {len(values)}", "length")
    if any(x < 0 for x in values):
        raise ValidationError("probability vector has a negative entry", "negativity")
    total = sum(values)
    if abs(total - 1.0) > sum_tol:
        raise ValidationError(f"probabilities sum to {total}, beyond tolerance", "sum")
    return ProbabilityVector(tuple(x / total for x in values))


def deterministic_calibration(stats: ErrorStats, quantiles: QuantileSet,
                              default_probs: ProbabilityVector,
                              floor: float = DEFAULT_FLOOR,
                              shrink: float = DEFAULT_SHRINK) -> ProbabilityVector:
    """Offline fallback: empirical bin frequencies of standardized errors,
    blended with the defaults, floored and renormalized."""
    if not 0.0 <= shrink <= 1.0:
        raise DomainError("shrink must be in [0, 1]")
    if floor < 0:
        raise DomainError("floor must be nonnegative")
    boundaries = midpoint_boundaries(quantiles)
    thresholds = np.array([inverse_normal_cdf(b) for b in boundaries])
    sigma = stats.sigma if stats.sigma > 0 else 1e-9
    z = (np.asarray(stats.errors) - stats.mu) / sigma
    bins = np.searchsorted(thresholds, z)
    counts = np.bincount(bins, minlength=len(quantiles)).astype(float)
    empirical = counts / counts.sum()
    p = shrink * empirical + (1.0 - shrink) * default_probs.as_array()
    p = np.maximum(p, floor)
    return ProbabilityVector(tuple(p / p.sum()))


def refine_probabilities(backend: ChatBackend, stats: ErrorStats,
                         quantiles: QuantileSet, default_probs: ProbabilityVector,
                         history=(), max_retries: int = 2, audit: AuditLog | None = None,
                         floor: float = DEFAULT_FLOOR,
                         shrink: float = DEFAULT_SHRINK):
    """Run the two-agent pipeline with retries; returns (vector, provenance)
    where provenance is 'llm' or 'fallback'."""
    audit = audit if audit is not None else AuditLog()
    expected = len(quantiles)
    prompt1 = build_agent1_prompt(stats, quantiles, default_probs, history)
    for attempt in range(max_retries + 1):
        try:
            reply1 = backend.send([{"role": "user", "content": prompt1}])
            audit.record("agent1", {"attempt": attempt, "prompt": prompt1,
                                    "reply": reply1})
            prompt2 = build_agent2_prompt(reply1)
            reply2 = backend.send([{"role": "user", "content": prompt2}])
            audit.record("agent2", {"attempt": attempt, "prompt": prompt2,
                                    "reply": reply2})
            vec = validate_probability_vector(
                extract_prob_new(reply2, expected), expected)
            audit.record("outcome", {"attempt": attempt, "provenance": "llm",
                                     "probabilities": list(vec.p)})
            return vec, "llm"
        except (BackendError, ExtractionError, ValidationError) as e:
            audit.record("outcome", {"attempt": attempt, "error": str(e)})
    vec = deterministic_calibration(stats, quantiles, default_probs, floor, shrink)
    audit.record("outcome", {"provenance": "fallback", "probabilities": list(vec.p)})
    return vec, "fallback"
