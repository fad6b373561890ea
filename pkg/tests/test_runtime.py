from __future__ import annotations

import io
import threading
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from knot.backends import FunctionBackend, OracleBackend, ReplayStore, UnrecognizedPattern
from knot.lwt import parse_script
from knot.runtime import (
    BackendError,
    ExecutionTrace,
    IndexOutOfRange,
    MissingBinding,
    MissingOutput,
    ScriptValidationError,
    execute_parallel,
    execute_script,
    index_value,
    parse_list,
    render_instruction,
    split_top_level,
)
from knot.tasks.base import read_data

import oracles

TAIL = "Only output number. If contains floating point, round to two decimal places."


def appendix(n: int):
    return parse_script(read_data("fixtures", "arithmetic", f"appendix_{n}.lwt"))


# list parsing ------------------------------------------------------------------

@pytest.mark.parametrize("text, expected", [
    ("[0, 0, 0, 1]", ["0", "0", "0", "1"]),
    ("['57247728', '67594862']", ["57247728", "67594862"]),
    ("hello", ["hello"]),
    ("[]", []),
    ("1, 2", ["1", "2"]),
    ('["it\'s good", "bad, really"]', ["it's good", "bad, really"]),
    ("[[1, 2], [3]]", ["[1, 2]", "[3]"]),
    ("[Japan, New Zealand]", ["Japan", "New Zealand"]),
])
def test_parse_list(text, expected):
    assert parse_list(text) == expected


def test_apostrophe_inside_word_does_not_open_quote():
    assert split_top_level("don't, stop") == ["don't", " stop"]


@given(st.lists(st.text(alphabet="abcXYZ019 ", min_size=1, max_size=6).map(str.strip).filter(bool),
                max_size=6))
def test_parse_list_inverts_rendering(items):
    assert parse_list("[" + ", ".join(items) + "]") == items
    assert parse_list("[" + ", ".join(f"'{x}'" for x in items) + "]") == items


# index_value -------------------------------------------------------------------

def test_index_examples():
    assert index_value("[1, 2, 3]", [1]) == "2"
    assert index_value("[1, 2, 3]", [-1]) == "3"
    assert index_value("['57247728','67594862']", [0, 1]) == "7"


def test_index_error_reports_position():
    with pytest.raises(IndexOutOfRange) as info:
        index_value("[12, 34]", [1, 5])
    assert (info.value.position, info.value.index, info.value.length) == (1, 5, 2)


@given(st.lists(st.integers(0, 999), min_size=1, max_size=5), st.data())
def test_index_matches_python(values, data):
    i = data.draw(st.integers(-len(values), len(values) - 1))
    text = "[" + ", ".join(map(str, values)) + "]"
    assert index_value(text, [i]) == str(values[i])
    j = data.draw(st.integers(-len(str(values[i])), len(str(values[i])) - 1))
    assert index_value(text, [i, j]) == str(values[i])[j]


# rendering ---------------------------------------------------------------------

def test_render_direct_substitution():
    ins = parse_script('(1)=LLM("Add({(0)}[0], {(0)}[1]).")').instructions[0]
    assert render_instruction(ins, {0: "[3, 4]"}, {}) == "Add(3, 4)."


def test_render_without_refs_is_identity():
    ins = parse_script('(0)=LLM("plain text")').instructions[0]
    assert render_instruction(ins, [], {}) == "plain text"


def test_render_appendix_step_one():
    ins = appendix(1).instructions[1]
    got = render_instruction(ins, ["[5, 5, 5, 4, 8, 8, 3, 9]"], {"input": "5*5/5*4+8-8+3*9"})
    assert got == f"Multiply(5, 5). {TAIL}"


def test_render_missing_values():
    ins = parse_script('(3)=LLM("{(2)} {(name)}")').instructions[0]
    with pytest.raises(MissingOutput):
        render_instruction(ins, {}, {"name": "x"})
    with pytest.raises(MissingBinding):
        render_instruction(ins, {2: "v"}, {})


def test_substituted_values_are_trimmed():
    ins = parse_script('(1)=LLM("<{(0)}>")').instructions[0]
    assert render_instruction(ins, {0: "  42\n"}, {}) == "<42>"


# execution ---------------------------------------------------------------------

@pytest.mark.parametrize("n, query", [(1, "5*5/5*4+8-8+3*9"), (2, "1+5+7+8+2-8-7*7")])
def test_appendix_scripts_on_oracle(n, query):
    trace = execute_script(appendix(n), {"input": query}, OracleBackend())
    assert trace.final_answer == oracles.decimal_text(oracles.eval_expression(query))
    assert trace.final_answer == ("47" if n == 1 else "-34")
    assert len(trace.steps) == 8
    assert trace.usage.estimated


def test_single_step_with_replay(tmp_path):
    store = ReplayStore()
    store.add("echo", "ok")
    trace = execute_script(parse_script('(0)=LLM("echo")'), {}, store)
    assert trace.final_answer == "ok"


def test_invalid_script_is_rejected_before_any_call():
    calls = []
    backend = FunctionBackend(lambda p: calls.append(p) or "x")
    with pytest.raises(ScriptValidationError):
        execute_script(parse_script('(0)=LLM("{(Set1)}")'), {"input": "q"}, backend)
    assert calls == []


def test_backend_failure_names_the_step():
    script = parse_script(f'(0)=LLM("Add(1, 2). {TAIL}")\n(1)=LLM("gibberish {{(0)}}")')
    with pytest.raises(BackendError) as info:
        execute_script(script, {}, OracleBackend())
    assert info.value.step == 1
    assert isinstance(info.value.cause, UnrecognizedPattern)
    assert info.value.trace.outputs == ["3"]


def test_record_mode_continues():
    script = parse_script(f'(0)=LLM("nonsense")\n(1)=LLM("Add(1, 2). {TAIL}")')
    trace = execute_script(script, {}, OracleBackend(), on_error="record")
    assert trace.outputs == ["", "3"]
    assert "UnrecognizedPattern" in trace.steps[0].error


def test_out_of_range_index_during_execution():
    script = parse_script('(0)=LLM("Initialize an array of size 3 to zero.")\n(1)=LLM("{(0)}[7]")')
    with pytest.raises(IndexOutOfRange) as info:
        execute_script(script, {}, OracleBackend())
    assert info.value.step == 1


def test_memoize_skips_repeated_prompts():
    calls = []
    backend = FunctionBackend(lambda p: calls.append(p) or "r")
    script = parse_script('(0)=LLM("same")\n(1)=LLM("same")\n(2)=LLM("other")')
    execute_script(script, {}, backend, memoize=True)
    assert calls == ["same", "other"]


def test_trace_jsonl_round_trip():
    trace = execute_script(appendix(1), {"input": "5*5/5*4+8-8+3*9"}, OracleBackend())
    text = trace.to_jsonl()
    lines = text.splitlines()
    assert len(lines) == 9 and '"summary"' in lines[-1]
    again = ExecutionTrace.from_jsonl(text)
    assert again.outputs == trace.outputs and again.indices == trace.indices
    assert [s.prompt for s in again.steps] == [s.prompt for s in trace.steps]
    buf = io.StringIO()
    trace.write_jsonl(buf)
    assert buf.getvalue() == text


# parallel execution ----------------------------------------------------------

class SlowRecorder:
    """Backend that records how many calls overlap."""

    def __init__(self, delay=0.02):
        self.delay = delay
        self.active = 0
        self.peak = 0
        self.lock = threading.Lock()
        self.spans = {}

    def infer(self, prompt):
        with self.lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
        start = time.perf_counter()
        time.sleep(self.delay)
        with self.lock:
            self.active -= 1
        self.spans[prompt] = (start, time.perf_counter())
        return "v"


def test_fan_out_matches_sequential():
    script = parse_script(
        f'(0)=LLM("Given {{(input)}}, Split the numbers without operators. Only output list.")\n'
        f'(1)=LLM("Add({{(0)}}[0], {{(0)}}[1]). {TAIL}")\n'
        f'(2)=LLM("Multiply({{(0)}}[1], {{(0)}}[2]). {TAIL}")\n'
        f'(3)=LLM("Divide({{(0)}}[2], {{(0)}}[0]). {TAIL}")\n'
        f'(4)=LLM("Combine {{(1)}}, {{(2)}}, {{(3)}} in one array.")'
    )
    b = {"input": "3+4*5"}
    seq = execute_script(script, b, OracleBackend())
    par = execute_parallel(script, b, OracleBackend(), max_in_flight=3)
    assert par.outputs == seq.outputs
    assert seq.final_answer == "[7, 20, 1.67]"


def test_parallel_respects_bound():
    lines = ['(0)=LLM("root")'] + [f'({k})=LLM("leaf {k} {{(0)}}")' for k in range(1, 9)]
    rec = SlowRecorder()
    execute_parallel(parse_script("\n".join(lines)), {}, rec, max_in_flight=3)
    assert rec.peak == 3


def test_width_one_never_overlaps():
    lines = ['(0)=LLM("root")'] + [f'({k})=LLM("leaf {k} {{(0)}}")' for k in range(1, 5)]
    rec = SlowRecorder(0.005)
    trace = execute_parallel(parse_script("\n".join(lines)), {}, rec, max_in_flight=1)
    assert rec.peak == 1
    assert [s.index for s in trace.steps] == [0, 1, 2, 3, 4]


def test_chain_is_serialized():
    lines = ['(0)=LLM("s0")'] + [f'({k})=LLM("s{k} {{({k - 1})}}")' for k in range(1, 5)]
    rec = SlowRecorder(0.005)
    execute_parallel(parse_script("\n".join(lines)), {}, rec, max_in_flight=8)
    spans = sorted(rec.spans.values())
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))


def test_parallel_failure_raises_backend_error():
    script = parse_script('(0)=LLM("ok")\n(1)=LLM("bad {(0)}")')

    def fn(p):
        if p.startswith("bad"):
            raise RuntimeError("boom")
        return "fine"

    with pytest.raises(BackendError) as info:
        execute_parallel(script, {}, FunctionBackend(fn), max_in_flight=2)
    assert info.value.step == 1


def test_parallel_rejects_zero_width():
    with pytest.raises(ValueError):
        execute_parallel(parse_script('(0)=LLM("a")'), {}, OracleBackend(), max_in_flight=0)


def test_determinism():
    b = {"input": "5*5/5*4+8-8+3*9"}
    first = execute_script(appendix(1), b, OracleBackend()).outputs
    assert all(execute_script(appendix(1), b, OracleBackend()).outputs == first for _ in range(3))
