import json

import pytest
from hypothesis import given, settings, strategies as st

from verforge.errors import WitnessError
from verforge.miniver import check
from verforge.results import (
    Assessment,
    ErrorTrace,
    Mark,
    TraceEvent,
    annotate_relevance,
    auto_assess,
    failure_signature,
    map_coverage,
    mark_signature,
    merge_coverage,
    parse_witness,
    verdict_statistics,
)

from test_miniver import MODULE_MODEL, REACH, unbalanced_program


@pytest.fixture(scope="module")
def unbalanced_check():
    return check(unbalanced_program(), REACH)


class TestParseWitness:
    def test_roundtrip_from_checker(self, unbalanced_check):
        program = unbalanced_program()
        trace = parse_witness(unbalanced_check.witness, program)
        assert trace.events
        assert trace.events[-1].kind == "error"
        # every event line was visited by the checker's own trace replay
        covered = set(unbalanced_check.coverage["cil.i"]["covered"])
        for event in trace.events:
            if event.line:
                assert event.line in covered

    def test_terminal_event_is_the_assert(self, unbalanced_check):
        program = unbalanced_program()
        trace = parse_witness(unbalanced_check.witness, program)
        assert trace.events[-1].function == "ldv_module_put"
        assert "ldv_assert" in trace.events[-1].text

    def test_single_edge_witness(self):
        doc = """<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <graph edgedefault="directed">
    <node id="N0"/>
    <node id="N1"><data key="violation">true</data></node>
    <edge source="N0" target="N1">
      <data key="startline">3</data>
      <data key="enterFunction">main</data>
    </edge>
  </graph>
</graphml>
"""
        trace = parse_witness(doc, "int a;\nint b;\nint main() { }\n")
        assert len(trace.events) == 1
        assert trace.events[0].kind == "error"

    def test_empty_document(self):
        with pytest.raises(WitnessError):
            parse_witness("", "")

    def test_no_violation(self):
        doc = """<?xml version="1.0"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <graph edgedefault="directed">
    <node id="N0"/><node id="N1"/>
    <edge source="N0" target="N1"><data key="startline">1</data></edge>
  </graph>
</graphml>
"""
        with pytest.raises(WitnessError):
            parse_witness(doc, "")

    def test_line_map_translation(self, unbalanced_check):
        program = unbalanced_program()
        total = program.count("\n") + 1
        line_map = [("module.c", i + 1) for i in range(total)]
        trace = parse_witness(unbalanced_check.witness, program, line_map)
        assert all(e.file == "module.c" for e in trace.events)


class TestAnnotate:
    def test_refcounter_notes_attach(self, unbalanced_check):
        program = unbalanced_program()
        trace = parse_witness(unbalanced_check.witness, program)
        for event in trace.events:
            event.file = "module.c"
        annotate_relevance(trace, {"module.c": program})
        notes = [e.note for e in trace.events if e.note]
        assert any(n == "Initialize module reference counter at the beginning" for n in notes)
        terminal = trace.events[-1]
        assert terminal.assert_desc == (
            "Decremented module reference counter should be greater than its initial state"
        )
        assert terminal.relevant

    def test_unannotated_model_events_hidden(self):
        trace = ErrorTrace(
            events=[
                TraceEvent("env.c", 2, "statement", function="f"),
                TraceEvent("prog.c", 5, "statement", function="g"),
                TraceEvent("env.c", 9, "error", function="f"),
            ]
        )
        annotate_relevance(trace, {"env.c": "int x;\nint y;\n" + "\n" * 10})
        assert trace.events[0].relevant is False
        assert trace.events[1].relevant is True  # program fragment event

    def test_trace_without_model_events_unchanged(self):
        trace = ErrorTrace(events=[TraceEvent("prog.c", 1, "statement")])
        before = [e.relevant for e in trace.events]
        annotate_relevance(trace, {})
        assert [e.relevant for e in trace.events] == before

    def test_unexecuted_notes_absent(self, unbalanced_check):
        # a NOTE on a line the trace never visits must not appear
        program = unbalanced_program()
        trace = parse_witness(unbalanced_check.witness, program)
        for event in trace.events:
            event.file = "module.c"
        annotate_relevance(trace, {"module.c": program})
        notes = {e.note for e in trace.events if e.note}
        assert "Increment module reference counter" not in notes


class FakeBase:
    def __init__(self, root_dir, files, definitions=None):
        from verforge.buildbase import Callgraph, Definition

        self.root_dir = root_dir
        self.source_files = set(files)
        self.callgraph = Callgraph(
            definitions={
                n: Definition(f, s, e) for n, (f, s, e) in (definitions or {}).items()
            }
        )


class TestCoverage:
    def test_union_merge(self, tmp_path):
        (tmp_path / "a.c").write_text("\n".join(f"l{i}" for i in range(1, 21)))
        base = FakeBase(tmp_path, ["a.c"])
        r1 = {"a.c": {"covered": list(range(1, 11))}}
        r2 = {"a.c": {"covered": list(range(6, 21))}}
        merged = merge_coverage([r1, r2], base)
        # oracle: set union size
        assert merged.files["a.c"].lines_covered == len(set(range(1, 11)) | set(range(6, 21)))

    def test_idempotent(self, tmp_path):
        (tmp_path / "a.c").write_text("x\n" * 9 + "x")
        base = FakeBase(tmp_path, ["a.c"])
        r = {"a.c": {"covered": [1, 2, 3]}}
        once = merge_coverage([r], base)
        twice = merge_coverage([r, r], base)
        assert once.files["a.c"].lines_covered == twice.files["a.c"].lines_covered

    def test_disjoint_counts(self, tmp_path):
        (tmp_path / "a.c").write_text("x\n" * 40)
        base = FakeBase(tmp_path, ["a.c"])
        r1 = {"a.c": {"covered": list(range(1, 11))}}
        r2 = {"a.c": {"covered": list(range(11, 26))}}
        assert merge_coverage([r1, r2], base).files["a.c"].lines_covered == 25

    def test_directory_rollup_is_sum_of_children(self, tmp_path):
        (tmp_path / "hid").mkdir()
        (tmp_path / "hid" / "a.c").write_text("x\n" * 19 + "x")
        (tmp_path / "hid" / "b.c").write_text("x\n" * 9 + "x")
        base = FakeBase(tmp_path, ["hid/a.c", "hid/b.c"])
        merged = merge_coverage(
            [{"hid/a.c": {"covered": [1, 2]}, "hid/b.c": {"covered": [3]}}], base
        )
        agg = merged.directories["hid"]
        assert agg.lines_total == 30
        assert agg.lines_covered == 3

    def test_all_files_denominator(self, tmp_path):
        (tmp_path / "a.c").write_text("x\n" * 10)
        (tmp_path / "b.c").write_text("x\n" * 10)
        base = FakeBase(tmp_path, ["a.c", "b.c"])
        verified = merge_coverage([{"a.c": {"covered": [1]}}], base, denominator="verified")
        everything = merge_coverage([{"a.c": {"covered": [1]}}], base, denominator="all")
        assert "b.c" not in verified.files
        assert "b.c" in everything.files

    def test_function_coverage(self, tmp_path):
        (tmp_path / "a.c").write_text("x\n" * 30)
        base = FakeBase(
            tmp_path, ["a.c"],
            definitions={"f": ("a.c", 1, 10), "g": ("a.c", 12, 20), "h": ("a.c", 22, 30)},
        )
        merged = merge_coverage([{"a.c": {"covered": [2, 3, 13]}}], base)
        assert merged.files["a.c"].functions_total == 3
        assert merged.files["a.c"].functions_covered == 2

    def test_hitlist_input(self, tmp_path):
        from verforge.results import parse_hitlist

        text = "a.c:1\na.c:2\nsub/b.c:4\n# comment\na.c:2\n"
        report = parse_hitlist(text)
        assert report == {"a.c": {"covered": [1, 2]}, "sub/b.c": {"covered": [4]}}
        (tmp_path / "a.c").write_text("x\n" * 10)
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "b.c").write_text("x\n" * 10)
        base = FakeBase(tmp_path, ["a.c", "sub/b.c"])
        merged = merge_coverage([report], base)
        assert merged.files["a.c"].lines_covered == 2

    def test_map_coverage_through_line_map(self):
        line_map = [("a.c", 0), ("a.c", 1), ("a.c", 2), ("b.c", 1)]
        raw = {"cil.i": {"covered": [2, 3, 4], "total_lines": 4}}
        assert map_coverage(raw, line_map) == {
            "a.c": {"covered": [1, 2]},
            "b.c": {"covered": [1]},
        }


class TestStatistics:
    def test_memory_safety_row(self):
        stats = verdict_statistics(
            ["Unsafe"] * 280 + ["Safe"] * 910 + ["Unknown"] * 869
        )
        assert stats["kinds"]["percentages"] == {"Unsafe": 14, "Safe": 44, "Unknown": 42}
        assert sum(stats["kinds"]["percentages"].values()) == 100

    def test_single_verdict(self):
        stats = verdict_statistics(["Safe"])
        assert stats["kinds"]["percentages"] == {"Safe": 100}

    def test_false_alarm_reasons(self):
        stats = verdict_statistics(
            [],
            false_alarm_classes={
                "environment": 123, "verifier": 114, "other": 9, "requirement_spec": 0,
            },
        )
        assert stats["false_alarms"]["percentages"] == {
            "environment": 50, "verifier": 46, "other": 4, "requirement_spec": 0,
        }

    def test_unknown_reasons_counted(self):
        class V:
            def __init__(self, kind, reason=""):
                self.kind = kind
                self.reason = reason

        stats = verdict_statistics([V("Unknown", "timeout: x"), V("Unknown", "timeout: y"),
                                    V("Unknown", "tool-failure: z"), V("Safe")])
        assert stats["unknown_reasons"]["counts"] == {"timeout": 2, "tool-failure": 1}

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from(["Safe", "Unsafe", "Unknown"]), min_size=1, max_size=400))
    def test_percentages_sum_near_100(self, kinds):
        stats = verdict_statistics(kinds)
        total = sum(stats["kinds"]["percentages"].values())
        assert 99 <= total <= 101


def _relevant_trace(shift=0):
    return ErrorTrace(
        events=[
            TraceEvent("m.c", 3 + shift, "statement", function="get",
                       note="Increment counter", relevant=True),
            TraceEvent("m.c", 9 + shift, "statement", function="put", relevant=False),
            TraceEvent("m.c", 12 + shift, "error", function="put",
                       assert_desc="Counter underflow", relevant=True),
        ]
    )


class TestMarks:
    def test_signature_ends_with_assert_text(self):
        signature = mark_signature(_relevant_trace())
        assert signature[-1] == ("put", "Counter underflow")

    def test_line_shift_invariance(self):
        assert mark_signature(_relevant_trace()) == mark_signature(_relevant_trace(shift=40))

    def test_different_notes_differ(self):
        a = _relevant_trace()
        b = _relevant_trace()
        b.events[0].note = "Decrement counter"
        assert mark_signature(a) != mark_signature(b)

    def test_auto_assess_matches_twin(self):
        mark = Mark("m1", "false_alarm:environment", "env issue",
                    signature=mark_signature(_relevant_trace()))
        found = auto_assess("task9", _relevant_trace(shift=7), [mark])
        assert found == [Assessment("task9", "m1", "automatic")]

    def test_empty_store(self):
        assert auto_assess("t", _relevant_trace(), []) == []

    def test_failure_reason_matching(self):
        a = failure_signature("parser failed at line 120 after 12s")
        b = failure_signature("parser failed at line 7 after 44s")
        assert a == b
        mark = Mark("m2", "false_alarm:verifier", "crash", signature=a)
        assert auto_assess("t2", "parser failed at line 9 after 9s", [mark])

    def test_history_append_only(self):
        mark = Mark("m", "fault", "desc", signature=("x",))
        mark.revise(description="better words")
        mark.revise(verdict_class="false_alarm:other")
        assert len(mark.history) == 2
        assert mark.history[0].description == "desc"
        assert mark.description == "better words"
