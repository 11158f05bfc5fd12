import json

import pytest

from verforge.buildbase import (
    BuildBase,
    Callgraph,
    CompileCommand,
    Definition,
    build_file_graph,
    extract_symbols,
    ingest_build_base,
)
from verforge.errors import ConfigError, IntegrityError, ParseError


def write_manifest(tmp_path, doc, sources):
    for name, text in sources.items():
        p = tmp_path / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    (tmp_path / "build_base.json").write_text(json.dumps(doc))


class TestExtractSymbols:
    def test_single_definition_no_calls(self):
        syms = extract_symbols("int f(void){return 0;}")
        assert set(syms.definitions) == {"f"}
        assert syms.calls == []
        assert syms.static_flags["f"] is False

    def test_static_flag_and_call(self):
        src = "static int g(void){return f();} int f(void){return 0;}"
        syms = extract_symbols(src)
        # oracle: manual token walk of the fixture
        assert set(syms.definitions) == {"g", "f"}
        assert syms.static_flags == {"g": True, "f": False}
        assert [(c.caller, c.callee) for c in syms.calls] == [("g", "f")]

    def test_unbalanced_close_brace(self):
        with pytest.raises(ParseError):
            extract_symbols("}\nint f(void){return 0;}")

    def test_unterminated_body(self):
        with pytest.raises(ParseError):
            extract_symbols("int f(void){ if (x) { return 0; }")

    def test_keywords_and_locals_not_calls(self):
        src = """
        int f(int x) {
            int (*cb)(void);
            int y = helper();
            if (x) { while (y) { y = y - 1; } }
            cb(y);
            return sizeof(x);
        }
        int helper(void) { return 1; }
        """
        syms = extract_symbols(src)
        assert [(c.caller, c.callee) for c in syms.calls] == [("f", "helper")]

    def test_comments_strings_and_directives_ignored(self):
        src = """
        #include <stdio.h>
        /* not_a_call(); */
        // neither_this();
        int f(void) {
            char *s = "fake_call()";
            real_call(s);
            return 0;
        }
        """
        syms = extract_symbols(src)
        assert [(c.caller, c.callee) for c in syms.calls] == [("f", "real_call")]

    def test_struct_definition_skipped(self):
        src = "struct module { int refs; };\nint f(struct module *m){ return use(m); }"
        syms = extract_symbols(src)
        assert set(syms.definitions) == {"f"}
        assert [(c.caller, c.callee) for c in syms.calls] == [("f", "use")]

    def test_prototype_is_not_definition(self):
        syms = extract_symbols("void g(int);\nvoid g(int x){ g(x); }")
        assert set(syms.definitions) == {"g"}
        assert len(syms.all_definitions) == 1

    def test_calls_only_from_defined_functions(self):
        syms = extract_symbols("int a(void){ b(); return 0; }")
        for c in syms.calls:
            assert c.caller in syms.definitions


class TestIngest:
    def test_minimal_base(self, tmp_path):
        write_manifest(
            tmp_path,
            {"cc": [{"id": "c1", "in": "a.c", "out": "a.o"}], "ld": []},
            {"a.c": "int main(void){return 0;}"},
        )
        base = ingest_build_base(tmp_path)
        assert len(base.cc_commands) == 1
        assert base.ld_commands == []
        assert base.source_files == {"a.c"}

    def test_command_graph_edges(self, tmp_path):
        # oracle: hand-built expected graph from the manifest, checked by
        # exhaustive edge listing
        write_manifest(
            tmp_path,
            {
                "cc": [
                    {"id": "c1", "in": "a.c", "out": "a.o"},
                    {"id": "c2", "in": "b.c", "out": "b.o"},
                ],
                "ld": [{"id": "l1", "ins": ["a.o", "b.o"], "out": "prog", "kind": "LD"}],
            },
            {"a.c": "int a(void){return 0;}", "b.c": "int b(void){return 0;}"},
        )
        base = ingest_build_base(tmp_path)
        producers = {c.output: c.id for c in base.cc_commands}
        ld = base.ld_commands[0]
        expected_deps = {("prog", "c1"), ("prog", "c2")}
        got = {(ld.output, producers[i]) for i in ld.inputs}
        assert got == expected_deps

    def test_missing_source_reported(self, tmp_path):
        write_manifest(
            tmp_path,
            {"cc": [{"id": "c1", "in": "missing.c", "out": "m.o"}], "ld": []},
            {},
        )
        with pytest.raises(IntegrityError, match="missing.c"):
            ingest_build_base(tmp_path)

    def test_no_manifest(self, tmp_path):
        with pytest.raises(ConfigError):
            ingest_build_base(tmp_path)

    def test_compile_commands_database(self, tmp_path):
        (tmp_path / "x.c").write_text("int x_main(void){return 0;}")
        (tmp_path / "compile_commands.json").write_text(
            json.dumps(
                [
                    {
                        "directory": ".",
                        "file": "x.c",
                        "arguments": ["cc", "-O2", "-c", "x.c", "-o", "x.o"],
                    }
                ]
            )
        )
        base = ingest_build_base(tmp_path)
        assert base.source_files == {"x.c"}
        assert base.cc_commands[0].output == "x.o"
        assert "-O2" in base.cc_commands[0].options

    def test_deterministic(self, tmp_path):
        write_manifest(
            tmp_path,
            {
                "cc": [
                    {"id": "c2", "in": "b.c", "out": "b.o"},
                    {"id": "c1", "in": "a.c", "out": "a.o"},
                ],
                "ld": [],
            },
            {"a.c": "int a(void){return b();}", "b.c": "int b(void){return 0;}"},
        )
        one = ingest_build_base(tmp_path)
        two = ingest_build_base(tmp_path)
        assert [c.id for c in one.cc_commands] == [c.id for c in two.cc_commands]
        assert one.callgraph.definitions == two.callgraph.definitions
        assert one.callgraph.calls == two.callgraph.calls


def brute_force_file_edges(base):
    """Independent recount: pair every call with every definition."""
    weights = {}
    for caller, callee, file, _line in base.callgraph.calls:
        d = base.callgraph.definitions.get(callee)
        if d is None or d.file == file:
            continue
        weights[(file, d.file)] = weights.get((file, d.file), 0) + 1
    return weights


class TestFileGraph:
    def make_base(self, defs, calls):
        cg = Callgraph(
            definitions={n: Definition(f, line, line + 1) for n, (f, line) in defs.items()},
            calls=[(caller, callee, file, 1) for caller, callee, file in calls],
        )
        files = sorted({d.file for d in cg.definitions.values()})
        cc = [CompileCommand(f"c{i}", f, f + ".o") for i, f in enumerate(files)]
        return BuildBase(None, cc, [], set(files), cg)

    def test_weighted_edge(self):
        base = self.make_base(
            {"f": ("a.c", 1), "g": ("b.c", 1)},
            [("f", "g", "a.c"), ("f", "g", "a.c")],
        )
        fg = build_file_graph(base)
        assert fg.edges == {("a.c", "b.c", 2)}
        assert fg.weights == brute_force_file_edges(base)

    def test_self_calls_excluded(self):
        base = self.make_base({"f": ("a.c", 1), "g": ("a.c", 5)}, [("f", "g", "a.c")])
        fg = build_file_graph(base)
        assert fg.nodes == {"a.c"}
        assert fg.edges == set()

    def test_undefined_callee_no_edge(self):
        base = self.make_base({"f": ("a.c", 1)}, [("f", "printf", "a.c")])
        assert build_file_graph(base).edges == set()

    def test_closure_against_brute_force(self, tmp_path):
        sources = {
            "a.c": "int fa(void){ return fb() + fc(); }",
            "b.c": "int fb(void){ return fc(); }\nstatic int hidden(void){ return fb(); }",
            "c.c": "int fc(void){ return 0; }",
        }
        write_manifest(
            tmp_path,
            {
                "cc": [
                    {"id": f"c{i}", "in": n, "out": n + ".o"}
                    for i, n in enumerate(sorted(sources))
                ],
                "ld": [],
            },
            sources,
        )
        base = ingest_build_base(tmp_path)
        fg = build_file_graph(base)
        assert fg.weights == brute_force_file_edges(base)
