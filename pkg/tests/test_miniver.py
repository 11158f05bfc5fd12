import json

import pytest

from verforge.miniver import Bounds, check, parse_program, parse_property, replay, solve_task_dir

REACH = "CHECK( init(entry_point()), LTL(G ! call(__VERIFIER_error())) )\n"


def reach_property(entry="entry_point"):
    return f"CHECK( init({entry}()), LTL(G ! call(__VERIFIER_error())) )\n"


MODULE_MODEL = """
/* NOTE Initialize module reference counter at the beginning */
static int ldv_module_refcounter = 0;

void ldv_module_get(struct module *module)
{
    if (module)
        /* NOTE Increment module reference counter */
        ldv_module_refcounter++;
}

int ldv_try_module_get(struct module *module)
{
    if (module && ldv_undef_int()) {
        /* NOTE Increment module reference counter */
        ldv_module_refcounter++;
        /* NOTE Successfully increment module reference counter */
        return 1;
    }

    /* NOTE Could not increment module reference counter */
    return 0;
}

void ldv_module_put(struct module *module)
{
    if (module) {
        if (ldv_module_refcounter == 0)
            /* ASSERT Decremented module reference counter should be greater than its initial state */
            ldv_assert();
        /* NOTE Decrement module reference counter */
        ldv_module_refcounter--;
    }
}

void ldv_check_final_state(void)
{
    if (ldv_module_refcounter != 0)
        /* ASSERT Module reference counter should be decremented to its initial value before finishing operation */
        ldv_assert();
}
"""


def unbalanced_program():
    return MODULE_MODEL + """
void entry_point(void)
{
    struct module *m;
    m = external_allocated_data();
    ldv_module_put(m);
    ldv_check_final_state();
}
"""


def balanced_program():
    return MODULE_MODEL + """
void entry_point(void)
{
    struct module *m;
    m = external_allocated_data();
    if (ldv_try_module_get(m)) {
        ldv_module_put(m);
    }
    ldv_check_final_state();
}
"""


class TestProperty:
    def test_reachability_form(self):
        assert parse_property(REACH) == "entry_point"
        assert parse_property(reach_property("main")) == "main"

    def test_memory_safety_unsupported(self):
        prop = "CHECK( init(main()), LTL(G valid-free) )\n"
        assert parse_property(prop) is None
        result = check("int main(void){return 0;}", prop)
        assert result.verdict.kind == "Unknown"
        assert "unsupported" in result.verdict.reason


class TestCheck:
    def test_trivial_safe(self):
        result = check("int main(void){return 0;}", reach_property("main"))
        assert result.verdict.kind == "Safe"

    def test_direct_error_unsafe(self):
        src = "void entry_point(void){ __VERIFIER_error(); }"
        result = check(src, REACH)
        assert result.verdict.kind == "Unsafe"
        assert result.verdict.trace[-1].kind == "error"

    def test_nondet_guarded_error(self):
        src = """
        void entry_point(void) {
            if (__VERIFIER_nondet_int()) {
                __VERIFIER_error();
            }
        }
        """
        result = check(src, REACH)
        assert result.verdict.kind == "Unsafe"

    def test_assume_prunes_error(self):
        src = """
        void entry_point(void) {
            int x = __VERIFIER_nondet_int();
            ldv_assume(x == 0);
            if (x) {
                __VERIFIER_error();
            }
        }
        """
        assert check(src, REACH).verdict.kind == "Safe"

    def test_unbalanced_put_hits_put_assert(self):
        # oracle: hand simulation -- counter 0 at entry, put on a non-null
        # module checks counter == 0 and must reach the assert
        result = check(unbalanced_program(), REACH)
        assert result.verdict.kind == "Unsafe"
        functions = [e.function for e in result.verdict.trace if e.kind == "error"]
        assert functions == ["ldv_module_put"]

    def test_balanced_get_put_safe(self):
        # oracle: hand simulation over both ldv_undef_int outcomes
        result = check(balanced_program(), REACH)
        assert result.verdict.kind == "Safe"

    def test_loop_bound_yields_timeout(self):
        src = """
        void entry_point(void) {
            int i = 0;
            while (i < 1000) {
                i = i + 1;
            }
        }
        """
        result = check(src, REACH, bounds=Bounds(loop_bound=16))
        assert result.verdict.kind == "Unknown"
        assert result.verdict.reason.startswith("timeout")

    def test_bounded_loop_safe(self):
        src = """
        void entry_point(void) {
            int i = 0;
            while (i < 5) {
                i = i + 1;
            }
        }
        """
        assert check(src, REACH).verdict.kind == "Safe"

    def test_subset_violation_is_tool_failure(self):
        src = "void entry_point(void){ int *p; *p = 1; }"
        result = check(src, REACH)
        assert result.verdict.kind == "Unknown"
        assert "tool-failure" in result.verdict.reason

    def test_missing_entry_is_tool_failure(self):
        result = check("int main(void){return 0;}", REACH)
        assert "tool-failure" in result.verdict.reason

    def test_goto_and_labels(self):
        src = """
        void entry_point(void) {
            int x = 0;
            goto skip;
            __VERIFIER_error();
            skip: ;
            x = 1;
        }
        """
        assert check(src, REACH).verdict.kind == "Safe"

    def test_short_circuit(self):
        src = """
        void entry_point(void) {
            int p = 0;
            if (p && __VERIFIER_error()) {
                p = 1;
            }
        }
        """
        assert check(src, REACH).verdict.kind == "Safe"

    def test_undefined_function_value_forks(self):
        src = """
        void entry_point(void) {
            int r;
            r = mystery();
            if (r == 0) {
                __VERIFIER_error();
            }
        }
        """
        assert check(src, REACH).verdict.kind == "Unsafe"

    def test_undefined_statement_call_does_not_fork(self):
        src = """
        void entry_point(void) {
            tick();
            tock();
        }
        """
        result = check(src, REACH)
        assert result.verdict.kind == "Safe"
        assert result.verdict.explored_states == 1


class TestProperties:
    def test_unsafe_trace_replays(self):
        result = check(unbalanced_program(), REACH)
        assert replay(unbalanced_program(), "entry_point", result.verdict.choices) == "error"

    def test_exploration_monotone_in_value_set(self):
        src = """
        void entry_point(void) {
            int a = __VERIFIER_nondet_int();
            int b = __VERIFIER_nondet_int();
            if (a + b > 100) { __VERIFIER_error(); }
        }
        """
        small = check(src, REACH, bounds=Bounds(nondet_values=(0, 1)))
        large = check(src, REACH, bounds=Bounds(nondet_values=(0, 1, 2)))
        assert large.verdict.explored_states >= small.verdict.explored_states

    def test_coverage_within_program_and_contains_trace(self):
        result = check(unbalanced_program(), REACH)
        program = unbalanced_program()
        lines = result.coverage["cil.i"]["covered"]
        assert max(lines) <= program.count("\n") + 1
        for event in result.verdict.trace:
            if event.kind in ("branch", "error"):
                assert event.line in lines


class TestWitnessAndBackend:
    def test_witness_structure(self):
        result = check(unbalanced_program(), REACH)
        assert result.witness is not None
        assert 'key="startline"' in result.witness
        assert '<data key="violation">true</data>' in result.witness
        assert "enterFunction" in result.witness

    def test_task_dir_contract(self, tmp_path):
        (tmp_path / "cil.i").write_text(unbalanced_program())
        (tmp_path / "safe-prps.prp").write_text(REACH)
        line = solve_task_dir(tmp_path)
        assert line == "UNSAFE"
        assert (tmp_path / "verdict.txt").read_text().strip() == "UNSAFE"
        assert (tmp_path / "witness.graphml").exists()
        coverage = json.loads((tmp_path / "coverage.json").read_text())
        assert "cil.i" in coverage

    def test_task_dir_safe(self, tmp_path):
        (tmp_path / "cil.i").write_text(balanced_program())
        (tmp_path / "safe-prps.prp").write_text(REACH)
        assert solve_task_dir(tmp_path) == "SAFE"
        assert not (tmp_path / "witness.graphml").exists()


def test_parse_program_shapes():
    program = parse_program(MODULE_MODEL)
    assert set(program.functions) == {
        "ldv_module_get", "ldv_try_module_get", "ldv_module_put", "ldv_check_final_state",
    }
    assert program.globals[0][0] == "ldv_module_refcounter"
