import pytest

from verforge.emg.model import (
    Block,
    IntermediateModel,
    Jump,
    Label,
    Receive,
    ScenarioModel,
    Send,
    enumerate_traces,
    pair_signals,
    parse_model,
    validate_model,
)
from verforge.emg.process import parse_process
from verforge.errors import SemanticError, SignalTypeError


class TestParseModel:
    def test_tty_callbacks_document(self, tty_doc):
        model = parse_model(tty_doc)
        scenario = model.thread_models["tty/callbacks"]
        assert set(scenario.labels) == {"driver", "retval", "ops"}
        assert len(scenario.actions) == 6
        assert scenario.process == parse_process(
            "(!callbacks).<alloc>.(<reg>.(<unreg> | <fail>) | <skip>)"
        )
        assert isinstance(scenario.actions["callbacks"], Receive)
        assert scenario.actions["callbacks"].first
        assert isinstance(scenario.actions["alloc"], Block)

    def test_minimal_model(self):
        model = parse_model(
            {"m": {"actions": {"a": {"statements": ["x();"]}}, "process": "<a>"}}
        )
        assert set(model.thread_models) == {"m"}

    def test_undeclared_action(self):
        with pytest.raises(SemanticError, match="x"):
            parse_model({"m": {"actions": {}, "process": "<x>"}})

    def test_undeclared_label(self):
        with pytest.raises(SemanticError, match="ghost"):
            parse_model(
                {
                    "m": {
                        "actions": {"a": {"statements": ["use(%ghost%);"]}},
                        "process": "<a>",
                    }
                }
            )

    def test_jump_needs_its_own_process(self):
        with pytest.raises(SemanticError, match="j"):
            parse_model({"m": {"actions": {"j": {}}, "process": "{j}"}})

    def test_action_kind_conflict(self):
        with pytest.raises(SemanticError):
            parse_model(
                {"m": {"actions": {"a": {}}, "process": "<a>.[a]"}}
            )

    def test_send_postcondition_rejected(self):
        with pytest.raises(SemanticError):
            parse_model(
                {
                    "m": {
                        "actions": {"s": {"postcondition": ["1"]}},
                        "process": "<x>.[s]",
                        "labels": {},
                    }
                }
            )

    def test_block_constraints(self):
        for bad in ("goto out;", "int fresh = 1;", "retry: x();"):
            with pytest.raises(SemanticError):
                parse_model(
                    {"m": {"actions": {"a": {"statements": [bad]}}, "process": "<a>"}}
                )

    def test_label_declaration_parsing(self):
        label = Label("d", "struct tty_driver *d")
        assert label.variable == "d"
        assert label.type_text == "struct tty_driver *"
        assert Label("n", "int n").type_text == "int"


def _two_model_doc(sender_params, receiver_params, sender_labels, receiver_labels):
    return {
        "sender": {
            "labels": sender_labels,
            "actions": {
                "work": {"statements": ["prepare();"]},
                "reg": {"parameters": sender_params},
            },
            "process": "<work>.[reg]",
        },
        "receiver": {
            "labels": receiver_labels,
            "actions": {
                "reg": {"parameters": receiver_params},
                "use": {"statements": ["consume();"]},
            },
            "process": "(!reg).<use>",
        },
    }


class TestPairing:
    def test_matching_types_pair(self):
        doc = _two_model_doc(
            ["ops"], ["cbs"],
            {"ops": {"declaration": "struct ops *ops"}},
            {"cbs": {"declaration": "struct ops *cbs"}},
        )
        pairing = pair_signals(parse_model(doc))
        # oracle: cross-product filter over all sends and receives
        assert pairing.pairs == [("sender", "reg", "receiver", "reg")]

    def test_unmatched_send_is_warning(self, loop_doc):
        pairing = pair_signals(parse_model(loop_doc))
        assert pairing.pairs == []
        assert any("no matching receive" in w for w in pairing.warnings)

    def test_length_mismatch(self):
        doc = _two_model_doc(
            ["ops"], [],
            {"ops": {"declaration": "struct ops *ops"}},
            {},
        )
        with pytest.raises(SignalTypeError):
            pair_signals(parse_model(doc))

    def test_type_mismatch(self):
        doc = _two_model_doc(
            ["ops"], ["cbs"],
            {"ops": {"declaration": "struct ops *ops"}},
            {"cbs": {"declaration": "int cbs"}},
        )
        with pytest.raises(SignalTypeError):
            pair_signals(parse_model(doc))

    def test_enumeration_order_independent(self):
        doc = _two_model_doc(
            ["ops"], ["cbs"],
            {"ops": {"declaration": "struct ops *ops"}},
            {"cbs": {"declaration": "struct ops *cbs"}},
        )
        reordered = {k: doc[k] for k in reversed(list(doc))}
        assert set(pair_signals(parse_model(doc)).pairs) == set(
            pair_signals(parse_model(reordered)).pairs
        )


class TestEnumerateTraces:
    def test_jump_loop_model(self, loop_doc):
        model = parse_model(loop_doc)
        # oracle: exhaustive expansion by hand of
        # (!a).<b>.(<c> | {d}).[e] with {d} = <f>.{d} | [e]
        expected = {
            ("a", "b", "c", "e"),
            ("a", "b", "e"),
            ("a", "b", "f", "e"),
            ("a", "b", "f", "f", "e"),
        }
        assert enumerate_traces(model, 5) == expected

    def test_single_block(self):
        model = parse_model(
            {"m": {"actions": {"a": {"statements": ["x();"]}}, "process": "<a>"}}
        )
        assert enumerate_traces(model, 3) == {("a",)}

    def test_tty_callbacks(self, tty_doc):
        model = parse_model(tty_doc)
        # oracle: manual expansion of the quoted process
        expected = {
            ("callbacks", "alloc", "skip"),
            ("callbacks", "alloc", "reg", "unreg"),
            ("callbacks", "alloc", "reg", "fail"),
        }
        assert enumerate_traces(model, 4) == expected

    def test_send_dispatch_inlines_receiver(self):
        doc = _two_model_doc(
            ["ops"], ["cbs"],
            {"ops": {"declaration": "struct ops *ops"}},
            {"cbs": {"declaration": "struct ops *cbs"}},
        )
        model = parse_model(doc)
        assert enumerate_traces(model, 6) == {("work", "reg", "reg", "use")}

    def test_bound_prunes_longer_traces(self, loop_doc):
        model = parse_model(loop_doc)
        assert enumerate_traces(model, 3) == {("a", "b", "e")}

    def test_two_thread_models_sequence_order(self):
        doc = {
            "entry order": "sequence",
            "one": {"actions": {"p": {"statements": ["x();"]}}, "process": "<p>"},
            "two": {"actions": {"q": {"statements": ["y();"]}}, "process": "<q>"},
        }
        assert enumerate_traces(parse_model(doc), 4) == {("p", "q")}

    def test_two_thread_models_random_order(self):
        doc = {
            "entry order": "random",
            "one": {"actions": {"p": {"statements": ["x();"]}}, "process": "<p>"},
            "two": {"actions": {"q": {"statements": ["y();"]}}, "process": "<q>"},
        }
        assert enumerate_traces(parse_model(doc), 4) == {("p", "q"), ("q", "p")}


class TestValidate:
    def test_needs_a_scenario(self):
        with pytest.raises(SemanticError):
            validate_model(IntermediateModel())

    def test_unused_label_is_warning(self):
        model = IntermediateModel()
        scenario = ScenarioModel(
            "m",
            labels={"idle": Label("idle", "int idle")},
            actions={"a": Block("a", statements=["x();"])},
            process=parse_process("<a>"),
        )
        model.thread_models["m"] = scenario
        validate_model(model)
        assert any("idle" in w for w in model.warnings)
