import pytest
from hypothesis import given, settings, strategies as st

from verforge.emg.process import (
    BlockRef,
    Choice,
    JumpRef,
    ReceiveRef,
    Seq,
    SendRef,
    parse_process,
    print_process,
)
from verforge.errors import ParseError


class TestParse:
    def test_single_block(self):
        assert parse_process("<a>") == BlockRef("a")

    def test_sequence_binds_tighter_than_choice(self):
        assert parse_process("<a>.<b>|<c>") == Choice(
            (Seq((BlockRef("a"), BlockRef("b"))), BlockRef("c"))
        )

    def test_callback_scenario_process(self):
        # process entry of the tty callbacks scenario
        got = parse_process("(!callbacks).<alloc>.(<reg>.(<unreg> | <fail>) | <skip>)")
        assert got == Seq(
            (
                ReceiveRef("callbacks", first=True),
                BlockRef("alloc"),
                Choice(
                    (
                        Seq(
                            (
                                BlockRef("reg"),
                                Choice((BlockRef("unreg"), BlockRef("fail"))),
                            )
                        ),
                        BlockRef("skip"),
                    )
                ),
            )
        )

    def test_jump_and_send(self):
        got = parse_process("(!a).<b>.(<c> | {d}).[e]")
        assert got == Seq(
            (
                ReceiveRef("a", first=True),
                BlockRef("b"),
                Choice((BlockRef("c"), JumpRef("d"))),
                SendRef("e"),
            )
        )

    def test_plain_receive_leaf(self):
        assert parse_process("(a)") == ReceiveRef("a", first=False)

    def test_grouping(self):
        assert parse_process("(<a>.<b>).<c>") == Seq(
            (Seq((BlockRef("a"), BlockRef("b"))), BlockRef("c"))
        )

    def test_whitespace_insignificant(self):
        assert parse_process(" <a> . ( !b ) ") == parse_process("<a>.(!b)")

    @pytest.mark.parametrize(
        "bad",
        ["", "<a>.", "<a> |", "(<a>", "<a", "[x> ", "<a>..<b>", "()", "(!)", "(!<a>)"],
    )
    def test_syntax_errors(self, bad):
        with pytest.raises(ParseError):
            parse_process(bad)


class TestPrint:
    def test_block(self):
        assert print_process(BlockRef("a")) == "<a>"

    def test_choice_of_seq(self):
        text = print_process(Choice((Seq((BlockRef("a"), BlockRef("b"))), BlockRef("c"))))
        assert text == "<a>.<b> | <c>"
        assert parse_process(text) == Choice(
            (Seq((BlockRef("a"), BlockRef("b"))), BlockRef("c"))
        )

    def test_choice_inside_seq_parenthesised(self):
        ast = Seq((BlockRef("a"), Choice((BlockRef("b"), BlockRef("c")))))
        assert print_process(ast) == "<a>.(<b> | <c>)"

    def test_appendix_style_roundtrip(self):
        text = "(!callbacks).<alloc>.(<reg>.(<unreg> | <fail>) | <skip>)"
        assert parse_process(print_process(parse_process(text))) == parse_process(text)


_names = st.sampled_from(["a", "b", "c", "d", "e", "reg", "unreg", "x1"])


def _leaf():
    return st.one_of(
        st.builds(BlockRef, _names),
        st.builds(ReceiveRef, _names, st.booleans()),
        st.builds(SendRef, _names),
        st.builds(JumpRef, _names),
    )


def _expr(depth: int):
    if depth <= 0:
        return _leaf()
    sub = _expr(depth - 1)
    return st.one_of(
        _leaf(),
        st.builds(lambda cs: Seq(tuple(cs)), st.lists(sub, min_size=2, max_size=4)),
        st.builds(lambda cs: Choice(tuple(cs)), st.lists(sub, min_size=2, max_size=4)),
    )


@settings(max_examples=300, deadline=None)
@given(_expr(6))
def test_roundtrip_property(ast):
    assert parse_process(print_process(ast)) == ast
