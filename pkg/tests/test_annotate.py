import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import ANLG_LENGTH_LEXICON, COMMONGEN_LENGTH, GIGAWORD, LENGTH_LEXICON, POSITION_LEXICON, WIKTIONARY
from rei.annotate import (
    add_serial_labels,
    add_word_labels,
    extract_realization,
    label_realization,
    strip_serial_labels,
    strip_word_labels,
)
from rei.errors import AlreadyLabeled, MissingExpressionSpan
from rei.expr import parse_document, parse_expression

SENTENCE = LENGTH_LEXICON.output


def test_word_labels_one_based():
    assert str(add_word_labels(SENTENCE)) == (
        "The_1 player_2 stood_3 in_4 the_5 field_6 looking_7 at_8 the_9 batter_10"
    )


def test_word_labels_zero_based():
    assert str(add_word_labels("a b c", zero_based=True)) == "a_0 b_1 c_2"


def test_last_label_equals_length():
    labeled = str(add_word_labels(SENTENCE))
    assert labeled.split()[-1].endswith("_10")


def test_already_labeled():
    with pytest.raises(AlreadyLabeled):
        add_word_labels("The_1 player")


def test_strip_word_labels():
    assert strip_word_labels("The_1 player_2 stood(0)_3") == "The player stood(0)"
    assert strip_word_labels("snake_case_1") == "snake_case"


def test_serial_labels():
    assert add_serial_labels(SENTENCE, ["stood", "field", "looking"]) == (
        "The player stood(0) in the field(1) looking(2) at the batter"
    )
    assert strip_serial_labels("stood(0) in the field(1) looking(2)", ["stood", "field", "looking"]) == (
        "stood in the field looking"
    )


def test_serial_labels_prefer_whole_words():
    assert add_serial_labels("another other", ["other"]) == "another other(0)"
    assert add_serial_labels("anothers", ["other"]) == "another(0)s"


@pytest.mark.parametrize(
    "text,lexicon,expected",
    [
        ("call f(0) then stood(0)", ["stood"], "call f(0) then stood"),
        ("stood (0) apart", ["stood"], "stood (0) apart"),
        ("stood(1) and field(0)", ["stood", "field"], "stood(1) and field(0)"),
        ("field(1) and stood(0)", ["stood", "field"], "field and stood"),
        ("a list (1) (2) (3)", ["list"], "a list (1) (2) (3)"),
        ("see fig(0) and stood(0)", ["stood"], "see fig(0) and stood"),
    ],
)
def test_serial_strip_leaves_other_parentheses(text, lexicon, expected):
    assert strip_serial_labels(text, lexicon) == expected


def test_label_realization_matches_model_format():
    expr = parse_expression(LENGTH_LEXICON.input)
    assert label_realization(SENTENCE, expr) == LENGTH_LEXICON.labeled


def test_label_realization_without_length():
    doc = parse_document(POSITION_LEXICON.input)
    assert label_realization(POSITION_LEXICON.output, doc.expr) == POSITION_LEXICON.labeled


@pytest.mark.parametrize("worked", [LENGTH_LEXICON, POSITION_LEXICON, COMMONGEN_LENGTH, ANLG_LENGTH_LEXICON, GIGAWORD, WIKTIONARY])
def test_extract(worked):
    expr = parse_document(worked.input).expr
    assert extract_realization(worked.labeled, expr) == worked.output


def test_extract_tagged_requires_span():
    expr = parse_expression("<expression> <mask_0> </expression>")
    with pytest.raises(MissingExpressionSpan):
        extract_realization("plain words", expr, tagged=True)
    assert extract_realization("plain words", expr) == "plain words"


def test_extract_ignores_text_after_span():
    expr = parse_expression("<expression> <mask_0> </expression>")
    assert extract_realization("<expression> a_1 b_2 </expression> trailing", expr) == "a b"


_word = st.text(alphabet=st.characters(blacklist_categories=("Z", "C")), min_size=1, max_size=8)


@settings(max_examples=300)
@given(st.lists(st.tuples(_word, st.sampled_from([" ", "  ", "\n", " \t"])), max_size=15), st.booleans())
def test_word_label_round_trip(tokens, zero_based):
    text = "".join(w + sep for w, sep in tokens)
    try:
        labeled = add_word_labels(text, zero_based=zero_based)
    except AlreadyLabeled:
        return
    assert strip_word_labels(labeled) == text
