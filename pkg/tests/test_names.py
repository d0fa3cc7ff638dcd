from rankmobility.names import full_given_name, initials_of, normalize_text, parse_name


def test_normalize_strips_diacritics_case_and_whitespace():
    assert normalize_text("  José  GARCÍA ") == "jose garcia"
    assert normalize_text("Müller") == "muller"
    assert normalize_text("") == ""


def test_normalize_casefolds_beyond_lowercase():
    assert normalize_text("Straße") == "strasse"


def test_parse_natural_order():
    assert parse_name("John R. Smith") == ("john r", "smith")


def test_parse_comma_order():
    assert parse_name("Smith, John R.") == ("john r", "smith")


def test_parse_initials_run_together():
    assert parse_name("J.R. Smith") == ("j r", "smith")


def test_parse_single_token_is_surname():
    assert parse_name("Smith") == ("", "smith")
    assert parse_name("") == ("", "")


def test_initials():
    assert initials_of("john r") == "jr"
    assert initials_of("") == ""


def test_full_given_requires_spelled_out_first_token():
    assert full_given_name("john r") == "john"
    assert full_given_name("j r") is None
    assert full_given_name("") is None
