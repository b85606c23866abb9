import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvsign.errors import CapacityError, DomainError, ParseError, ValidationError
from cvsign.model import (GhzParams, SymmetricCm, apply_loss_noise, dump_cm, expand_full, load_cm,
                          noise_of_v, parse_cm, physicality_check, pure_ghz_cm, symmetric_from_full,
                          symplectic_form, v_of_noise)


def test_vacuum_at_zero_squeezing():
    cm = pure_ghz_cm(5, 0.0)
    assert (cm.a, cm.b, cm.c) == pytest.approx((1.0, 1.0, 0.0))
    ok, margin = physicality_check(expand_full(cm))
    assert ok and margin == pytest.approx(0.0, abs=1e-12)


def test_pure_ghz_entries():
    n, r = 4, 0.5
    cm = pure_ghz_cm(n, r)
    assert cm.a == pytest.approx((math.exp(2 * r) + 3 * math.exp(-2 * r)) / 4)
    assert cm.b == pytest.approx((3 * math.exp(2 * r) + math.exp(-2 * r)) / 4)
    assert cm.c == pytest.approx(2 * math.sinh(2 * r) / 4)


def test_pure_ghz_is_pure():
    g = expand_full(pure_ghz_cm(6, 0.8))
    assert np.linalg.det(g) == pytest.approx(1.0, rel=1e-9)


def test_loss_channel():
    cm = apply_loss_noise(SymmetricCm(3, 2.0, 3.0, 0.5), 0.8, 0.25)
    n1 = 0.2 * 1.5
    assert (cm.a, cm.b, cm.c) == pytest.approx((1.6 + n1, 2.4 + n1, 0.4))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.floats(0, 2.5), st.floats(0.01, 1.0), st.floats(0, 2.0))
def test_lossy_ghz_is_physical(n, r, eta, noise):
    ok, _ = physicality_check(expand_full(GhzParams(n, r, eta, noise).cm()))
    assert ok


def test_unphysical_detected():
    ok, margin = physicality_check(0.5 * np.eye(4))
    assert not ok and margin == pytest.approx(-0.5)


@given(st.floats(0, 1e6))
def test_v_roundtrip(noise):
    assert noise_of_v(v_of_noise(noise)) == pytest.approx(noise, rel=1e-9, abs=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        GhzParams(1, 0.1)
    with pytest.raises(DomainError):
        GhzParams(3, 0.1, eta=0.0)
    with pytest.raises(DomainError):
        GhzParams(3, -0.1)
    with pytest.raises(DomainError):
        noise_of_v(1.0)
    with pytest.raises(CapacityError):
        expand_full(pure_ghz_cm(5000, 0.1))


def test_symplectic_form():
    om = symplectic_form(2)
    assert np.allclose(om @ om, -np.eye(4))
    assert om[0, 2] == -1 and om[2, 0] == 1


def test_symmetric_roundtrip():
    cm = apply_loss_noise(pure_ghz_cm(7, 0.3), 0.9, 0.1)
    back = symmetric_from_full(expand_full(cm))
    assert (back.a, back.b, back.c) == (cm.a, cm.b, cm.c)
    g = expand_full(cm)
    g[0, 0] += 0.1
    with pytest.raises(ValidationError):
        symmetric_from_full(g)


def test_json_roundtrip(tmp_path):
    cm = pure_ghz_cm(3, 0.7)
    path = tmp_path / "cm.json"
    dump_cm(cm, path)
    assert load_cm(path) == cm
    g = expand_full(cm)
    assert np.array_equal(parse_cm(dump_cm(g)), g)


def test_flat_matrix_accepted():
    text = '{"format_version": 1, "n": 1, "kind": "full", "matrix": [1, 0, 0, 1]}'
    assert np.array_equal(parse_cm(text), np.eye(2))


@pytest.mark.parametrize("text,field", [
    ('{"n": 2, "kind": "symmetric", "a": 1, "b": 1}', "c"),
    ('{"n": "two", "kind": "symmetric"}', "n"),
    ('{"n": 2, "kind": "other"}', "kind"),
    ('{"n": 2, "kind": "full", "matrix": [1, 2]}', "matrix"),
    ('{"format_version": 9, "n": 2, "kind": "full"}', "format_version"),
])
def test_parse_errors_name_field(text, field):
    with pytest.raises(ParseError) as err:
        parse_cm(text)
    assert err.value.field == field


def test_parse_error_line():
    with pytest.raises(ParseError) as err:
        parse_cm('{\n"n": 2,\n oops}')
    assert err.value.line == 3
