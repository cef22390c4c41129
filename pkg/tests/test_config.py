import pytest
from hypothesis import given, settings, strategies as st

from condensate.config import Params, RunConfig, format_complex, parse_complex
from condensate.errors import ConfigInvalid

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_complex_text_round_trip(re, im):
    z = complex(re, im)
    assert parse_complex(format_complex(z)) == z


def test_parse_complex_forms():
    assert parse_complex("0.25-0.25i") == 0.25 - 0.25j
    assert parse_complex(" 1 ") == 1
    assert parse_complex("2i") == 2j
    with pytest.raises(ConfigInvalid):
        parse_complex("one")


points = st.lists(st.tuples(st.complex_numbers(max_magnitude=0.45, allow_nan=False, allow_infinity=False),
                            st.integers(0, 4)), min_size=1, max_size=5)


@settings(max_examples=40, deadline=None)
@given(points, st.sampled_from([16, 64, 256]), st.integers(0, 2 ** 64 - 1))
def test_run_config_text_round_trip(pts, grid, seed):
    cfg = RunConfig(points=tuple(pts), concentration=(0,), grid=grid, seed=seed,
                    params=Params(gamma=0.3, eps_stop=2e-3))
    again = RunConfig.from_text(cfg.to_text())
    assert again == cfg
    assert again.digest() == cfg.digest()


@pytest.mark.parametrize("kw", [dict(grid=100), dict(grid=8), dict(tol=0.0), dict(seed=-1),
                                dict(params=Params(eps_ratio=1.5)), dict(params=Params(gamma=1.0)),
                                dict(omega2=2.0 + 0j)])
def test_invalid_configs_rejected(kw):
    with pytest.raises(ConfigInvalid):
        RunConfig(points=((0j, 0),), **kw)


def test_bad_text_reports_quantity():
    with pytest.raises(ConfigInvalid) as err:
        RunConfig.from_text("[torus]\nomega1 = 1\nomega2 = 1i\n[vortices]\npoints =\n    0 x\n")
    assert err.value.quantity == "points"
    with pytest.raises(ConfigInvalid):
        RunConfig.from_text("[torus]\nomega1 = 1\nomega2 = 1i\n")
    with pytest.raises(ConfigInvalid) as err:
        RunConfig.from_text("[torus]\nomega1 = 1\nomega2 = 1i\n[vortices]\npoints = 0 1\n[params]\nfoo = 1\n")
    assert err.value.quantity == "foo"


def test_overrides_skip_none():
    cfg = RunConfig(points=((0j, 0),))
    assert cfg.with_overrides(grid=None, tol=1e-3).tol == 1e-3
    assert cfg.with_overrides(grid=None).grid == cfg.grid
