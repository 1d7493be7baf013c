import pytest

from movingframes.collapse import ModelVariant
from movingframes.config import default_config_path, load_config, parse_config, parse_quantity
from movingframes.exceptions import MissingModelParams, ParseError, ValidationError
from movingframes.optics import DeviceKind

BUNDLED = open(default_config_path()).read()


def edit(old, new):
    assert old in BUNDLED
    return BUNDLED.replace(old, new, 1)


@pytest.mark.parametrize("text,dim,value", [
    ("10.6 km", "length", 10_600.0), ("5 ps", "time", 5e-12), ("0.5925 us", "time", 5.925e-7),
    ("371 km/s", "speed", 3.71e5), ("2e-3 m", "length", 2e-3), ("9 dB", "loss", 9.0),
    ("1.5 kHz", "rate", 1500.0), (0.83, "dimensionless", 0.83),
])
def test_parse_quantity(text, dim, value):
    assert parse_quantity(text, dim) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("text,dim", [("10.6", "length"), (10.6, "length"), ("3 parsecs", "length"),
                                      ("5 ps", "length"), ("fast", "speed")])
def test_parse_quantity_errors(text, dim):
    with pytest.raises(ValueError):
        parse_quantity(text, dim)


def test_bundled_config(site_cfg):
    assert site_cfg.baseline_length == 10_600.0
    assert site_cfg.link_a.optical_length == 10_000.0
    assert site_cfg.link_a.loss == 9.0
    assert site_cfg.choice_a.kind is DeviceKind.ABSORBER
    assert site_cfg.choice_a.frame.speed == pytest.approx(104.72, abs=0.01)
    assert site_cfg.model.variant is ModelVariant.STANDARD_QM
    assert site_cfg.model.visibility == 0.83
    assert site_cfg.scan.n_bins == 216
    assert site_cfg.cbr.speed == 371e3


def test_env_var_selects_config(tmp_path, monkeypatch):
    path = tmp_path / "alt.cfg"
    path.write_text(edit('baseline_length = "10.6 km"', 'baseline_length = "5 km"'))
    monkeypatch.setenv("MOVINGFRAMES_CONFIG", str(path))
    assert load_config().baseline_length == 5000.0


def test_negative_loss_named():
    with pytest.raises(ValidationError) as exc:
        parse_config(edit('loss = "9 dB"', 'loss = "-1 dB"'))
    assert [p for p, _ in exc.value.errors] == ["link_a.loss"]


def test_all_violations_reported():
    text = edit('loss = "9 dB"', 'loss = "-1 dB"')
    text = text.replace('efficiency = 0.1', 'efficiency = 1.5', 1)
    text = text.replace('filter_bandwidth = "10 nm"', 'filter_bandwidth = "10 ps"')
    text = text.replace('seed = 1', 'seed = 1\nbogus = 3')
    with pytest.raises(ValidationError) as exc:
        parse_config(text)
    paths = {p for p, _ in exc.value.errors}
    assert {"link_a.loss", "det_a.efficiency", "source.filter_bandwidth", "scan.bogus"} <= paths


def test_missing_v_qi_for_finite_speed():
    with pytest.raises(MissingModelParams):
        parse_config(edit('variant = "standard_qm"', 'variant = "finite_speed"\npreferred_frame = "lab"'))


def test_finite_speed_complete():
    cfg = parse_config(edit('variant = "standard_qm"',
                            'variant = "finite_speed"\npreferred_frame = "lab"\nv_qi = "3e15 m/s"'))
    assert cfg.model.v_qi == 3e15


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_config(BUNDLED + "\n[scan\nx = 1\n")
    assert exc.value.line is not None and exc.value.column is not None


def test_franson_condition_at_load():
    with pytest.raises(ValidationError) as exc:
        parse_config(edit('arm_imbalance = "1.2 ns"', 'arm_imbalance = "0.1 ps"'))
    assert exc.value.errors[0][0] == "ifo_a.arm_imbalance"


def test_required_section():
    with pytest.raises(ValidationError) as exc:
        parse_config('[source]\nfilter_bandwidth = "10 nm"\npair_rate = "1 Hz"\n')
    assert {"link_a", "link_b"} <= {p for p, _ in exc.value.errors}
