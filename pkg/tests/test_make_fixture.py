"""Тесты генератора синтетической панели ВВП."""

import json

import numpy as np

from cli_io import PanelCsvSchema, load_panels_csv
from execution.make_fixture import make_gdp_panel, schema_for, write_fixture


def test_panel_layout():
    frame = make_gdp_panel(seed=1)
    assert frame.shape == (39, 1 + 3 + 14)
    assert frame["year"].iloc[0] == 1981 and frame["year"].iloc[-1] == 2019
    assert (frame.drop(columns="year").to_numpy() > 0).all()


def test_effect_shifts_only_post_period():
    base = make_gdp_panel(seed=3, effect=0.0)
    moved = make_gdp_panel(seed=3, effect=0.1)
    gap = np.log(moved["treated_A"].to_numpy()) - np.log(base["treated_A"].to_numpy())
    post = base["year"].to_numpy() >= 2005
    np.testing.assert_allclose(gap[post], 0.1, atol=1e-12)
    np.testing.assert_allclose(gap[~post], 0.0, atol=1e-12)
    np.testing.assert_array_equal(base["country_05"], moved["country_05"])


def test_schema_matches_bundled(fixture_schema):
    with open(fixture_schema, encoding="utf-8") as fh:
        bundled = json.load(fh)
    assert schema_for(make_gdp_panel()) == bundled


def test_written_fixture_loads(tmp_path):
    frame = make_gdp_panel(seed=4, n_treated=2, n_controls=3)
    csv_path, schema_path = tmp_path / "panel.csv", tmp_path / "panel_schema.json"
    write_fixture(frame, csv_path, schema_path)
    panels = load_panels_csv(str(csv_path), PanelCsvSchema.load(str(schema_path)))
    assert [p.treated_name for p in panels] == ["treated_A", "treated_B"]
    assert panels[0].t1 == 24 and panels[0].controls.shape == (39, 3)
