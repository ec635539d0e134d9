import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from threeregion.config import SCHEMA, ExperimentConfig
from threeregion.errors import ConfigurationError
from threeregion.pipeline import COLUMNS, emit, run_pipeline

GOLDEN = Path(__file__).parent / "golden" / "dominance_default.json"


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_parse_comments_and_lists():
    cfg = ExperimentConfig.loads("mode = physical  # continuum\n\nsweep.L_over_T = 2, 3.5\n"
                                 "detector.B.omega = 5\nfilter.normalize = false\n")
    assert cfg["mode"] == "physical"
    assert cfg["sweep.L_over_T"] == (2.0, 3.5)
    assert cfg["detector.B.omega"] == 5.0
    assert cfg["filter.normalize"] is False


@pytest.mark.parametrize("text", ["mode = sideways", "nonsense.key = 1", "seed = one",
                                  "filter.eta = 2.0", "sweep.eta = 0.5, nan",
                                  "detector.A.window = boxcar", "just words",
                                  "geometry.L_over_T = -1", "sweep.L_over_T = 2, 0"])
def test_invalid_configs(text):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.loads(text)


def test_missing_file():
    with pytest.raises(ConfigurationError, match="cannot read"):
        ExperimentConfig.load("/nonexistent/cfg.txt")


def test_detector_geometry():
    dets = ExperimentConfig().detectors(3.0)
    for i in range(3):
        for j in range(i):
            d = math.dist(dets[i].position, dets[j].position)
            assert d == pytest.approx(3.0)


def test_sweep_points_order():
    cfg = ExperimentConfig().replace(sweep__L_over_T=(2.0, 3.0), sweep__eta=(0.5, 1.0))
    assert cfg.sweep_points() == [(2.0, 1.0, 0.5), (2.0, 1.0, 1.0), (3.0, 1.0, 0.5), (3.0, 1.0, 1.0)]


finite = st.floats(0.01, 100, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), finite, finite, st.lists(finite, max_size=4),
       st.sampled_from(["gaussian", "raised-cosine", "superoscillatory"]),
       st.one_of(st.none(), st.floats(0.01, 1.0)))
def test_round_trip_property(seed, omega, ratio, grid, family, sigma):
    cfg = ExperimentConfig({"seed": seed, "detector.C.omega": omega, "geometry.L_over_T": ratio,
                            "sweep.eps0": tuple(grid), "detector.A.window": family,
                            "detector.B.sigma": sigma})
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_schema_keys_sorted_stably():
    assert list(SCHEMA)[0] == "mode"


def test_dominance_default_record():
    (rec,) = run_pipeline(ExperimentConfig())
    assert rec["fid_W"] == pytest.approx(1.0, abs=1e-12)
    assert rec["S_star"] > 4.0 + 1e-3
    assert rec["lp_feasible"] is False
    for col in ("neg_A_BC", "neg_B_CA", "neg_C_AB"):
        assert rec[col] == pytest.approx(0.4714, abs=1e-4)
    assert rec["error"] is None


def test_dominance_default_golden():
    assert emit(run_pipeline(ExperimentConfig()), "json") == GOLDEN.read_text()


def test_zero_coupling_physical_record():
    (rec,) = run_pipeline(ExperimentConfig().replace(mode="physical", sweep__eps0=(0.0,)))
    assert rec["error"] is None
    assert rec["trace"] == 1.0
    assert all(rec[c] == 0 for c in ("neg_A_BC", "neg_B_CA", "neg_C_AB"))
    # a product state is local: it saturates but cannot exceed the hybrid bound
    assert rec["S_star"] <= rec["hybrid_bound"] + 1e-9
    assert rec["lp_feasible"] is True


def test_errors_attached_per_point():
    cfg = ExperimentConfig().replace(mode="physical", sweep__L_over_T=(0.5, 3.0),
                                     analysis__svetlichny=False)
    recs = run_pipeline(cfg)
    assert "not causally disconnected" in recs[0]["error"]
    assert recs[1]["error"] is None


def test_physical_sweep_monotone_exchange():
    cfg = ExperimentConfig().replace(mode="physical", sweep__L_over_T=(2.0, 3.0, 4.0),
                                     analysis__svetlichny=False, workers=3)
    recs = run_pipeline(cfg)
    assert [r["L_over_T"] for r in recs] == [2.0, 3.0, 4.0]
    x = [abs(r["d_AB_pp"]) for r in recs]
    assert x[0] >= x[1] >= x[2] > 0


def test_emit_empty_csv_header_only():
    assert emit([], "csv") == ",".join(COLUMNS) + "\n"


def test_emit_json_round_trip(tmp_path):
    rec = dict.fromkeys(COLUMNS)
    rec.update(L_over_T=3.0, S_star=float("nan"), lp_feasible=False, error=None)
    path = tmp_path / "out.json"
    emit([rec], "json", path)
    data = json.loads(path.read_text())
    assert data["columns"] == COLUMNS
    assert data["records"][0]["L_over_T"] == 3.0
    assert data["records"][0]["S_star"] is None
    assert len(emit([rec], "csv").splitlines()) == 2


def test_emit_unwritable_path():
    with pytest.raises(ConfigurationError, match="/nonexistent"):
        emit([], "json", "/nonexistent/dir/out.json")


def test_emit_rejects_format():
    with pytest.raises(ConfigurationError):
        emit([], "xml")
