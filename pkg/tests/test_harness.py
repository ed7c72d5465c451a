import math
from pathlib import Path

import numpy as np
import pytest

from ecfgof.errors import ConfigError, DataFormatError
from ecfgof.harness import (
    ExperimentSpec,
    PowerTable,
    TestSpec,
    load_csv,
    load_spec,
    run_experiment,
    shipped_specs,
    spec_from_dict,
    with_overrides,
    write_csv,
)
from ecfgof.samplers import AltSpec, FamilySpec

EXAM = Path(__file__).parent / "data" / "exam_marks.csv"


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_csv(tmp_path):
    x = load_csv(write(tmp_path, "1,2\n3,4\n"))
    np.testing.assert_array_equal(x, [[1, 2], [3, 4]])


def test_header_detected(tmp_path):
    x, header = load_csv(write(tmp_path, "mech,vec\n1,2\n"), return_header=True)
    assert x.shape == (1, 2) and header == ["mech", "vec"]


def test_scientific_notation_and_blank_lines(tmp_path):
    x = load_csv(write(tmp_path, "1e-3, 2.5E2\n\n-3,4\n"))
    np.testing.assert_array_equal(x, [[1e-3, 250.0], [-3.0, 4.0]])


def test_ragged_rows(tmp_path):
    with pytest.raises(DataFormatError) as info:
        load_csv(write(tmp_path, "1,2\n3\n"))
    assert info.value.row == 2


def test_non_numeric_cell(tmp_path):
    with pytest.raises(DataFormatError) as info:
        load_csv(write(tmp_path, "a,b\n1,2\n3,x\n"))
    assert (info.value.row, info.value.column) == (3, 2)


@pytest.mark.parametrize("text", ["", "\n\n", "a,b\n"])
def test_empty(tmp_path, text):
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_csv(tmp_path / "nope.csv")


def test_write_roundtrip(tmp_path, rng):
    x = rng.standard_normal((7, 3))
    write_csv(tmp_path / "o.csv", x)
    np.testing.assert_array_equal(load_csv(tmp_path / "o.csv"), x)


def test_exam_fixture():
    assert EXAM.is_file(), f"exam-marks fixture missing at {EXAM}"
    x = load_csv(EXAM)
    assert x.shape == (88, 5)


# -- specs ------------------------------------------------------------------


def test_shipped_specs_load():
    names = shipped_specs()
    for required in ("example1", "example2", "example3", "example4"):
        assert required in names
    for name in names:
        spec = load_spec(name)
        assert spec.trials == 200 and spec.M == 500


def test_example4_grid():
    spec = load_spec("example4")
    assert spec.null == FamilySpec("kotz", N=2)
    assert spec.grid == tuple(np.arange(1.0, 5.01, 0.5))


def test_spec_errors():
    with pytest.raises(ConfigError):
        load_spec("no-such-spec")
    with pytest.raises(ConfigError):
        spec_from_dict({"null": {"family": "normal"}})
    doc = {
        "null": {"family": "laplace"},
        "data": {"generator": "laplace"},
        "dims": [2], "sizes": [20],
        "tests": [{"name": "B", "type": "bhep"}],
    }
    with pytest.raises(ConfigError, match="BHEP"):
        spec_from_dict(doc)


def test_spec_file(tmp_path):
    path = write(tmp_path, """
name = "tiny"
dims = [2]
sizes = [15]
trials = 4
M = 20
[null]
family = "studentt:12"
[data]
generator = "skew_t"
param = "theta"
grid = [0.0, 2.0]
fixed = { nu = 12.0 }
[[tests]]
name = "MEAN"
m = 3
""", "tiny.toml")
    spec = load_spec(path)
    assert spec.point(2.0) == AltSpec("skew_t", theta=2.0, nu=12.0)
    assert with_overrides(spec, trials=9, M=None).trials == 9


def tiny_spec(**kw):
    base = dict(
        name="tiny", null=FamilySpec("normal"), generator=AltSpec("studentt"),
        param="nu", grid=(3.0, math.inf), dims=(2,), sizes=(20,),
        tests=(TestSpec("MEAN"), TestSpec("MAX", agg="max"), TestSpec("BHEP", kind="bhep")),
        trials=12, M=30, seed=5,
    )
    base.update(kw)
    return ExperimentSpec(**base)


def test_run_experiment_table():
    table = run_experiment(tiny_spec())
    assert len(table) == 2 * 3
    for row in table:
        assert 0.0 <= row.rejection_rate <= 1.0
        r = row.rejection_rate
        assert row.mc_stderr == pytest.approx(math.sqrt(r * (1 - r) / row.trials))
    csv_text = table.to_csv()
    assert csv_text.splitlines()[0] == ",".join(PowerTable.columns)
    assert "inf" in csv_text
    assert table.rate("MEAN", math.inf) == table[3].rejection_rate


def test_run_experiment_worker_invariance():
    spec = tiny_spec()
    assert run_experiment(spec, workers=1).to_csv() == run_experiment(spec, workers=3).to_csv()


def test_per_trial_bootstrap_mode():
    table = run_experiment(tiny_spec(share_bootstrap=False, trials=3, M=10, tests=(TestSpec("MEAN"),)))
    assert len(table) == 2


def test_size_too_small_for_dimension():
    with pytest.raises(ConfigError):
        run_experiment(tiny_spec(dims=(5,), sizes=(5,)))
