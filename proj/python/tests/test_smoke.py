#
# Copyright 2026 The mistlab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

import math
import pathlib

import numpy as np
import pytest

import mistlab

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_synthetic_is_deterministic():
    x1, y1 = mistlab.generate_synthetic(3, 4, 10, seed=7)
    x2, y2 = mistlab.generate_synthetic(3, 4, 10, seed=7)
    assert x1.shape == (30, 4)
    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(y1, y2)


def test_degenerate_mist_equals_baseline():
    x, y = mistlab.generate_synthetic(3, 4, 20, seed=1)
    base = mistlab.train(x, y, 3, hidden=[8], epochs=3, seed=5)
    again = mistlab.train(x, y, 3, hidden=[8], epochs=3, seed=5, submodels=1, lam=0.0)
    assert base == again
    mist = mistlab.train(x, y, 3, hidden=[8], epochs=3, seed=5, submodels=2, lam=2.0)
    assert not (base == mist)


def test_predictions_are_distributions():
    x, y = mistlab.generate_synthetic(4, 5, 10, seed=2)
    model = mistlab.train(x, y, 4, hidden=[8], epochs=2)
    probs = model.predict(x)
    assert probs.shape == (40, 4)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)


def test_snapshot_round_trip(tmp_path):
    x, y = mistlab.generate_synthetic(2, 3, 10, seed=3)
    model = mistlab.train(x, y, 2, hidden=[4], epochs=2)
    model.save(tmp_path / "m.bin", f64=True)
    assert mistlab.Model.load(tmp_path / "m.bin") == model
    model.save(tmp_path / "m32.bin")
    narrow = mistlab.Model.load(tmp_path / "m32.bin")
    np.testing.assert_array_equal(narrow.values, model.values.astype(np.float32))


def test_metrics():
    assert mistlab.roc_auc([0.9, 0.2, 0.5, 0.1], [True, True, False, False]) == 0.75
    tpr, realized = mistlab.tpr_at_fpr([3, 4, 1, 2], [True, True, False, False], 0.01)
    assert (tpr, realized) == (1.0, 0.0)
    assert mistlab.lira_log_ratio(0.0, 0.0, 1.0, 2.0, 1.0) == pytest.approx(2.0, abs=1e-12)
    expected = 1.0 - math.erfc(1.0 / math.sqrt(2.0))
    assert mistlab.non_overlap(0.0, 1.0, 2.0, 1.0) == pytest.approx(expected, abs=1e-9)


def test_errors_carry_their_kind():
    with pytest.raises(mistlab.MistlabError) as info:
        mistlab.train(np.zeros((2, 2)), [0, 1], 2, variant="L3")
    assert info.value.kind == "config"
    with pytest.raises(mistlab.MistlabError) as info:
        mistlab.roc_auc([1.0, 2.0], [True, True])
    assert info.value.kind == "data"


def test_commands_write_outputs(tmp_path):
    for command in ("gen-data", "train", "shadow", "attack"):
        out_dir, _ = mistlab.run_command(command, CONFIGS / "smoke.cfg", out=tmp_path)
    out_dir = pathlib.Path(out_dir)
    report = (out_dir / "report.csv").read_text().splitlines()
    assert report[0].startswith("dataset,defense,attack,auc")
    assert len(report) == 7
