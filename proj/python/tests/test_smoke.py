# Copyright 2026 The fewbase Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import fewbase

SMALL = dict(dim=12, domains=3, classes_per_domain=4, examples_per_class=30, target_classes=6,
             target_examples_per_class=25, pool_classes=4, pool_examples_per_class=10, semantic_dim=4, seed=3)


@pytest.fixture(scope="module")
def universe():
    return fewbase.generate_universe(SMALL)


def test_feature_set_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 3)).astype(np.float32)
    fs = fewbase.FeatureSet(x, [0, 1, 2, 0, 1, 2], ["a", "b", "c"], "test")
    fewbase.save_feature_set(fs, tmp_path / "x.ffs")
    back = fewbase.load_feature_set(tmp_path / "x.ffs")
    assert back.split == "test"
    np.testing.assert_array_equal(back.features, x)
    centroids, counts = fewbase.class_centroids(back)
    np.testing.assert_allclose(centroids[1], x[[1, 4]].astype(np.float64).mean(axis=0))
    assert list(counts) == [2, 2, 2]


def test_errors_carry_code_and_field():
    with pytest.raises(fewbase.FewbaseError) as info:
        fewbase.FeatureSet(np.zeros((2, 2), np.float32), [0, 5], ["a", "b"])
    assert info.value.code == "label_out_of_range"
    assert info.value.field == "labels"
    assert isinstance(info.value, ValueError)


def test_episodes_and_ncm(universe):
    ep = fewbase.sample_uniform_episode(universe.target, 5, 5, 15, seed=1)
    assert ep.support_features.shape == (25, universe.target.dim)
    assert list(ep.shots_per_class()) == [5] * 5
    acc = fewbase.ncm_accuracy(ep.support_features, ep.support_labels, ep.query_features, ep.query_labels)
    assert 0.0 <= acc <= 1.0
    stream = fewbase.episode_stream(universe.target, 7, 3)
    again = fewbase.episode_stream(universe.target, 7, 3)
    assert [e.support_indices for e in stream] == [e.support_indices for e in again]


def test_selection_and_finetune(universe):
    head = fewbase.fit_linear_head(universe.base, epochs=3, learning_rate=1e-2)
    subset = fewbase.select_aa(universe.pool.features.astype(np.float64), head, m=4)
    precision, recall = fewbase.selection_precision_recall(subset, universe.truth)
    assert 0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0
    target_centroids, _ = fewbase.class_centroids(universe.pool)
    base_centroids, _ = fewbase.class_centroids(universe.base)
    assert len(fewbase.select_uot(target_centroids, base_centroids, m=4)) == 4
    adapter, tuned = fewbase.finetune_two_step(universe.base, subset, "square_residual", 2, 1)
    out = adapter.apply(universe.target.features[:5].astype(np.float64))
    assert out.shape == (5, universe.target.dim)
    assert tuned.weights.shape == (4, universe.target.dim)


def test_uot_one_by_one_closed_form():
    # Equal masses a: the 1x1 optimum is a^(2 tau / (eps + 2 tau)) * exp(-c / (eps + 2 tau)).
    r = fewbase.unbalanced_sinkhorn(np.array([[1.0]]), np.array([2.0]), np.array([2.0]),
                                    epsilon=0.5, tau=1.0, tolerance=1e-12, relative=False)
    assert r.converged
    assert r.plan[0, 0] == pytest.approx(2.0 ** (2.0 / 2.5) * np.exp(-1.0 / 2.5), rel=1e-8)


def test_library_and_heuristics(universe, tmp_path):
    partition = fewbase.random_partition(universe.base.num_classes, 3, seed=1)
    lib = fewbase.build_library(universe.base, partition, step1_epochs=1, step2_epochs=1)
    assert len(lib) == 4
    fewbase.save_library(lib, tmp_path / "lib.json")
    assert len(fewbase.load_library(tmp_path / "lib.json")) == 4
    merges, cut = fewbase.ward_cluster(fewbase.class_centroids(universe.base)[0], 3)
    assert len(merges) == universe.base.num_classes - 1 and cut.clusters == 3
    s = np.array([[0.0], [2.0], [10.0], [12.0]])
    assert fewbase.h_snr(s, [0, 0, 1, 1]) == pytest.approx(10.0)
    assert fewbase.h_ssa(s, [0, 0, 1, 1]) == (1.0, False)
    mean, hw = fewbase.paired_ci([0.1, 0.3, 0.2, 0.4])
    assert mean == pytest.approx(0.25) and hw > 0


def test_run_workflow_from_files(universe, tmp_path):
    fewbase.save_universe(universe, tmp_path / "u", SMALL)
    result = fewbase.run_workflow({"workflow": "di", "manifest": str(tmp_path / "u" / "manifest.json"),
                                   "episode_count": 5, "seed": 2, "subset_size": 4,
                                   "output_dir": str(tmp_path / "r")})
    assert result["exit_code"] == 0
    assert result["summary"]["evaluated"] == 5
    assert result["csv"].startswith("episode,method,baseline_acc,method_acc,delta")
    assert json.loads((tmp_path / "r" / "di_summary.json").read_text())["method"] == "di"
    with pytest.raises(fewbase.FewbaseError) as info:
        fewbase.run_workflow({"workflow": "nope"})
    assert info.value.field == "workflow"
