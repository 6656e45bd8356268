# Copyright 2026 The EGLR Authors.
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

import math

import pytest

import eglr


def small_config():
    c = eglr.Config()
    for key, value in {
        "world.users": "10",
        "world.items": "40",
        "model.embed_dim": "4",
        "model.hidden": "16",
        "model.heads": "2",
        "model.eval_layers": "1",
        "task.list_len": "3",
        "task.pool_size": "6",
        "task.lists": "60",
        "task.pools": "8",
        "optim.eval_epochs": "1",
        "optim.gen_iterations": "4",
    }.items():
        c.set(key, value)
    c.validate()
    return c


def test_config_round_trip():
    c = small_config()
    assert eglr.Config.from_ini(c.to_ini()) == c
    assert c.get("eglr.alpha") == "2"
    assert "eglr.alpha" in eglr.Config.keys()
    c.seed = 7
    assert eglr.Config.from_ini(c.to_ini()).seed == 7


def test_bad_config():
    c = eglr.Config()
    c.set("task.list_len", "30")
    with pytest.raises(ValueError, match="K > M"):
        c.validate()


def test_metrics():
    assert eglr.ndcg_at_k([0, 1], 2) == pytest.approx(0.630930, abs=1e-6)
    assert eglr.map_at_k([0, 1, 1], 3) == pytest.approx(0.583333, abs=1e-6)
    assert eglr.dcg_upper_bound(10) == pytest.approx(4.543559, abs=1e-6)
    assert eglr.reward_dcg([1.0]) == 1.0
    adv = eglr.group_advantages([1, 2, 3, 4])
    assert adv == pytest.approx([-1.341641, -0.447214, 0.447214, 1.341641], abs=1e-5)
    assert eglr.softmax_entropy([0.0] * 4, 0.6) == pytest.approx(math.log(4))


def test_models():
    c = small_config()
    world = eglr.World.generate(c)
    assert world.num_items == 40
    assert len(world.click_probabilities(0, [1, 2, 3])) == 3
    ev = eglr.Evaluator.init(c)
    y_point, y_cls = ev.predict(world, 0, [1, 2, 3])
    assert len(y_point) == 3 and all(0 < y < 1 for y in y_point)
    assert 0 < y_cls < 1
    assert ev.score(world, 0, [1, 2, 3]) == pytest.approx(eglr.reward_dcg(y_point))

    gen = eglr.Generator.from_evaluator(ev)
    out = gen.rerank(world, 2, [5, 9, 11, 20, 31, 37])
    assert len(out["list"]) == 3
    assert set(out["list"]) <= {5, 9, 11, 20, 31, 37}
    assert out == gen.rerank(world, 2, [37, 31, 20, 11, 9, 5])
    sampled = gen.rerank(world, 2, [5, 9, 11, 20, 31, 37], mode="sample", seed=3)
    assert sampled == gen.rerank(world, 2, [5, 9, 11, 20, 31, 37], mode="sample", seed=3)
    with pytest.raises(ValueError):
        gen.rerank(world, 2, [5, 9, 11], mode="beam")


def test_checkpoint_round_trip(tmp_path):
    c = small_config()
    world = eglr.World.generate(c)
    gen = eglr.Generator.init(c)
    path = str(tmp_path / "gen.ckpt")
    gen.save(path)
    again = eglr.Generator.load(path)
    assert again.rerank(world, 1, [2, 4, 6, 8, 10, 12]) == gen.rerank(world, 1, [2, 4, 6, 8, 10, 12])
    with pytest.raises(FileNotFoundError):
        eglr.Generator.load(str(tmp_path / "missing.ckpt"))


def test_cli_pipeline(tmp_path):
    c = small_config()
    cfg = str(tmp_path / "c.ini")
    c.save(cfg)
    data, ev, gen = (str(tmp_path / n) for n in ("data", "ev.ckpt", "gen.ckpt"))
    report = str(tmp_path / "m.csv")
    for args in (
        ["gen-data", "--config", cfg, "--out", data],
        ["train-evaluator", "--config", cfg, "--data", data, "--out", ev],
        ["train-generator", "--evaluator", ev, "--pools", data + "/pools.jsonl", "--out", gen],
        ["evaluate", "--generator", gen, "--evaluator", ev, "--data", data, "--report", report],
    ):
        code, _, err = eglr.run_cli(["-q"] + args)
        assert code == 0, err
    text = open(report).read()
    assert text.startswith("model,lists,evaluator_score,map@3,ndcg@3\n")
    code, _, err = eglr.run_cli(["gen-data"])
    assert code == 2
