import csv
import math

import numpy as np
import pytest

from hybridsim import trainer as trainer_mod
from hybridsim.data import Activation, Cascade, Dataset, DatasetSplit, Post, UserRecord
from hybridsim.diffusion import DiffusionModel, ModelFormatError, load_model, save_model
from hybridsim.graphs import UserIndex, build_hypergraph, train_members
from hybridsim.optim import Adam
from hybridsim.synthetic import SyntheticConfig, generate
from hybridsim.trainer import (
    TrainConfig,
    TrainingDiverged,
    batch_loss,
    evaluate_loss,
    expand_cascades,
    train,
    write_history,
)

from conftest import SMALL_TRAIN


def toy_dataset(cascades: dict[str, tuple[str, list[str]]], users: list[str]) -> Dataset:
    posts, cas = {}, {}
    for i, (pid, (pub, acts)) in enumerate(cascades.items()):
        posts[pid] = Post(pid, "text", pub, 100 * i)
        cas[pid] = Cascade(pid, [Activation(u, "repost", 100 * i + j + 1) for j, u in enumerate(acts)])
    return Dataset({u: UserRecord(u) for u in users}, posts, cas)


def test_expand_two_activations():
    ds = toy_dataset({"p": ("P", ["A", "B"])}, ["P", "A", "B"])
    idx = UserIndex(ds.user_ids())
    ex = expand_cascades(ds, ["p"], idx)
    assert [(e.prefix, e.target) for e in ex] == [((0,), 1), ((0, 1), 2)]


def test_expand_single_activation():
    ds = toy_dataset({"p": ("P", ["A"])}, ["P", "A"])
    assert len(expand_cascades(ds, ["p"], UserIndex(ds.user_ids()))) == 1


def test_expand_counts_and_invariants(small_data):
    ds, split = small_data
    idx = UserIndex(ds.user_ids())
    ex = expand_cascades(ds, split.train, idx)
    assert len(ex) == sum(len(ds.responders(p)) for p in split.train)
    for e in ex:
        assert e.target not in e.prefix
        assert len(e.prefix) >= 1
        assert e.prefix[0] == idx[ds.posts[e.cascade_id].publisher_id]


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(dim=10, heads=4).validate()
    with pytest.raises(ValueError):
        TrainConfig(lr=0).validate()


def repeated_cascade(copies=12):
    users = [f"u{i}" for i in range(10)]
    cascades = {f"p{i:02d}": ("u0", ["u1", "u2", "u3", "u4"]) for i in range(copies)}
    ds = toy_dataset(cascades, users)
    ids = sorted(cascades)
    return ds, DatasetSplit(ids[:10], ids[10:11], ids[11:])


def test_memorizes_repeated_cascade():
    ds, split = repeated_cascade()
    cfg = TrainConfig(dim=8, heads=2, max_len=8, epochs=300, patience=300, lr=0.05, dropout=0.0, seed=1)
    params, history = train(ds, split, cfg)
    assert history[-1].train_loss < 0.05
    assert min(r.valid_loss for r in history) < 0.05


def test_same_seed_same_curves(small_data):
    ds, split = small_data
    _, a = train(ds, split, SMALL_TRAIN)
    _, b = train(ds, split, SMALL_TRAIN)
    assert [(r.train_loss, r.valid_loss) for r in a] == [(r.train_loss, r.valid_loss) for r in b]


def test_returns_best_validation_checkpoint(small_data, monkeypatch):
    ds, split = small_data
    snapshots = []
    original = trainer_mod.evaluate_loss

    def spy(model, examples, batch_size):
        value = original(model, examples, batch_size)
        snapshots.append((value, {k: t.data.copy() for k, t in model.params.tensors.items()}))
        return value

    monkeypatch.setattr(trainer_mod, "evaluate_loss", spy)
    cfg = TrainConfig(dim=8, heads=2, max_len=16, epochs=8, patience=8, batch_size=16, lr=0.02, seed=2)
    params, history = train(ds, split, cfg)
    best_value, best_tensors = min(snapshots, key=lambda s: s[0])
    assert best_value == min(r.valid_loss for r in history)
    for k, arr in best_tensors.items():
        np.testing.assert_array_equal(params.tensors[k].data, arr)


def test_validation_stays_out_of_graph(small_data, monkeypatch):
    ds, split = small_data
    seen = []
    original = trainer_mod.train_members

    def spy(dataset, ids):
        ids = list(ids)
        seen.extend(ids)
        return original(dataset, ids)

    monkeypatch.setattr(trainer_mod, "train_members", spy)
    train(ds, split, TrainConfig(dim=8, heads=2, max_len=16, epochs=1, patience=1, seed=0))
    assert set(seen) == set(split.train)


def test_one_step_lowers_fixed_batch_loss(small_model, small_data):
    ds, split = small_data
    params, _ = small_model
    idx = UserIndex(ds.user_ids())
    graph = build_hypergraph(train_members(ds, split.train), idx)
    model = DiffusionModel(params.copy(), graph)
    batch = expand_cascades(ds, split.train, idx)[:32]
    before = batch_loss(model, batch)
    before.backward()
    Adam(model.params.parameters(), lr=1e-4).step()
    assert batch_loss(model, batch).item() < before.item()


def test_divergence_is_reported(small_data, monkeypatch):
    ds, split = small_data
    monkeypatch.setattr(trainer_mod, "batch_loss",
                        lambda *a, **k: type("L", (), {"item": lambda self: math.nan})())
    with pytest.raises(TrainingDiverged, match="nan"):
        train(ds, split, SMALL_TRAIN)


def test_history_csv(tmp_path, small_model):
    _, history = small_model
    write_history(history, tmp_path / "h.csv")
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["epoch", "train_loss", "valid_loss"]
    assert len(rows) == len(history) + 1
    assert float(rows[1][1]) == history[0].train_loss


def test_save_load_bit_exact(tmp_path, small_model):
    params, _ = small_model
    save_model(params, tmp_path / "m.csdm")
    loaded = load_model(tmp_path / "m.csdm")
    assert loaded.config == params.config
    assert loaded.user_ids == params.user_ids
    assert set(loaded.tensors) == set(params.tensors)
    for k, t in params.tensors.items():
        assert loaded.tensors[k].data.tobytes() == t.data.tobytes()
    assert loaded.global_cache.tobytes() == params.global_cache.tobytes()
    assert not (tmp_path / "m.csdm.tmp").exists()


def test_loaded_model_ranks_like_original(tmp_path, small_model, small_data):
    params, _ = small_model
    save_model(params, tmp_path / "m.csdm")
    a = DiffusionModel(params).rank([0, 3, 5])
    b = DiffusionModel(load_model(tmp_path / "m.csdm")).rank([0, 3, 5])
    assert a.ranked == b.ranked
    assert a.scores.tobytes() == b.scores.tobytes()


def test_truncated_file(tmp_path, small_model):
    params, _ = small_model
    save_model(params, tmp_path / "m.csdm")
    raw = (tmp_path / "m.csdm").read_bytes()
    for cut in (3, 20, len(raw) // 2, len(raw) - 1):
        (tmp_path / "t.csdm").write_bytes(raw[:cut])
        with pytest.raises(ModelFormatError):
            load_model(tmp_path / "t.csdm")


def test_bad_magic_and_version(tmp_path, small_model):
    params, _ = small_model
    save_model(params, tmp_path / "m.csdm")
    raw = bytearray((tmp_path / "m.csdm").read_bytes())
    (tmp_path / "x.csdm").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ModelFormatError, match="magic"):
        load_model(tmp_path / "x.csdm")
    raw[4:6] = (9).to_bytes(2, "little")
    (tmp_path / "v.csdm").write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(tmp_path / "v.csdm")


def test_different_dim_rejected(tmp_path, small_model):
    params, _ = small_model
    save_model(params, tmp_path / "m.csdm")
    with pytest.raises(ModelFormatError, match="dim"):
        load_model(tmp_path / "m.csdm", expect={"dim": params.config.dim * 2})
    # header claims another d than the stored sections carry
    raw = bytearray((tmp_path / "m.csdm").read_bytes())
    raw[6:10] = (16).to_bytes(4, "little")
    (tmp_path / "d.csdm").write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="shape"):
        load_model(tmp_path / "d.csdm")


def test_evaluate_loss_empty(small_model):
    params, _ = small_model
    assert math.isnan(evaluate_loss(DiffusionModel(params), [], 8))


@pytest.mark.slow
def test_planted_benchmark_halves_train_loss():
    # generator seed 0, trainer seed 0; loss falls below half its first-epoch value by about epoch 14
    corpus = generate(SyntheticConfig(seed=0))
    cfg = TrainConfig(epochs=50, patience=50, seed=0)
    _, history = train(corpus.dataset, corpus.split, cfg)
    first = history[0].train_loss
    assert min(r.train_loss for r in history) <= 0.5 * first
