import os

import numpy as np
import pytest

import neuroprobe as npb

FIXTURES = os.environ.get("NEUROPROBE_FIXTURES", os.path.join(os.path.dirname(__file__), "..", "fixtures"))
GATE_THRESHOLD = 2.0537489


@pytest.fixture(scope="module")
def blotch():
    return npb.Generator.load(os.path.join(FIXTURES, "blotch.gwf"))


@pytest.fixture(scope="module")
def rates(blotch):
    return npb.estimate_rates(blotch, 500, seed=1)


def test_load_and_forward(blotch):
    assert blotch.num_layers == 8
    assert blotch.latent_dim == 8
    assert len(blotch.digest) == 64
    z = npb.sample_latents(1, 1, 8)[0]
    layers, image = blotch.forward(z)
    assert len(layers) == 8
    assert layers[0].shape == (4, 4, 4)
    assert image.shape == (3, 32, 32)
    assert image.min() >= -1.0 and image.max() <= 1.0
    assert npb.Generator.from_bytes(blotch.to_bytes()).digest == blotch.digest


def test_rates_round_trip(blotch, rates):
    assert rates.num_samples == 500
    r0 = rates.rates(0)
    assert r0.shape == (4, 4, 4)
    assert ((r0 >= 0) & (r0 <= 1)).all()
    assert npb.RateTable.from_bytes(rates.to_bytes()) == rates
    assert npb.estimate_rates(blotch, 500, seed=1, threads=1) == rates


def test_sets_partition(rates):
    lr = npb.lr_set(rates, 1, 0.3)
    hr = npb.hr_set(rates, 1, 0.3)
    assert (lr ^ hr).all()


def test_ablation_removes_blotch(blotch, rates):
    z = npb.sample_latents(123, 1, 8)[0]
    z[0] = 3.0
    _, before = blotch.forward(z)
    layers, after = npb.sequential_ablate(blotch, rates, z, [0, 1, 3], 0.3)
    lr0 = npb.lr_set(rates, 0, 0.3)
    assert (layers[0][lr0] <= 0).all()
    square = (slice(None), slice(8, 16), slice(8, 16))
    assert after[square].mean() < before[square].mean()
    _, same = npb.sequential_ablate(blotch, rates, z, [], 0.3)
    assert np.array_equal(same, before)


def test_scoring_and_heatmap(blotch, rates):
    z = npb.sample_latents(5, 1, 8)[0]
    quiet = z.copy()
    quiet[0] = -1.0
    hot = z.copy()
    hot[0] = 3.0
    s_quiet = npb.artifact_score(blotch, rates, quiet, [0, 1, 3], 0.3)
    s_hot = npb.artifact_score(blotch, rates, hot, [0, 1, 3], 0.3)
    assert s_hot["total"] > s_quiet["total"]
    h = npb.heatmap(blotch, rates, hot, 0, 0.3)
    assert h.shape == (4, 4)
    assert 0.0 <= h.min() and h.max() <= 1.0


def test_metrics():
    rng = np.random.default_rng(0)
    real = rng.normal(size=(64, 3)).astype(np.float32)
    assert npb.fid(real, real) == pytest.approx(0.0, abs=1e-6)
    far = real + 100.0
    p, r = npb.precision_recall(real, far, 3)
    assert (p, r) == (0.0, 0.0)
    res = npb.realism(real, real[:10] + 0.01, 3)
    assert len(res["scores"]) == 10
    assert "±" in res["summary"]
    with pytest.raises(ArithmeticError):
        npb.fid(real[:3], real)


def test_errors(blotch, rates):
    z = np.zeros(8, dtype=np.float32)
    with pytest.raises(ValueError):
        npb.sequential_ablate(blotch, rates, z, [9], 0.3)
    with pytest.raises(ValueError):
        blotch.forward(np.zeros(3, dtype=np.float32))
    with pytest.raises(Exception):
        npb.Generator.from_bytes(b"nope")


def test_cli(tmp_path):
    out = tmp_path / "r.grt"
    code = npb.cli(["profile", "--model", os.path.join(FIXTURES, "blotch.gwf"), "--count", "20", "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert npb.cli(["profile"]) == 2
