import importlib
import random

import pytest

from oracles import brute_pairs
from usq import _kernels_py, kernels


def test_python_kernel_matches_oracle():
    rng = random.Random(4)
    xs = [rng.uniform(0, 8) for _ in range(60)]
    ys = [rng.uniform(0, 8) for _ in range(60)]
    assert set(_kernels_py.colliding_pairs(xs, ys, 1.0)) == brute_pairs(list(zip(xs, ys)), 0.5)
    assert _kernels_py.count_within(xs, ys, 1.0) == len(brute_pairs(list(zip(xs, ys)), 0.5))


def test_length_mismatch():
    with pytest.raises(ValueError):
        _kernels_py.colliding_pairs([0.0], [0.0, 1.0], 1.0)


def test_backends_agree_exactly():
    compiled = pytest.importorskip("usq._kernels")
    from array import array
    rng = random.Random(9)
    for _ in range(200):
        n = rng.randint(0, 80)
        xs = [rng.uniform(0, 10) for _ in range(n)]
        ys = [rng.uniform(0, 10) for _ in range(n)]
        # exact-touching pairs exercise the strict comparison
        if n >= 2:
            xs[1], ys[1] = xs[0] + 0.6, ys[0] + 0.8
        a = compiled.colliding_pairs(array("d", xs), array("d", ys), 1.0)
        b = _kernels_py.colliding_pairs(xs, ys, 1.0)
        assert a == b
        assert compiled.count_within(array("d", xs), array("d", ys), 1.0) == len(b)


def test_env_var_forces_python(monkeypatch):
    monkeypatch.setenv("USQ_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.colliding_pairs([0.0, 0.5], [0.0, 0.0], 1.0) == [(0, 1)]
    finally:
        monkeypatch.delenv("USQ_PURE_PYTHON")
        importlib.reload(kernels)
