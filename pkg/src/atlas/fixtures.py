"""Deterministic bundled models for tests and the acceptance suite.

Everything here regenerates bit-identically from fixed seeds, so committed
JSON fixtures and in-test builders always agree.
"""

from __future__ import annotations

import numpy as np


def _mlp_doc(din, dh, dout, scale, seed, activation="Relu"):
    rng = np.random.default_rng(seed)
    # weight magnitudes chosen so pre-activations stay well inside 16 bits
    w1 = np.round(rng.standard_normal((din, dh)) / np.sqrt(din) * 0.9 * scale).astype(np.int64)
    b1 = np.round(rng.standard_normal(dh) * 0.05 * scale).astype(np.int64)
    w2 = np.round(rng.standard_normal((dh, dout)) / np.sqrt(dh) * 0.9 * scale).astype(np.int64)
    b2 = np.round(rng.standard_normal(dout) * 0.05 * scale).astype(np.int64)
    return {
        "scale": scale,
        "inputs": ["x"],
        "outputs": ["y"],
        "tensors": [
            {"name": "x", "shape": [1, din], "role": "input"},
            {"name": "w1", "shape": [din, dh], "role": "initializer"},
            {"name": "b1", "shape": [1, dh], "role": "initializer"},
            {"name": "h0", "shape": [1, dh], "role": "intermediate"},
            {"name": "h1", "shape": [1, dh], "role": "intermediate"},
            {"name": "h2", "shape": [1, dh], "role": "intermediate"},
            {"name": "w2", "shape": [dh, dout], "role": "initializer"},
            {"name": "b2", "shape": [1, dout], "role": "initializer"},
            {"name": "y0", "shape": [1, dout], "role": "intermediate"},
            {"name": "y1", "shape": [1, dout], "role": "intermediate"},
            {"name": "y", "shape": [1, dout], "role": "output"},
        ],
        "initializers": {
            "w1": w1.reshape(-1).tolist(),
            "b1": b1.reshape(-1).tolist(),
            "w2": w2.reshape(-1).tolist(),
            "b2": b2.reshape(-1).tolist(),
        },
        "nodes": [
            {"op": "Einsum", "inputs": ["x", "w1"], "outputs": ["h0"],
             "attrs": {"equation": "mk,kn->mn"}},
            {"op": "Add", "inputs": ["h0", "b1"], "outputs": ["h1"], "attrs": {}},
            {"op": activation, "inputs": ["h1"], "outputs": ["h2"], "attrs": {}},
            {"op": "Einsum", "inputs": ["h2", "w2"], "outputs": ["y0"],
             "attrs": {"equation": "mk,kn->mn"}},
            {"op": "Add", "inputs": ["y0", "b2"], "outputs": ["y1"], "attrs": {}},
            {"op": activation, "inputs": ["y1"], "outputs": ["y"], "attrs": {}},
        ],
    }


def mlp_fixture(scale: int = 128, seed: int = 20260301) -> dict:
    """The 784 -> 32 -> 10 ReLU classifier used by the acceptance suite."""
    return _mlp_doc(784, 32, 10, scale, seed)


def small_mlp_fixture(scale: int = 128, seed: int = 7) -> dict:
    """16 -> 8 -> 4 sibling for fast mutation batteries."""
    return _mlp_doc(16, 8, 4, scale, seed)


def tiny_mlp_fixture(scale: int = 128, seed: int = 7) -> dict:
    """4 -> 3 -> 2 model for unit tests (trace fits in 2^6 cycles)."""
    return _mlp_doc(4, 3, 2, scale, seed)


def mlp_inputs(doc: dict, count: int, seed: int = 99) -> list:
    rng = np.random.default_rng(seed)
    din = next(t for t in doc["tensors"] if t["name"] == "x")["shape"][1]
    scale = doc["scale"]
    out = []
    for _ in range(count):
        out.append(np.round(rng.standard_normal((1, din)) * 0.7 * scale)
                   .astype(np.int64))
    return out


def float_forward(doc: dict, x_int: np.ndarray) -> np.ndarray:
    """Float32 reference of the fixture MLP (activation per doc)."""
    S = doc["scale"]
    init = doc["initializers"]
    shapes = {t["name"]: t["shape"] for t in doc["tensors"]}
    w1 = np.array(init["w1"], dtype=np.float64).reshape(shapes["w1"]) / S
    b1 = np.array(init["b1"], dtype=np.float64).reshape(shapes["b1"]) / S
    w2 = np.array(init["w2"], dtype=np.float64).reshape(shapes["w2"]) / S
    b2 = np.array(init["b2"], dtype=np.float64).reshape(shapes["b2"]) / S
    act = doc["nodes"][2]["op"]
    f = {"Relu": lambda v: np.maximum(v, 0), "Tanh": np.tanh}[act]
    x = np.asarray(x_int, dtype=np.float64) / S
    h = f(x @ w1 + b1)
    return f(h @ w2 + b2)


def saturating_tanh_fixture(scale: int = 128, seed: int = 31337) -> dict:
    """Small tanh network whose pre-activations live in the saturation band.

    Weights are scaled up so |pre-activation| is usually >= 4; the global
    one-sided teleportation (tau = 4) is then exact almost everywhere and
    the end-to-end fixed-point deviation stays within the documented bound.
    """
    rng = np.random.default_rng(seed)
    din, dh, dout = 12, 8, 4
    w1 = np.round((rng.standard_normal((din, dh)) + np.sign(rng.standard_normal((din, dh))) * 1.5)
                  * 1.2 * scale).astype(np.int64)
    b1 = np.round(rng.standard_normal(dh) * 0.3 * scale).astype(np.int64)
    w2 = np.round((rng.standard_normal((dh, dout)) + np.sign(rng.standard_normal((dh, dout))) * 1.5)
                  * 1.0 * scale).astype(np.int64)
    b2 = np.round(rng.standard_normal(dout) * 0.3 * scale).astype(np.int64)
    doc = _mlp_doc(din, dh, dout, scale, seed, activation="Tanh")
    doc["initializers"] = {
        "w1": w1.reshape(-1).tolist(), "b1": b1.reshape(-1).tolist(),
        "w2": w2.reshape(-1).tolist(), "b2": b2.reshape(-1).tolist(),
    }
    return doc


def saturating_inputs(count: int = 64, scale: int = 128, seed: int = 5) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        out.append(np.round(rng.standard_normal((1, 12)) * 1.5 * scale)
                   .astype(np.int64))
    return out
