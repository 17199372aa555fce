"""Event-driven random backprop on a small spiking classifier.

The default task is synthetic: every class has a prototype vector of input
firing rates and each sample is a Poisson raster drawn from a jittered copy
of its prototype. MNIST can be used instead by pointing the task at IDX
files.
"""

from __future__ import annotations

import numpy as np

from ..crossbar import map_weights
from ..data import POISSON, encode_spikes, load_idx
from ..errors import ConfigError
from ..metrics import MetricsLog
from ..neurons import LIFLayerState, LIFParams, fire, integrate
from ..plasticity import FeedbackWeights, RuleConfig, apply_program, delta_w_to_pulses, erbp_update
from .base import RunResult, seed_streams

DEFAULTS = {
    "n_classes": 3,
    "n_inputs": 100,
    "hidden": [60, 60],
    "n_train_per_class": 30,
    "n_test_per_class": 30,
    "steps": 40,
    "rate_high": 0.25,
    "rate_low": 0.02,
    "p_high": 0.3,
    "jitter": 0.02,
    "target_rate": 0.5,
    "epochs": 200,
    "batch_size": 30,
    "learning_rate": 2e-3,
    "surrogate_width": 4.0,
    "init_scale": 0.3,
    "mem_decay": 0.9,
    "syn_decay": 0.8,
    "v_th": 1.0,
    "stop_accuracy": None,
    "device": False,
    "w_max": 0.25,
    "rounding": "none",
    "mnist_images": None,
    "mnist_labels": None,
    "mnist_test_images": None,
    "mnist_test_labels": None,
    "mnist_limit": None,
}


def synthetic_task(task, rng):
    """Class prototypes plus per-sample rate vectors for train and test."""
    k, d = task["n_classes"], task["n_inputs"]
    high = rng.random((k, d)) < task["p_high"]
    proto = np.where(high, task["rate_high"], task["rate_low"])

    def draw(per_class):
        labels = np.repeat(np.arange(k), per_class)
        rates = proto[labels] + task["jitter"] * rng.standard_normal((labels.size, d))
        return np.clip(rates, 0.0, 1.0), labels

    return draw(task["n_train_per_class"]), draw(task["n_test_per_class"])


def mnist_task(task):
    limit = task["mnist_limit"]

    def load(images, labels):
        data = load_idx(images, labels)
        x = data.images.reshape(len(data), -1).astype(float) / 255.0 * task["rate_high"]
        y = data.labels.astype(int)
        return (x[:limit], y[:limit]) if limit else (x, y)

    train = load(task["mnist_images"], task["mnist_labels"])
    if task["mnist_test_images"]:
        test = load(task["mnist_test_images"], task["mnist_test_labels"])
    else:
        test = train
    return train, test


class SpikingNet:
    """Feed-forward LIF layers with weights held as arrays or crossbars."""

    def __init__(self, sizes, params: LIFParams, rng, init_scale, device=None):
        self.sizes = sizes
        self.params = params
        self.weights = []
        for fan_in, fan_out in zip(sizes[:-2], sizes[1:-1]):
            self.weights.append(rng.normal(0.0, init_scale / np.sqrt(fan_in), (fan_out, fan_in)))
        # zero readout: an untrained net stays silent and predicts class 0
        self.weights.append(np.zeros((sizes[-1], sizes[-2])))
        self.device = device
        self.states = None
        if device is not None:
            w_max, nominal = device["w_max"], device["params"]
            for w in self.weights:
                if np.any(np.abs(w) > w_max):
                    raise ConfigError("initial weights exceed w_max; raise w_max or lower init_scale")
            self.states = [map_weights(w, w_max, nominal) for w in self.weights]
            self.weights = [s.weights(w_max, nominal.delta_g) for s in self.states]

    def apply(self, layer, dw, rng):
        if self.states is None:
            self.weights[layer] = self.weights[layer] + dw
            return
        nominal, w_max = self.device["params"], self.device["w_max"]
        state = self.states[layer]
        program = delta_w_to_pulses(dw, state, nominal.delta_g / w_max)
        state = apply_program(state, program, self.device["rounding"], rng)
        self.states[layer] = state
        self.weights[layer] = state.weights(w_max, nominal.delta_g)

    def run(self, raster, targets=None, feedback=None, rule=None, target_rate=0.0, rng=None):
        """Simulate a batch; learn online when ``targets`` is given.

        ``raster`` is ``(steps, batch, inputs)``. Returns output spike counts.
        """
        steps, batch, _ = raster.shape
        layers = [LIFLayerState.zeros((batch, n), self.params) for n in self.sizes[1:]]
        counts = np.zeros((batch, self.sizes[-1]))
        for t in range(steps):
            pre = raster[t].astype(float)
            pres, us = [], []
            for li, w in enumerate(self.weights):
                u, i_syn = integrate(layers[li], self.params, pre @ w.T)
                spikes = u >= self.params.v_th
                layers[li] = fire(u, i_syn, spikes, self.params)
                pres.append(pre)
                us.append(u)
                pre = spikes.astype(float)
            counts += pre
            if targets is None or rule.learning_rate == 0:
                continue
            error = target_rate * targets - pre
            last = len(self.weights) - 1
            for li in range(last + 1):
                fb = feedback[li]
                dw = erbp_update(pres[li], us[li], error, fb, rule)
                self.apply(li, dw, rng)
        return counts


def _predict(counts):
    return np.argmax(counts, axis=1)


def run_erbp_classification(cfg) -> RunResult:
    """Train with eRBP and log per-epoch train/test accuracy.

    Errors are ``target_rate * onehot - output_spikes`` per time step and
    reach hidden layer ``l`` through a fixed random feedback matrix; the
    output layer gets its own error directly. The boxcar gate looks at
    membrane potentials before reset.
    """
    task = cfg.task_params(DEFAULTS)
    data_rng, init_rng, spike_rng, order_rng, write_rng = seed_streams(cfg.seed, 5)
    if task["mnist_images"]:
        (x_train, y_train), (x_test, y_test) = mnist_task(task)
        n_classes = int(max(y_train.max(), y_test.max())) + 1
    else:
        (x_train, y_train), (x_test, y_test) = synthetic_task(task, data_rng)
        n_classes = task["n_classes"]
    sizes = [x_train.shape[1], *task["hidden"], n_classes]

    params = LIFParams(task["mem_decay"], task["syn_decay"], task["v_th"])
    rule = cfg.rule or RuleConfig("erbp", learning_rate=task["learning_rate"],
                                  surrogate_width=task["surrogate_width"],
                                  surrogate_center=task["v_th"])
    if rule.rule != "erbp":
        raise ConfigError("erbp-class needs the 'erbp' rule")
    device = None
    if task["device"] and not cfg.ideal:
        device = {"params": cfg.device_params(), "w_max": task["w_max"],
                  "rounding": task["rounding"]}
    net = SpikingNet(sizes, params, init_rng, task["init_scale"], device)
    fb_seeds = np.random.SeedSequence(rule.readout_seed).generate_state(len(sizes))
    feedback = [FeedbackWeights.random(n, n_classes, int(s))
                for n, s in zip(sizes[1:-1], fb_seeds)]
    feedback.append(FeedbackWeights.identity(n_classes))
    onehot = np.eye(n_classes)

    def evaluate(x, y):
        raster = encode_spikes(x, task["steps"], POISSON, spike_rng)
        return float(np.mean(_predict(net.run(raster)) == y))

    log = MetricsLog(cfg.seed)
    history = []
    for epoch in range(1, task["epochs"] + 1):
        order = order_rng.permutation(len(y_train))
        for start in range(0, len(order), task["batch_size"]):
            idx = np.sort(order[start:start + task["batch_size"]])
            raster = encode_spikes(x_train[idx], task["steps"], POISSON, spike_rng)
            net.run(raster, onehot[y_train[idx]], feedback, rule, task["target_rate"], write_rng)
        train_acc = evaluate(x_train, y_train)
        test_acc = evaluate(x_test, y_test)
        log.log("train_accuracy", epoch, train_acc)
        log.log("test_accuracy", epoch, test_acc)
        history.append(train_acc)
        if task["stop_accuracy"] is not None and train_acc >= task["stop_accuracy"]:
            break

    best = int(np.argmax(history)) + 1
    summary = {
        "epochs_run": len(history),
        "final_train_accuracy": history[-1],
        "final_test_accuracy": log.last("test_accuracy"),
        "best_train_accuracy": max(history),
        "best_epoch": best,
        "chance": 1.0 / n_classes,
        "device": device is not None,
    }
    lines = ["layer,row,col,weight"]
    for li, w in enumerate(net.weights):
        for (i, j), value in np.ndenumerate(w):
            lines.append(f"{li},{i},{j},{float(value)!r}")
    return RunResult(cfg, log, {"weights.csv": "\n".join(lines) + "\n"}, summary)
