"""Fully connected autoencoder trained with Adam, in plain numpy."""
import numpy as np

from ..errors import ConfigError, NonFiniteLoss
from .base import ScoreVector


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Autoencoder:
    """``p -> hidden_neurons -> p`` network; ReLU inside, sigmoid on the output.

    Parameters
    ----------
    n_features : int
    hidden_neurons : sequence of int
        Must read the same forwards and backwards, e.g. ``[64, 32, 32, 64]``.
    rng : numpy.random.Generator
        Drives weight initialisation and minibatch shuffling.
    """

    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8

    def __init__(self, n_features, hidden_neurons, rng):
        hidden = [int(h) for h in hidden_neurons]
        if not hidden or any(h < 1 for h in hidden):
            raise ConfigError(f"hidden_neurons must be a non-empty list of positive ints, got {hidden_neurons}")
        if hidden != hidden[::-1]:
            raise ConfigError(f"hidden_neurons must mirror encoder and decoder, got {hidden}")
        self.sizes = [int(n_features)] + hidden + [int(n_features)]
        self.rng = rng
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        self._m = [np.zeros_like(a) for a in self.weights + self.biases]
        self._v = [np.zeros_like(a) for a in self.weights + self.biases]
        self._t = 0
        self.loss_history = []

    def _forward(self, X):
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = _sigmoid(z) if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return acts

    def reconstruct(self, X):
        return self._forward(np.asarray(X, dtype=np.float64))[-1]

    def _step(self, X, lr):
        acts = self._forward(X)
        out = acts[-1]
        diff = out - X
        loss = float(np.mean(diff * diff))
        # d(mean sq err)/d(out), then through the sigmoid
        delta = (2.0 / diff.size) * diff * out * (1.0 - out)
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = acts[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        self._t += 1
        params = self.weights + self.biases
        grads = grads_w + grads_b
        c1 = 1.0 - self.beta1**self._t
        c2 = 1.0 - self.beta2**self._t
        for j, (p, g) in enumerate(zip(params, grads)):
            m, v = self._m[j], self._v[j]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return loss

    def fit(self, X, epochs=100, batch_size=32, learning_rate=1e-3):
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        for epoch in range(int(epochs)):
            order = self.rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch_size):
                batch = X[order[start : start + batch_size]]
                # overflow surfaces below as NonFiniteLoss
                with np.errstate(over="ignore", invalid="ignore"):
                    loss = self._step(batch, learning_rate)
                if not np.isfinite(loss):
                    raise NonFiniteLoss(
                        f"autoencoder loss became {loss} in epoch {epoch + 1}; "
                        f"try a learning rate below {learning_rate:g}"
                    )
                total += loss * batch.shape[0]
            self.loss_history.append(total / n)
        return self

    def record_errors(self, X):
        X = np.asarray(X, dtype=np.float64)
        diff = self.reconstruct(X) - X
        return np.mean(diff * diff, axis=1)


def autoencoder_scores(X, hidden_neurons=(64, 32, 32, 64), epochs=100, batch_size=32, learning_rate=1e-3, rng=None):
    if int(epochs) < 1 or int(batch_size) < 1 or not learning_rate > 0:
        raise ConfigError("epochs and batch_size must be >= 1 and learning_rate > 0")
    rng = rng if rng is not None else np.random.default_rng(0)
    X = np.asarray(X, dtype=np.float64)
    model = Autoencoder(X.shape[1], hidden_neurons, rng)
    model.fit(X, int(epochs), int(batch_size), float(learning_rate))
    return model.record_errors(X), model


def score_autoencoder(frame, hidden_neurons=(64, 32, 32, 64), epochs=100, batch_size=32, learning_rate=1e-3, seed=0, name="AE"):
    scores, _ = autoencoder_scores(
        frame.values, hidden_neurons, epochs, batch_size, learning_rate, np.random.default_rng(seed)
    )
    return ScoreVector(name, frame.ids, scores)
