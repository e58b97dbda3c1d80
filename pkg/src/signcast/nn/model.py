"""Sequential model: ordered layer stack with recorded-activation training."""

import numpy as np

from .layers import Layer, NoRecordedForwardError, Softmax
from .weights_io import ModelWeights, ShapeMismatchError


class Model:
    """Ordered stack of layers sharing one forward/backward lifecycle.

    forward(training=True) records activations; backward() then produces
    parameter gradients. By convention the loss gradient handed to
    backward(from_logits=True) is w.r.t. the logits feeding the final
    Softmax (the combined softmax/cross-entropy form), so that layer is
    skipped on the way back.
    """

    def __init__(self, layers):
        self.layers = list(layers)
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate layer names: {names}")
        self._recorded = False

    def forward(self, x, training=False):
        if not training:
            self._recorded = False
            for layer in self.layers:
                layer.clear_cache()
        for layer in self.layers:
            x = layer.forward(x, training=training)
        if training:
            self._recorded = True
        return x

    def backward(self, dy, from_logits=True):
        if not self._recorded:
            raise NoRecordedForwardError("backward() without a training-mode forward()")
        self._recorded = False
        layers = self.layers
        if from_logits and layers and isinstance(layers[-1], Softmax):
            layers = layers[:-1]
        for layer in reversed(layers):
            dy = layer.backward(dy)
        return dy

    def params(self, trainable_only=False):
        out = []
        for layer in self.layers:
            if trainable_only and layer.frozen:
                continue
            for pname, arr in layer.params():
                out.append((f"{layer.name}.{pname}", arr))
        return out

    def grads(self, trainable_only=False):
        out = []
        for layer in self.layers:
            if trainable_only and layer.frozen:
                continue
            for pname, arr in layer.grads():
                out.append((f"{layer.name}.{pname}", arr))
        return out

    def num_params(self):
        return sum(arr.size for _, arr in self.params())

    def state(self):
        return ModelWeights(records=[(name, arr.copy()) for name, arr in self.params()])

    def load_state(self, weights):
        """Copy a ModelWeights into this model; shapes must line up."""
        current = dict(self.params())
        incoming = dict(weights.records)
        if set(current) != set(incoming):
            missing = sorted(set(current) ^ set(incoming))
            raise ShapeMismatchError(f"parameter names do not match: {missing}")
        for name, arr in current.items():
            new = incoming[name]
            if tuple(new.shape) != tuple(arr.shape):
                raise ShapeMismatchError(
                    f"{name}: file has shape {tuple(new.shape)}, model expects {tuple(arr.shape)}"
                )
            arr[...] = new.astype(arr.dtype)

    def specs(self):
        return [layer.spec() for layer in self.layers]
