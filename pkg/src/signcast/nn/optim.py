"""Plain SGD over a model's trainable parameters."""


class SGD:
    def __init__(self, learning_rate):
        if learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        self.learning_rate = learning_rate

    def step(self, model):
        params = model.params(trainable_only=True)
        grads = model.grads(trainable_only=True)
        for (pname, p), (gname, g) in zip(params, grads):
            if pname != gname or p.shape != g.shape:
                raise ValueError(f"parameter/gradient mismatch at {pname}")
            p -= p.dtype.type(self.learning_rate) * g
