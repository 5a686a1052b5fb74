import numpy as np


def clip_by_global_norm(grads: dict, max_norm: float) -> float:
    """Scale ``grads`` in place so their joint L2 norm is at most ``max_norm``.

    Returns the norm before clipping.
    """
    total = float(np.sqrt(sum(np.sum(g * g) for g in grads.values())))
    if max_norm and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


class Adam:
    def __init__(self, lr=5e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.step_count
        corr2 = 1.0 - b2 ** self.step_count
        for name, g in grads.items():
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            if self.lr:
                params[name] -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)

    def state(self) -> dict:
        out = {f"adam.m.{k}": v for k, v in self.m.items()}
        out.update({f"adam.v.{k}": v for k, v in self.v.items()})
        return out

    def load_state(self, tensors: dict, step_count: int) -> None:
        self.step_count = step_count
        self.m = {k[len("adam.m."):]: v.copy() for k, v in tensors.items() if k.startswith("adam.m.")}
        self.v = {k[len("adam.v."):]: v.copy() for k, v in tensors.items() if k.startswith("adam.v.")}
