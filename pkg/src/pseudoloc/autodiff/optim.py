"""Adam with decoupled weight decay."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-4
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


class Adam:
    """Adam over a list of named Parameters.

    Weight decay is decoupled: ``theta -= lr * wd * theta`` runs before the
    moment update, then the bias-corrected Adam step is applied and the
    gradients are zeroed.
    """

    def __init__(self, params, lr=1e-4, weight_decay=5e-4, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.state = AdamState(lr, weight_decay, betas[0], betas[1], eps)
        for p in self.params:
            self.state.m[p.name] = np.zeros_like(p.data)
            self.state.v[p.name] = np.zeros_like(p.data)

    def step(self):
        st = self.state
        st.step += 1
        bc1 = 1.0 - st.beta1 ** st.step
        bc2 = 1.0 - st.beta2 ** st.step
        for p in self.params:
            g = p.grad
            if st.weight_decay:
                p.data -= st.lr * st.weight_decay * p.data
            m, v = st.m[p.name], st.v[p.name]
            m *= st.beta1
            m += (1.0 - st.beta1) * g
            v *= st.beta2
            v += (1.0 - st.beta2) * (g * g)
            p.data -= st.lr * (m / bc1) / (np.sqrt(v / bc2) + st.eps)
            p.zero_grad()

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_arrays(self):
        out = {}
        for name in self.state.m:
            out[f"adam.m/{name}"] = self.state.m[name].copy()
            out[f"adam.v/{name}"] = self.state.v[name].copy()
        return out

    def state_meta(self):
        st = self.state
        return {"lr": st.lr, "weight_decay": st.weight_decay, "beta1": st.beta1,
                "beta2": st.beta2, "eps": st.eps, "step": st.step}

    def load_state(self, arrays, meta):
        st = self.state
        st.step = int(meta["step"])
        for name in st.m:
            st.m[name][...] = arrays[f"adam.m/{name}"]
            st.v[name][...] = arrays[f"adam.v/{name}"]
