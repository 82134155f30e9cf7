import numpy as np

from ..errors import NonFiniteLoss


def _value(loss_fn):
    out = loss_fn()
    v = float(out.data) if hasattr(out, "data") else float(out)
    if not np.isfinite(v):
        raise NonFiniteLoss(f"loss evaluated to {v}")
    return out, v


def check_gradients(loss_fn, params, eps=1e-5, max_coords=None, seed=0):
    """Compare reverse-mode gradients against central differences.

    ``loss_fn`` takes no arguments and returns a scalar Tensor built from
    ``params`` (an iterable of Tensors, or a name -> Tensor mapping). At most
    ``max_coords`` coordinates per parameter are probed, sampled with ``seed``.
    Returns the largest ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``.
    """
    params = list(params.values()) if isinstance(params, dict) else list(params)
    for p in params:
        p.grad = None
    out, _ = _value(loss_fn)
    out.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)  # view: perturbations write through
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            _, up = _value(loss_fn)
            flat[i] = orig - eps
            _, down = _value(loss_fn)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            a = grad.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    for p in params:
        p.grad = None
    return worst
