"""Built-in characteristic-function model registry for the CLI.

Models are addressed by name plus keyword parameters, e.g.
``make_model("iid_sum", base="rademacher", n=100)`` or
``make_model("spin_total", model="ising", dim=1, side=2, beta=1.0, field=0.5)``.
"""

from __future__ import annotations

from .charfn import (CharFnModel, binomial_model, gaussian_model,
                     iid_sum_model, poisson_centered_model, rademacher_model)
from .errors import ArgumentError

__all__ = ["make_model", "MODEL_NAMES"]

MODEL_NAMES = ("gaussian", "rademacher", "binomial", "poisson_centered",
               "iid_sum", "spin_total", "dpp_linstat")


def make_model(name: str, **params) -> CharFnModel:
    if name == "gaussian":
        return gaussian_model()
    if name == "rademacher":
        return rademacher_model()
    if name == "binomial":
        return binomial_model(int(params.get("n", 10)),
                              float(params.get("p", 0.5)),
                              bool(params.get("standardized", True)))
    if name == "poisson_centered":
        return poisson_centered_model(float(params.get("lam", 1.0)),
                                      bool(params.get("standardized", True)))
    if name == "iid_sum":
        base = params.get("base", "rademacher")
        base_params = {k[5:]: v for k, v in params.items()
                       if k.startswith("base.")}
        if isinstance(base, str):
            base = make_model(base, **base_params)
        return iid_sum_model(base, int(params.get("n", 100)),
                             bool(params.get("standardized", True)))
    if name == "spin_total":
        from .harness import _spin_model_from_params
        from .spin import spin_total_model
        return spin_total_model(_spin_model_from_params(params))
    if name == "dpp_linstat":
        from .harness import _kernel_from_params, _phi_from_params
        from .dpp import discretize_for_scale, linstat_model
        spec = _kernel_from_params(params)
        phi = _phi_from_params(params, spec.dim)
        dk, phiv = discretize_for_scale(spec, phi, float(params.get("L", 8.0)),
                                        float(params.get("grid_res", 4.0)))
        return linstat_model(dk, phiv, spec.alpha)
    raise ArgumentError(f"unknown model {name!r}; known: {MODEL_NAMES}")
