"""Zero-free characteristic functions, quantitative KS bounds, and
desk-scale CLT experiments for spin systems and alpha-determinantal
point processes."""

__version__ = "0.1.0"

from . import charfn, dpp, spin  # noqa: E402,F401
from .charfn import (CharFnModel, DiskScanReport, KSBoundReport,  # noqa: F401
                     empirical_ks, eval_charfn, ks_bound, smoothing_ks_bound,
                     zero_free_radius)
from .registry import make_model  # noqa: F401
