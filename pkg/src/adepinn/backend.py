"""Kernel backend selection.

Hot kernels (jet-activation chain rule, Crank-Nicolson march) exist in two
lanes: numba-compiled loops and pure numpy. The numba lane is used when
available unless ``ADEPINN_DISABLE_NUMBA=1`` is set; both lanes are
deterministic and agree to floating-point roundoff (see
``benchmarks/bench_kernels.py`` for a speed comparison).

Dense matrix products are *not* routed through numba: they stay on numpy's
BLAS in both lanes.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_FLAG = os.environ.get("ADEPINN_DISABLE_NUMBA", "").strip().lower()
DISABLE_NUMBA = _FLAG in {"1", "true", "yes", "on"}

if DISABLE_NUMBA:
    _impl = _kernels_numpy
    NAME = "numpy"
else:
    try:
        from . import _kernels_numba as _impl  # noqa: F401

        NAME = "numba"
    except ImportError:  # pragma: no cover - exercised only without numba
        _impl = _kernels_numpy
        NAME = "numpy"


def get_impl(name: str):
    """Fetch a kernel lane by name ('numpy' or 'numba'); used by benchmarks/tests."""
    if name == "numpy":
        return _kernels_numpy
    if name == "numba":
        from . import _kernels_numba

        return _kernels_numba
    raise ValueError(f"unknown kernel lane {name!r}")


def act_eval(code, x, order):
    return _impl.act_eval(code, x, order)


def jet_act_forward(code, v, g, h):
    """Shape-flexible wrapper: v (..., ), g/h (..., D) of matching leading shape."""
    lead = v.shape
    d = g.shape[-1]
    a, d1, d2, ag, ah = _impl.jet_act_forward(
        code, v.reshape(-1), g.reshape(-1, d), h.reshape(-1, d)
    )
    return (a.reshape(lead), d1.reshape(lead), d2.reshape(lead),
            ag.reshape(lead + (d,)), ah.reshape(lead + (d,)))



def cn_march(u0, fsum_half, left_type, left_c, right_type, right_c,
             lower, diag, upper, r, s):
    out = _impl.cn_march(u0, fsum_half, left_type, left_c, right_type, right_c,
                         lower, diag, upper, r, s)
    if out is None or out.size == 0:
        return None
    return out


def jet_bwg(g, d1, d2, agb):
    lead = d1.shape
    d = g.shape[-1]
    vb, gb = _impl.jet_bwg(g.reshape(-1, d), d1.reshape(-1), d2.reshape(-1),
                           agb.reshape(-1, d))
    return vb.reshape(lead), gb.reshape(lead + (d,))


def jet_bwh(code, v, g, h, d1, d2, ahb):
    lead = v.shape
    d = g.shape[-1]
    vb, gb, hb = _impl.jet_bwh(code, v.reshape(-1), g.reshape(-1, d),
                               h.reshape(-1, d), d1.reshape(-1), d2.reshape(-1),
                               ahb.reshape(-1, d))
    return vb.reshape(lead), gb.reshape(lead + (d,)), hb.reshape(lead + (d,))
