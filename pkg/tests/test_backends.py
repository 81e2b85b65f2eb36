"""Parity between the numba kernels and the pure-NumPy fallbacks.

The backend is fixed at import time by ``HDLAB_NO_NUMBA``, so the opposite
backend runs in a subprocess and results are compared as JSON.
"""

import json
import os
import subprocess
import sys

import pytest

from hdlab.backend import USE_NUMBA, backend_name

_PROBE = r"""
import json
import numpy as np
import hdlab as H

disk = H.make_indicator([{"type": "disk", "cx": 2, "cy": 2, "r": 1}], 4.0, 1 / 32)
sharp = H.counting_sharp(disk, H.CountingParams(n=1, lam=1.0, quadrature_nodes=32))
mc = H.counting_smooth(disk, H.CountingParams(n=2, lam=1.0, eps=0.5,
                                              estimator="monte_carlo",
                                              mc_samples=400, seed=9))
g = H.PlanarGrid(1.0, 1 / 16, np.random.Generator(np.random.Philox(key=1)).random((16, 16)))
u2 = H.gowers_norm(g, 2)
mask = H.PlanarGrid(1.0, 1 / 32,
                    (np.random.Generator(np.random.Philox(key=2)).random((32, 32)) < 0.5).astype(float))
out = H.find_copy(H.PlanarSet.from_bitmap(mask), (0.3,), H.SearchSpec(x_step=1 / 8))
print(json.dumps({
    "backend": H.backend_name(),
    "sharp": sharp.value,
    "mc": mc.value,
    "u2": u2,
    "cursor": out.resume_cursor,
    "status": out.status,
}))
"""


def _run_probe(disable_numba: bool) -> dict:
    env = dict(os.environ)
    env["HDLAB_NO_NUMBA"] = "1" if disable_numba else "0"
    res = subprocess.run([sys.executable, "-c", _PROBE], env=env,
                         capture_output=True, text=True, timeout=600)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


def test_env_flag_selects_backend():
    assert _run_probe(True)["backend"] == "numpy"


@pytest.mark.skipif(not USE_NUMBA, reason="numba backend unavailable")
def test_backend_parity():
    a = _run_probe(False)
    b = _run_probe(True)
    assert a["backend"] == "numba" and b["backend"] == "numpy"
    assert a["status"] == b["status"]
    assert a["cursor"] == b["cursor"]
    for key in ("sharp", "mc", "u2"):
        assert abs(a[key] - b[key]) <= 1e-12 * max(1.0, abs(a[key])), key


def test_backend_name_reports_active():
    assert backend_name() in ("numba", "numpy")
