r"""Monte-Carlo estimation of Kontsevich graph weights.

The weight of a graph in ``G_n`` is

    w = 1/(n! (2 pi)^(2n)) * integral over H_n of  /\_k dphi(z_k, I_k) /\ dphi(z_k, J_k)

with the wedge taken in vertex order against ``dx_1 dy_1 ... dx_n dy_n``.
Points are drawn on the unit hypercube and mapped by
``x = tan(pi (u - 1/2))``, ``y = v / (1 - v)``.

Randomness is a SplitMix64 stream: ``key = splitmix64(seed)`` and sample ``s``
uses outputs ``8 s + 1 .. 8 s + 2n`` of the stream started at ``key``.  The
sample range is cut into fixed blocks whose statistics are merged in block
order, so results do not depend on ``jobs``.
"""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import CoincidenceError, LimitExceeded
from ..graphs import L, R, AdmissibleGraph, graph_key
from . import _reference

try:  # compiled kernel, built by setup.py when a C compiler is present
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

BLOCK = 4096
MAX_WEIGHT_ORDER = 3
TWO_PI = 2.0 * math.pi

BACKENDS = {"python": _reference}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def default_backend() -> str:
    env = os.environ.get("KONTRA_BACKEND")
    if env:
        if env not in BACKENDS:
            raise ValueError(f"KONTRA_BACKEND={env!r} is not available; have {sorted(BACKENDS)}")
        return env
    return "compiled" if "compiled" in BACKENDS else "python"


def propagator_angle(z1: complex, z2: complex) -> float:
    """Harmonic angle ``phi(z1, z2)`` in ``[0, 2 pi)``, principal branch of the closed form.

    ``z1`` must lie in the open upper half-plane, ``z2`` in the closed one.
    """
    z1, z2 = complex(z1), complex(z2)
    if not z1.imag > 0:
        raise ValueError(f"z1={z1} is not in the upper half-plane")
    if z2.imag < 0:
        raise ValueError(f"z2={z2} is below the real axis")
    if abs(z2 - z1) < 1e-12 or abs(z2 - z1.conjugate()) < 1e-12:
        raise CoincidenceError(f"points {z1} and {z2} coincide")
    ratio = (z2 - z1) * (z2.conjugate() - z1) / ((z2 - z1.conjugate()) * (z2.conjugate() - z1.conjugate()))
    # principal Arg in (-pi, pi]; "+ 0.0" turns a -0.0 imaginary part into +0.0
    phi = math.atan2(ratio.imag + 0.0, ratio.real) / 2.0
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    return phi


def propagator_gradient(z1: complex, z2: complex, z2_is_aerial: bool = True):
    """Analytic ``(d/dx1, d/dy1, d/dx2, d/dy2)`` of ``phi(z1, z2)``.

    The last two entries are zero when ``z2`` is a fixed ground point.
    """
    r1 = 1.0 / (z2 - z1)
    r2 = 1.0 / (z2.conjugate() - z1)
    g = [-(r1.imag + r2.imag), -(r1.real + r2.real), 0.0, 0.0]
    if z2_is_aerial:
        g[2] = r1.imag + r2.imag
        g[3] = r1.real - r2.real
    return tuple(g)


@dataclass(frozen=True)
class WeightEstimate:
    graph: str
    estimate: float
    stderr: float
    samples: int
    seed: int
    discarded: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("graph")
        return d

    @classmethod
    def from_json(cls, key: str, obj: dict) -> "WeightEstimate":
        return cls(key, float(obj["estimate"]), float(obj["stderr"]), int(obj["samples"]),
                   int(obj["seed"]), int(obj.get("discarded", 0)))


def encode_targets(g: AdmissibleGraph):
    """Kernel encoding: aerial vertex ``k`` -> ``k - 1``, ``L`` -> -1, ``R`` -> -2."""
    code = {L: _reference.GROUND_L, R: _reference.GROUND_R}
    return [[code[t] if t in code else t - 1 for t in pair] for pair in g.edges]


def _merge(a, b):
    # Chan et al. pairwise update of (count, mean, M2)
    na, ma, sa = a
    nb, mb, sb = b
    if nb == 0:
        return a
    if na == 0:
        return b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def weight_estimate(g: AdmissibleGraph, samples: int, seed: int, *, backend: str | None = None,
                    jobs: int = 1, max_order: int = MAX_WEIGHT_ORDER) -> WeightEstimate:
    """Monte-Carlo estimate of the weight of ``g``; reproducible from ``(g, samples, seed)``."""
    if not 1 <= g.n <= max_order:
        raise LimitExceeded(f"weights are supported for 1 <= n <= {max_order}, got n={g.n}")
    if samples < 1:
        raise ValueError("samples must be positive")
    seed = int(seed) % (1 << 64)
    impl = BACKENDS[backend or default_backend()]
    key = _reference.stream_key(seed)
    targets = encode_targets(g)
    starts = list(range(0, samples, BLOCK))

    def run(start):
        return impl.block_stats(targets, key, start, min(BLOCK, samples - start))

    if jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(run, starts))
    else:
        blocks = [run(s) for s in starts]
    acc = (0, 0.0, 0.0)
    discarded = 0
    for n_ok, mean, m2, bad in blocks:
        acc = _merge(acc, (n_ok, mean, m2))
        discarded += bad
    count, mean, m2 = acc
    pref = 1.0 / (math.factorial(g.n) * TWO_PI ** (2 * g.n))
    if count > 1:
        sd = math.sqrt(m2 / (count - 1))
        stderr = pref * sd / math.sqrt(count)
    else:
        stderr = math.inf
    return WeightEstimate(graph_key(g), pref * mean, stderr, samples, seed, discarded)


def derive_seed(seed: int, key: str) -> int:
    """Per-graph seed used by weight tables: independent streams for different graphs."""
    h = hashlib.blake2b(f"{int(seed)}|{key}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")
