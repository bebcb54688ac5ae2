"""Pure numpy implementation of the Monte-Carlo weight kernel.

Mirrors ``_kernel.pyx`` operation for operation; used when the compiled
extension is unavailable and as the baseline in the benchmark.
"""
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
STRIDE = 8  # random outputs reserved per sample (2n <= 6 used)
GUARD = 1e-12
GROUND_L = -1
GROUND_R = -2


def mix64(z):
    """SplitMix64 output function on a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int) -> int:
    """First SplitMix64 output for ``seed``; the per-run stream state."""
    with np.errstate(over="ignore"):
        return int(mix64(np.array([seed], dtype=np.uint64) + GOLDEN)[0])


def uniforms(key: int, start: int, count: int, width: int) -> np.ndarray:
    """Uniforms in (0, 1) for samples ``start..start+count``, ``width`` per sample."""
    s = np.arange(start, start + count, dtype=np.uint64)[:, None]
    t = np.arange(width, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        ctr = s * np.uint64(STRIDE) + t + np.uint64(1)
        h = mix64(np.uint64(key) + ctr * GOLDEN)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def sample_values(targets: np.ndarray, key: int, start: int, count: int):
    """Integrand values (without the 1/(n!(2pi)^2n) prefactor) and a validity mask."""
    n = targets.shape[0]
    u = uniforms(key, start, count, 2 * n)
    a = np.pi * (u[:, 0::2] - 0.5)
    x = np.tan(a)
    v = u[:, 1::2]
    y = v / (1.0 - v)
    jac = np.prod(np.pi * (1.0 + x * x) * (1.0 + y) ** 2, axis=1)
    z = x + 1j * y

    pts = np.concatenate([z, np.conj(z), np.zeros((count, 1)), np.ones((count, 1))], axis=1)
    diff = np.abs(pts[:, :, None] - pts[:, None, :])
    m = pts.shape[1]
    iu = np.triu_indices(m, 1)
    ok = np.all(diff[:, iu[0], iu[1]] >= GUARD, axis=1)

    M = np.zeros((count, 2 * n, 2 * n))
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(n):
            zk = z[:, k]
            for slot in range(2):
                row = 2 * k + slot
                t = int(targets[k, slot])
                if t == GROUND_L:
                    z2 = np.zeros(count, dtype=complex)
                elif t == GROUND_R:
                    z2 = np.ones(count, dtype=complex)
                else:
                    z2 = z[:, t]
                r1 = 1.0 / (z2 - zk)
                r2 = 1.0 / (np.conj(z2) - zk)
                # d/dx_k, d/dy_k of arg(z2 - zk) + arg(conj(z2) - zk)
                M[:, row, 2 * k] = -(r1.imag + r2.imag)
                M[:, row, 2 * k + 1] = -(r1.real + r2.real)
                if t >= 0:
                    M[:, row, 2 * t] += r1.imag + r2.imag
                    M[:, row, 2 * t + 1] += r1.real - r2.real
        vals = np.linalg.det(M) * jac
    ok &= np.isfinite(vals)
    return vals, ok


def block_stats(targets, key, start, count):
    """``(accepted, mean, m2, discarded)`` for one block of samples."""
    vals, ok = sample_values(np.asarray(targets, dtype=np.int64), key, start, count)
    good = vals[ok]
    acc = good.size
    if acc == 0:
        return 0, 0.0, 0.0, count
    # cumsum accumulates left to right, matching the compiled kernel's loop
    mean = float(np.cumsum(good)[-1]) / acc
    dev = good - mean
    m2 = float(np.cumsum(dev * dev)[-1])
    return acc, mean, m2, count - acc
