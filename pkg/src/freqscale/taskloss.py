"""Differentiable task-loss proxies and the external-gradient bridge.

Each proxy exposes evaluate(distorted, reference) -> float and
gradient(distorted, reference) -> tensor of the same shape, consistent with
central finite differences. Two built-ins span the frequency-sensitivity
axis:

* lowfreq-mse: MSE between k x k average-pooled images. Pooling averages out
  zero-mean high-frequency content inside each pool, so high-frequency
  distortion is tolerated.
* edge-mse: MSE of the Laplacian-filtered residual, kernel
  [[0,-1,0],[-1,4,-1],[0,-1,0]] applied over the valid interior, so
  high-frequency distortion is penalized and constant offsets are free.

The external proxy talks to a subprocess over its standard streams with a
newline-delimited protocol, one request in flight at a time:

    request:  "EVAL <n>\n" then n lines, each the base64 encoding of one row
              of the distorted tensor as little-endian float32, channel-major
              (all H rows of channel 0, then channel 1, then channel 2;
              n = 3*H, row width inferred from the decoded byte count)
    response: "LOSS <value>\n" then n lines, same layout, the gradient

The reference image is not transmitted: an external evaluator scores the
distorted image against its own ground truth.
"""

import base64
import select
import shlex
import subprocess
import threading

import numpy as np

from .errors import BridgeError, ConfigError


def _check_shapes(distorted: np.ndarray, reference: np.ndarray):
    if distorted.shape != reference.shape:
        raise ValueError(
            f"shape mismatch: distorted {distorted.shape} vs reference {reference.shape}"
        )
    if distorted.ndim != 3 or distorted.shape[0] != 3:
        raise ValueError(f"expected (3, H, W) tensors, got {distorted.shape}")


class LowFreqMse:
    """MSE of k x k average-pooled images (default k=4).

    H and W are cropped down to multiples of k before pooling; cropped pixels
    carry zero gradient. The gradient is the pooling adjoint: each pooled
    difference is broadcast back over its pool scaled by 2/(N*k*k) with N the
    pooled element count.
    """

    name = "lowfreq-mse"

    def __init__(self, pool: int = 4):
        if pool < 1:
            raise ConfigError(f"pool factor must be >= 1, got {pool}")
        self.pool = pool

    def _pooled_diff(self, distorted, reference):
        k = self.pool
        h = distorted.shape[1] - distorted.shape[1] % k
        w = distorted.shape[2] - distorted.shape[2] % k
        if h == 0 or w == 0:
            raise ValueError(f"image smaller than pool factor {k}")
        res = distorted[:, :h, :w] - reference[:, :h, :w]
        pooled = res.reshape(3, h // k, k, w // k, k).mean(axis=(2, 4))
        return pooled, h, w

    def evaluate(self, distorted: np.ndarray, reference: np.ndarray) -> float:
        _check_shapes(distorted, reference)
        pooled, _, _ = self._pooled_diff(distorted, reference)
        return float(np.mean(pooled * pooled))

    def gradient(self, distorted: np.ndarray, reference: np.ndarray) -> np.ndarray:
        _check_shapes(distorted, reference)
        k = self.pool
        pooled, h, w = self._pooled_diff(distorted, reference)
        grad = np.zeros_like(distorted)
        scale = 2.0 / (pooled.size * k * k)
        grad[:, :h, :w] = np.repeat(np.repeat(pooled, k, axis=1), k, axis=2) * scale
        return grad

    def evaluate_with_gradient(self, distorted, reference):
        return self.evaluate(distorted, reference), self.gradient(distorted, reference)


def _laplacian_valid(x: np.ndarray) -> np.ndarray:
    """5-tap Laplacian over the interior; output shape (3, H-2, W-2)."""
    center = x[:, 1:-1, 1:-1]
    return (
        4.0 * center
        - x[:, :-2, 1:-1]
        - x[:, 2:, 1:-1]
        - x[:, 1:-1, :-2]
        - x[:, 1:-1, 2:]
    )


class EdgeMse:
    """MSE of the Laplacian-filtered residual over the valid interior."""

    name = "edge-mse"

    def evaluate(self, distorted: np.ndarray, reference: np.ndarray) -> float:
        _check_shapes(distorted, reference)
        if distorted.shape[1] < 3 or distorted.shape[2] < 3:
            return 0.0
        filtered = _laplacian_valid(distorted - reference)
        return float(np.mean(filtered * filtered))

    def gradient(self, distorted: np.ndarray, reference: np.ndarray) -> np.ndarray:
        _check_shapes(distorted, reference)
        grad = np.zeros_like(distorted)
        if distorted.shape[1] < 3 or distorted.shape[2] < 3:
            return grad
        filtered = _laplacian_valid(distorted - reference)
        t = filtered * (2.0 / filtered.size)
        # adjoint of the valid correlation; the kernel is symmetric
        grad[:, 1:-1, 1:-1] += 4.0 * t
        grad[:, :-2, 1:-1] -= t
        grad[:, 2:, 1:-1] -= t
        grad[:, 1:-1, :-2] -= t
        grad[:, 1:-1, 2:] -= t
        return grad

    def evaluate_with_gradient(self, distorted, reference):
        return self.evaluate(distorted, reference), self.gradient(distorted, reference)


class ExternalBridge:
    """Task loss served by a subprocess over the line protocol above."""

    name = "external"

    def __init__(self, command: str, timeout: float = 60.0):
        if not command:
            raise ConfigError("external proxy needs a command, e.g. external:python eval.py")
        self.command = command
        self.timeout = timeout
        self._lock = threading.Lock()
        self._buffer = b""
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
        )

    def _read_line(self) -> bytes:
        while b"\n" not in self._buffer:
            if self._proc.poll() is not None and not self._buffer:
                raise BridgeError(f"bridge process exited with {self._proc.returncode}")
            ready, _, _ = select.select([self._proc.stdout], [], [], self.timeout)
            if not ready:
                raise BridgeError(f"bridge timeout after {self.timeout} s")
            chunk = self._proc.stdout.read(65536)
            if not chunk:
                raise BridgeError("bridge closed its output stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _exchange(self, distorted: np.ndarray) -> tuple[float, np.ndarray]:
        channels, height, width = distorted.shape
        rows = distorted.reshape(channels * height, width).astype("<f4")
        request = [b"EVAL %d" % (channels * height)]
        request += [base64.b64encode(row.tobytes()) for row in rows]
        with self._lock:
            try:
                self._proc.stdin.write(b"\n".join(request) + b"\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise BridgeError(f"bridge stdin write failed: {exc}") from exc
            header = self._read_line()
            if not header.startswith(b"LOSS "):
                raise BridgeError(f"protocol error: expected LOSS, got {header[:40]!r}")
            try:
                loss = float(header[5:])
            except ValueError:
                raise BridgeError(f"protocol error: bad loss value {header[5:40]!r}") from None
            grad_rows = []
            for _ in range(channels * height):
                line = self._read_line()
                try:
                    decoded = base64.b64decode(line, validate=True)
                except Exception as exc:
                    raise BridgeError(f"protocol error: bad base64 row: {exc}") from exc
                row = np.frombuffer(decoded, dtype="<f4")
                if row.size != width:
                    raise BridgeError(
                        f"protocol error: gradient row has {row.size} values, expected {width}"
                    )
                grad_rows.append(row)
        grad = np.stack(grad_rows).reshape(channels, height, width).astype(np.float64)
        return loss, grad

    def evaluate(self, distorted: np.ndarray, reference: np.ndarray) -> float:
        _check_shapes(distorted, reference)
        return self._exchange(distorted)[0]

    def gradient(self, distorted: np.ndarray, reference: np.ndarray) -> np.ndarray:
        _check_shapes(distorted, reference)
        return self._exchange(distorted)[1]

    def evaluate_with_gradient(self, distorted, reference):
        _check_shapes(distorted, reference)
        return self._exchange(distorted)

    def close(self):
        if self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def make_proxy(spec: str, timeout: float = 60.0):
    """Build a proxy from its CLI name: lowfreq-mse[:POOL], edge-mse,
    or external:<command line>."""
    if spec == "lowfreq-mse":
        return LowFreqMse()
    if spec.startswith("lowfreq-mse:"):
        return LowFreqMse(pool=int(spec.split(":", 1)[1]))
    if spec == "edge-mse":
        return EdgeMse()
    if spec.startswith("external:"):
        return ExternalBridge(spec.split(":", 1)[1], timeout=timeout)
    raise ConfigError(f"unknown task-loss proxy {spec!r}")
