"""Binary snapshot frames: a header (<i8 K, <i8 Np, <i8 m, <f8 t) then K·Np·m little-endian doubles.

A ``.json`` index with the same stem records the frame count, shape, time
step and free-form metadata.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from dgnet.errors import DGNetError

logger = logging.getLogger(__name__)

FRAME_HEADER = np.dtype([("K", "<i8"), ("Np", "<i8"), ("m", "<i8"), ("t", "<f8")])
FRAME_DATA = np.dtype("<f8")


class FrameWriter:
    """Append frames to ``<path>`` and write ``<path>.json`` on close.

    Usable as a snapshot sink: ``writer(index, t, state)``.
    """

    def __init__(self, path: Path, dt: float | None = None, metadata: dict | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.dt = dt
        self.metadata = metadata or {}
        self.count = 0
        self.shape: tuple[int, int, int] | None = None
        self.times: list[float] = []
        self._f = open(self.path, "wb")

    def write(self, t: float, state) -> None:
        state = np.ascontiguousarray(state, dtype=FRAME_DATA)
        if state.ndim != 3:
            raise ValueError(f"frames hold (K, Np, m) states, got shape {state.shape}")
        if self.shape is None:
            self.shape = tuple(int(s) for s in state.shape)
        elif state.shape != self.shape:
            raise ValueError(f"frame shape {state.shape} differs from {self.shape}")
        header = np.array([(*self.shape, float(t))], dtype=FRAME_HEADER)
        self._f.write(header.tobytes())
        self._f.write(state.tobytes(order="C"))
        self.count += 1
        self.times.append(float(t))

    def __call__(self, index: int, t: float, state) -> None:
        self.write(t, state)

    def close(self) -> None:
        if self._f.closed:
            return
        self._f.close()
        index = {
            "count": self.count,
            "shape": list(self.shape) if self.shape else None,
            "dt": self.dt,
            "t_first": self.times[0] if self.times else None,
            "t_last": self.times[-1] if self.times else None,
            "metadata": self.metadata,
        }
        index_path(self.path).write_text(json.dumps(index, indent=2, sort_keys=True), encoding="utf-8")
        logger.debug("Wrote %d frames to %s", self.count, self.path)

    def __enter__(self) -> FrameWriter:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def index_path(path: Path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def read_frames(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """All frames of a file as (times (n,), states (n, K, Np, m)).

    Raises:
        DGNetError: truncated file or inconsistent frame shapes.
    """
    raw = Path(path).read_bytes()
    times, states = [], []
    offset = 0
    shape = None
    while offset < len(raw):
        if offset + FRAME_HEADER.itemsize > len(raw):
            raise DGNetError(f"truncated frame header in {path} at byte {offset}")
        header = np.frombuffer(raw, dtype=FRAME_HEADER, count=1, offset=offset)[0]
        offset += FRAME_HEADER.itemsize
        frame_shape = (int(header["K"]), int(header["Np"]), int(header["m"]))
        if shape is None:
            shape = frame_shape
        elif frame_shape != shape:
            raise DGNetError(f"frame {len(states)} of {path} has shape {frame_shape}, expected {shape}")
        n = frame_shape[0] * frame_shape[1] * frame_shape[2]
        if offset + n * FRAME_DATA.itemsize > len(raw):
            raise DGNetError(f"truncated frame {len(states)} in {path}")
        states.append(np.frombuffer(raw, dtype=FRAME_DATA, count=n, offset=offset).reshape(frame_shape))
        offset += n * FRAME_DATA.itemsize
        times.append(float(header["t"]))
    if not states:
        return np.zeros(0), np.zeros((0, 0, 0, 0))
    return np.asarray(times), np.stack(states).astype(np.float64)


def write_frame_csv(path: Path, x: np.ndarray, state: np.ndarray) -> Path:
    """One frame as CSV rows ``element,node,x[,y],q0..q{m-1}`` with %.17g values."""
    path = Path(path)
    x = np.asarray(x)
    state = np.asarray(state)
    K, Np, m = state.shape
    d = x.shape[-1]
    coords = ["x", "y"][:d]
    lines = [",".join(["element", "node", *coords, *[f"q{i}" for i in range(m)]])]
    for k in range(K):
        for n in range(Np):
            values = [*x[k, n], *state[k, n]]
            lines.append(f"{k},{n}," + ",".join(f"{v:.17g}" for v in values))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
