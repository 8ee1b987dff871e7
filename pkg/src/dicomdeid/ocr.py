"""Pluggable text-detection engines.

Three implementations: scripted detections for tests, sidecar JSON
fixtures next to each file, and a child process speaking one JSON
object per line over stdio. The wire request carries the rendered
8-bit image; the child answers with detections whose boxes are
quadrilaterals in pixel coordinates.
"""

from __future__ import annotations

import base64
import json
import logging
import subprocess
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EngineUnavailable

log = logging.getLogger("dicomdeid")

Point = tuple[float, float]


@dataclass
class Image8:
    rows: int
    cols: int
    channels: int
    pixels: np.ndarray  # uint8, (rows, cols) or (rows, cols, 3)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image8":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            return cls(arr.shape[0], arr.shape[1], 1, arr)
        return cls(arr.shape[0], arr.shape[1], arr.shape[2], arr)

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes()


@dataclass
class Detection:
    text: str
    box: list[Point]  # 4 corners, stored as given by the engine
    confidence: float | None = None

    def to_json(self) -> dict:
        out = {"text": self.text, "box": [[float(x), float(y)] for x, y in self.box]}
        if self.confidence is not None:
            out["confidence"] = self.confidence
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Detection":
        box = [(float(p[0]), float(p[1])) for p in obj["box"]]
        return cls(str(obj.get("text", "")), box, obj.get("confidence"))


class OcrEngine:
    """Interface: detect() plus a thread-safety declaration the pipeline honors."""

    thread_safe = True

    def detect(self, img: Image8, source_path: Path | None = None) -> list[Detection]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class MockEngine(OcrEngine):
    """Scripted detections: one list for every image, or keyed by file name."""

    def __init__(self, detections: list[Detection] | None = None, by_name: dict[str, list[Detection]] | None = None):
        self.detections = detections or []
        self.by_name = by_name or {}

    def detect(self, img: Image8, source_path: Path | None = None) -> list[Detection]:
        if source_path is not None and self.by_name:
            return list(self.by_name.get(Path(source_path).name, []))
        return list(self.detections)


class FixtureEngine(OcrEngine):
    """Reads `<file>.ocr.json` next to each input file; absent file means no text."""

    def detect(self, img: Image8, source_path: Path | None = None) -> list[Detection]:
        if source_path is None:
            return []
        sidecar = Path(str(source_path) + ".ocr.json")
        if not sidecar.exists():
            return []
        doc = json.loads(sidecar.read_text())
        return [Detection.from_json(obj) for obj in doc]


class SidecarEngine(OcrEngine):
    """Child process speaking JSON lines: request/response pairs by id.

    Serial per instance; the pipeline creates one engine per worker when
    running threaded.
    """

    thread_safe = False

    def __init__(self, command: list[str], startup_timeout: float = 60.0):
        self.command = list(command)
        self.startup_timeout = startup_timeout
        self._proc: subprocess.Popen | None = None
        self._next_id = 0
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EngineUnavailable(f"cannot start {self.command!r}: {exc}") from exc
        line = self._proc.stdout.readline()
        try:
            ready = json.loads(line) if line else {}
        except json.JSONDecodeError:
            ready = {}
        if not ready.get("ready"):
            self.close()
            raise EngineUnavailable(f"sidecar did not report readiness: {line!r}")
        return self._proc

    def detect(self, img: Image8, source_path: Path | None = None) -> list[Detection]:
        with self._lock:
            proc = self._ensure_started()
            self._next_id += 1
            request = {
                "id": self._next_id,
                "width": img.cols,
                "height": img.rows,
                "channels": img.channels,
                "pixels": base64.b64encode(img.to_bytes()).decode("ascii"),
            }
            try:
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise EngineUnavailable(f"sidecar pipe failed: {exc}") from exc
            if not line:
                raise EngineUnavailable("sidecar closed its output")
            try:
                response = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EngineUnavailable(f"sidecar wrote non-JSON: {line!r}") from exc
            if response.get("id") != self._next_id:
                raise EngineUnavailable(
                    f"sidecar answered id {response.get('id')} to request {self._next_id}"
                )
            if "error" in response:
                log.warning("sidecar error for %s: %s", source_path, response["error"])
                return []
            return [Detection.from_json(obj) for obj in response.get("detections", [])]

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=5)
        except Exception:
            self._proc.kill()
        self._proc = None


@dataclass
class EngineProvider:
    """Hands each worker thread its own engine when the engine is not thread safe."""

    factory: object  # () -> OcrEngine
    shared: OcrEngine | None = None
    _local: threading.local = field(default_factory=threading.local, repr=False)
    _made: list = field(default_factory=list, repr=False)

    def get(self) -> OcrEngine:
        if self.shared is not None:
            return self.shared
        engine = getattr(self._local, "engine", None)
        if engine is None:
            engine = self.factory()
            self._local.engine = engine
            self._made.append(engine)
        return engine

    def close_all(self) -> None:
        if self.shared is not None:
            self.shared.close()
        for engine in self._made:
            engine.close()

    @classmethod
    def for_engine(cls, engine_or_factory) -> "EngineProvider":
        if isinstance(engine_or_factory, OcrEngine):
            if engine_or_factory.thread_safe:
                return cls(factory=None, shared=engine_or_factory)
            # A non-thread-safe instance still works: its own lock serializes calls.
            return cls(factory=None, shared=engine_or_factory)
        probe = engine_or_factory()
        if probe.thread_safe:
            return cls(factory=engine_or_factory, shared=probe)
        provider = cls(factory=engine_or_factory)
        provider._made.append(probe)
        provider._local.engine = probe
        return provider
