"""JSON-lines stdio server.

One request per line in, one response per line out, ids echoed.
Diagnostics go to stderr only; stdout carries nothing but protocol
lines. A malformed request produces an error line and the loop
continues; EOF ends the process cleanly.
"""

from __future__ import annotations

import base64
import json
import sys

import numpy as np

from .engine import detect_words


def _handle(request: dict) -> dict:
    req_id = request.get("id")
    try:
        width = int(request["width"])
        height = int(request["height"])
        channels = int(request.get("channels", 1))
        pixels = base64.b64decode(request["pixels"])
        expected = width * height * channels
        if len(pixels) != expected:
            raise ValueError(f"expected {expected} pixel bytes, got {len(pixels)}")
        shape = (height, width) if channels == 1 else (height, width, channels)
        image = np.frombuffer(pixels, dtype=np.uint8).reshape(shape)
    except (KeyError, ValueError, TypeError) as exc:
        return {"id": req_id, "error": f"bad request: {exc}"}

    words = detect_words(image)
    detections = [
        {"text": w.text, "box": w.box, "confidence": w.confidence} for w in words
    ]
    return {"id": req_id, "detections": detections}


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    try:
        # Warm the template atlas before declaring readiness.
        from .glyphs import templates

        templates()
    except Exception as exc:  # pragma: no cover - font setup failure
        print(json.dumps({"ready": False, "error": str(exc)}), file=stdout, flush=True)
        return 1
    print(json.dumps({"ready": True}), file=stdout, flush=True)

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            print(json.dumps({"id": None, "error": f"bad request: {exc}"}), file=stdout, flush=True)
            continue
        response = _handle(request)
        print(json.dumps(response), file=stdout, flush=True)
    return 0


def main() -> int:
    return serve()


if __name__ == "__main__":
    sys.exit(main())
