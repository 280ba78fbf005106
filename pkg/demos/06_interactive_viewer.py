"""Launch the frame-streaming viewer service on a synthetic dataset.

The service holds the viewer state (camera matrices, transfer function,
render settings) behind a small HTTP API and pushes rendered frames over
a websocket.  State updates are latest-wins: hammering the camera during
a drag never queues stale renders.

    GET  /info    dataset statistics + current state
    POST /state   partial update {channels | transfer_function | settings}
    WS   /stream  subscribe, then binary frames (28-byte header + RGBA8)

If the browser client has been built (see frontend/), it is served at /.
"""

import sys
import tempfile
from pathlib import Path

from amrvol import synth
from amrvol.service import run

workdir = Path(tempfile.mkdtemp(prefix="amrvol_demo_"))
config = workdir / "demo.config"
field = synth.generate(blobs=4, levels=3, threshold=0.1, seed=42, root=8)
synth.write_dataset(config, field)
print(f"dataset: {len(field)} cells at {config}")

port = int(sys.argv[1]) if len(sys.argv) > 1 else 8707
run(str(config), host="127.0.0.1", port=port, width=640, height=480)
