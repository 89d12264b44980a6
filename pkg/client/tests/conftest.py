from __future__ import annotations

import threading
import time

import pytest
import uvicorn

from sv6d.service import create_app


@pytest.fixture(scope="session")
def service_url():
    """A real uvicorn server on an ephemeral port; the client only sees HTTP."""
    config = uvicorn.Config(
        create_app(), host="127.0.0.1", port=0, log_level="warning", loop="asyncio"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("service did not start in time")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
