from __future__ import annotations

import pytest

from modelprobe.gateway import GatewayClient
from modelprobe.gateway.mocks import MockModel, MockModelServer
from modelprobe.store import Store


@pytest.fixture
def fast_gateway() -> GatewayClient:
    """Gateway with a near-zero retry backoff so failure paths stay quick."""
    return GatewayClient(backoff=(0.01, 0.01, 0.01), timeout=5.0)


@pytest.fixture
def store(tmp_path) -> Store:
    return Store(tmp_path / "store")


@pytest.fixture
def serve_mock():
    """Factory fixture: start a MockModelServer, stop them all at teardown."""
    servers: list[MockModelServer] = []

    def _serve(model: MockModel, fault_hook=None) -> MockModelServer:
        server = MockModelServer(model, fault_hook=fault_hook).start()
        servers.append(server)
        return server

    yield _serve
    for server in servers:
        server.stop()


def levenshtein(a: str, b: str) -> int:
    """Plain DP edit distance; independent oracle for transform tests."""
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[len(b)]
