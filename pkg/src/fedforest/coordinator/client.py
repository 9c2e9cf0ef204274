"""Thin HTTP client for the coordinator service."""

import httpx

from ..federation import deserialize_forest, serialize_forest
from ..forest import Forest


class CoordinatorClient:
    """Talks to a running coordinator; also accepts any httpx-compatible
    client (e.g. fastapi.testclient.TestClient) for in-process use."""

    def __init__(self, base_url: str = "", client: httpx.Client | None = None):
        self._client = client or httpx.Client(base_url=base_url)

    def _post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise RuntimeError(f"coordinator error {resp.status_code}: {detail}")
        return resp.json()

    def register(self, site_id: str, feature_names) -> dict:
        return self._post(
            "/register",
            {"site_id": site_id, "feature_names": sorted(feature_names)},
        )

    def commit(self, forest: Forest) -> dict:
        return self._post("/commit", serialize_forest(forest))

    def request_go_local(self, site_id: str, method: str, seed: int = 0) -> Forest:
        doc = self._post(
            "/request", {"site_id": site_id, "method": method, "seed": seed}
        )
        return deserialize_forest(doc)

    def close(self):
        self._client.close()
