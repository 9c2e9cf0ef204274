"""HTTP embodiment of the global tree store.

Endpoints:
  POST /register  -- announce a site and its available feature names
  POST /commit    -- commit a local forest (all-or-nothing)
  POST /request   -- receive the globally optimized local forest

Only trees and feature names ever cross the wire; raw data never leaves a
site. The simulator uses the same `GlobalStore` in-process, and for a fixed
seed both paths return identical forests.
"""

from fastapi import FastAPI, HTTPException

from ..data import DataError, FeatureDictionary
from ..federation import (
    AggregationMethod,
    FederationError,
    GlobalStore,
    build_go_local,
    deserialize_forest,
    serialize_forest,
)
from ..forest import Forest, ForestParams
from ..cart import TreeParams
from .schemas import (
    CommitResponse,
    ForestDoc,
    GoLocalRequest,
    RegisterRequest,
    RegisterResponse,
)


def create_app(store: GlobalStore | None = None) -> FastAPI:
    app = FastAPI(title="fedforest coordinator")
    app.state.store = store if store is not None else GlobalStore()
    app.state.site_params = {}

    @app.post("/register", response_model=RegisterResponse)
    def register(req: RegisterRequest):
        try:
            app.state.store.register_site(
                FeatureDictionary(req.site_id, frozenset(req.feature_names))
            )
        except (FederationError, DataError) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return RegisterResponse(site_id=req.site_id, registered=True)

    @app.post("/commit", response_model=CommitResponse)
    def commit(doc: ForestDoc):
        try:
            forest = deserialize_forest(doc.model_dump())
            app.state.store.commit(forest)
        except FederationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        app.state.site_params[doc.site_id] = forest.params
        return CommitResponse(
            site_id=doc.site_id,
            committed=len(forest.trees),
            store_size=len(app.state.store.trees),
        )

    @app.post("/request", response_model=ForestDoc)
    def request_go_local(req: GoLocalRequest):
        store: GlobalStore = app.state.store
        dictionary = store.registered_sites.get(req.site_id)
        if dictionary is None:
            raise HTTPException(status_code=404, detail=f"unknown site {req.site_id!r}")
        own = store.site_trees(req.site_id)
        if not own:
            raise HTTPException(
                status_code=409, detail=f"site {req.site_id!r} has committed no trees"
            )
        params = app.state.site_params.get(
            req.site_id, ForestParams(n_trees=len(own), tree=TreeParams())
        )
        local = Forest(tuple(own), params, req.site_id)
        go = build_go_local(
            store, local, dictionary, AggregationMethod(req.method), req.seed
        )
        return serialize_forest(go)

    return app


def serve(addr: str = "127.0.0.1:8000"):
    """Run the coordinator with uvicorn; `addr` is HOST:PORT."""
    import uvicorn

    host, _, port = addr.rpartition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port))
