"""Pydantic request/response models mirroring the tree exchange documents."""

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field


class InternalNode(BaseModel):
    kind: Literal["internal"]
    feature: str
    threshold: str  # shortest round-trip decimal string
    left: int
    right: int


class LeafNode(BaseModel):
    kind: Literal["leaf"]
    counts: list[int]


TreeNodeDoc = Annotated[Union[InternalNode, LeafNode], Field(discriminator="kind")]


class TreeDoc(BaseModel):
    version: int
    tree_id: str
    origin_site: str
    nodes: list[TreeNodeDoc]


class ForestParamsDoc(BaseModel):
    n_trees: int
    bootstrap: bool = True
    max_depth: int = 12
    min_samples_leaf: int = 2
    features_per_split: Optional[int] = None


class ForestDoc(BaseModel):
    site_id: str
    params: ForestParamsDoc
    trees: list[TreeDoc]


class RegisterRequest(BaseModel):
    site_id: str
    feature_names: list[str]


class RegisterResponse(BaseModel):
    site_id: str
    registered: bool


class CommitResponse(BaseModel):
    site_id: str
    committed: int
    store_size: int


class GoLocalRequest(BaseModel):
    site_id: str
    method: Literal["additive", "constant"]
    seed: int = 0
