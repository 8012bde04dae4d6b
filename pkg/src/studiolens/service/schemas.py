"""Pydantic request/response models for the wire contract."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class PutDocumentResponse(BaseModel):
    doc_id: str
    version: int


class RegionModel(BaseModel):
    x: float
    y: float
    w: float = Field(gt=0)
    h: float = Field(gt=0)


class AnnotationRequest(BaseModel):
    doc_id: str
    created_version: int = Field(ge=1)
    kind: str = "redline"
    body: str = ""
    target_element_ids: list[str] = Field(default_factory=list)
    target_region: Optional[RegionModel] = None
    category: Optional[str] = None
    flag: bool = False
    source_item_ref: Optional[str] = None


class AnnotationResponse(BaseModel):
    id: str
    status: str


class ContestRequest(BaseModel):
    doc_id: str
    version: int = Field(ge=1)
    analytic: str
    computed_value: Any = None
    verdict: str
    user_value: Any = None
    rationale: str = ""
    timestamp: Optional[str] = None


class ContestResponse(BaseModel):
    id: str


class StatusActionRequest(BaseModel):
    doc_id: str
    annotation_id: str
    action: str  # "mark_addressed" | "validate"
    version: int = Field(ge=1)


class ErrorResponse(BaseModel):
    error: str
    detail: Optional[str] = None
