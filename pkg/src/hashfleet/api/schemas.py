"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..models import (
    AttackMode,
    BruteForce,
    Combinator,
    Dictionary,
    HashAlgorithm,
    ModeConstraintViolated,
    RuleBased,
)


class ErrorBody(BaseModel):
    code: str
    message: str
    field: Optional[str] = None


class LoginRequest(BaseModel):
    username: str
    password: str


class LoginResponse(BaseModel):
    token: str
    user_id: str
    username: str
    role: str


class NodeOut(BaseModel):
    node_id: str
    agent_name: str
    os: str
    arch: str
    engine: str
    connected: bool
    power: dict[str, float]
    suspect_count: int = 0


class ModeSpec(BaseModel):
    """Mode discriminator plus its mode-specific fields."""

    mode: Literal["brute", "dictionary", "rules", "combinator"]
    min_length: Optional[int] = None
    max_length: Optional[int] = None
    wordlists: Optional[list[str]] = None
    rules: Optional[list[str]] = None
    left: Optional[str] = None
    right: Optional[str] = None

    def to_attack_mode(self) -> AttackMode:
        if self.mode == "brute":
            if self.min_length is None or self.max_length is None:
                raise ModeConstraintViolated("brute mode needs min_length and max_length")
            return BruteForce(min_len=self.min_length, max_len=self.max_length)
        if self.mode == "dictionary":
            return Dictionary(wordlists=tuple(self.wordlists or ()))
        if self.mode == "rules":
            return RuleBased(wordlists=tuple(self.wordlists or ()),
                             rules=tuple(self.rules or ()))
        if not self.left or not self.right:
            raise ModeConstraintViolated("combinator mode needs left and right wordlists")
        return Combinator(left=self.left, right=self.right)


class JobSubmitRequest(BaseModel):
    algorithm: HashAlgorithm
    mode: ModeSpec
    node_ids: list[str]
    hashes: Optional[list[str]] = None
    hashes_text: Optional[str] = None  # raw text-box content, one hash per line


class JobSubmitResponse(BaseModel):
    job_id: str


class NodeTaskStatsOut(BaseModel):
    tried: int
    speed_hps: float
    tasks: int


class JobStatsOut(BaseModel):
    job_id: str
    status: str
    algorithm: str
    mode: str
    owner: str
    total_hashes: int
    cracked_count: int
    recovery_percent: float
    per_node: dict[str, NodeTaskStatsOut]
    elapsed_seconds: float
    created_at: float
    finished_at: Optional[float]
    partial_results: bool


class CrackedOut(BaseModel):
    hash: str
    plaintext_hex: str
    node_id: str
    at: float


class UserStatsOut(BaseModel):
    total_jobs: int
    active: int
    completed: int
    failed: int
    by_mode: dict[str, int]
    by_algorithm: dict[str, int]
    mode_percent: dict[str, float]
    algorithm_percent: dict[str, float]
    activity_by_day: dict[str, int]


class AdminStatsOut(BaseModel):
    totals: UserStatsOut
    users: int
    nodes: list[NodeOut]


class UserOut(BaseModel):
    user_id: str
    username: str
    role: str


class CreateUserRequest(BaseModel):
    username: str = Field(min_length=1)
    password: str = Field(min_length=1)
    role: Literal["user", "admin"] = "user"


class WordlistOut(BaseModel):
    id: str
    line_count: int
    byte_size: int
