"""Users, password verification and bearer tokens.

Credentials are scrypt (memory-hard) with a per-user random salt. Tokens
are opaque, expire, and live in memory only; a coordinator restart just
means everyone logs in again.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable

from ..store import Store

SCRYPT_N = 2**14
SCRYPT_R = 8
SCRYPT_P = 1
TOKEN_TTL = 12 * 3600.0

ROLE_USER = "user"
ROLE_ADMIN = "admin"


@dataclass(frozen=True)
class AuthUser:
    user_id: str
    username: str
    role: str

    @property
    def is_admin(self) -> bool:
        return self.role == ROLE_ADMIN


def hash_password(password: str, salt: bytes | None = None) -> tuple[bytes, bytes]:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode(), salt=salt,
                            n=SCRYPT_N, r=SCRYPT_R, p=SCRYPT_P)
    return salt, digest


def verify_password(password: str, salt: bytes, expected: bytes) -> bool:
    digest = hashlib.scrypt(password.encode(), salt=salt,
                            n=SCRYPT_N, r=SCRYPT_R, p=SCRYPT_P)
    return hmac.compare_digest(digest, expected)


def create_user(store: Store, username: str, password: str,
                role: str = ROLE_USER) -> AuthUser:
    if role not in (ROLE_USER, ROLE_ADMIN):
        raise ValueError(f"unknown role {role!r}")
    salt, digest = hash_password(password)
    user_id = uuid.uuid4().hex[:12]
    store.insert_user(user_id, username, role, salt, digest, time.time())
    return AuthUser(user_id=user_id, username=username, role=role)


def authenticate(store: Store, username: str, password: str) -> AuthUser | None:
    row = store.get_user_by_name(username)
    if row is None:
        # Burn comparable time so probing usernames is not faster.
        hash_password(password, b"\x00" * 16)
        return None
    user_id, name, role, salt, pw_hash = row
    if not verify_password(password, salt, pw_hash):
        return None
    return AuthUser(user_id=user_id, username=name, role=role)


class TokenTable:
    """In-memory bearer tokens with expiry and revocation."""

    def __init__(self, ttl: float = TOKEN_TTL, clock: Callable[[], float] = time.monotonic):
        self._ttl = ttl
        self._clock = clock
        self._lock = threading.Lock()
        self._tokens: dict[str, tuple[AuthUser, float]] = {}

    def issue(self, user: AuthUser) -> str:
        token = secrets.token_urlsafe(32)
        with self._lock:
            self._tokens[token] = (user, self._clock() + self._ttl)
        return token

    def resolve(self, token: str) -> AuthUser | None:
        with self._lock:
            entry = self._tokens.get(token)
            if entry is None:
                return None
            user, expiry = entry
            if self._clock() >= expiry:
                del self._tokens[token]
                return None
            return user

    def revoke(self, token: str) -> None:
        with self._lock:
            self._tokens.pop(token, None)
