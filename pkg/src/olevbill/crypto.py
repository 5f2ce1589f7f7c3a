"""Primitive layer: hashing, masking, hash chains, EC group ops, hashed
ElGamal, Shamir sharing, block ciphers and signatures.

Every randomized function takes its randomness as an argument. Nothing in
here draws hidden entropy, so any protocol run can be replayed bit for bit
from a seed.

Canonical encodings (these bytes feed every hash and signature):

* group element: 33-byte SEC1 compressed point on NIST P-256; the identity
  is 33 zero bytes
* scalar: 32-byte big-endian integer modulo the group order
* signature: 64 bytes, ``r || s`` big-endian (deterministic ECDSA, SHA-512)
"""

from __future__ import annotations

import contextvars
import hashlib
import hmac
from contextlib import contextmanager
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Iterator, Sequence

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from ecdsa import NIST256p, SigningKey, VerifyingKey
from ecdsa.errors import MalformedPointError
from ecdsa.ellipticcurve import INFINITY, PointJacobi
from ecdsa.keys import BadSignatureError
from ecdsa.util import sigdecode_string, sigencode_string

CURVE = NIST256p
GENERATOR = CURVE.generator
ORDER = CURVE.order

DIGEST_SIZE = 64
KEY_SIZE = 32
BLOCK_SIZE = 16
POINT_SIZE = 33
SCALAR_SIZE = 32
SIGNATURE_SIZE = 64

_IDENTITY_BYTES = bytes(POINT_SIZE)


class CryptoError(ValueError):
    """Raised on malformed input to a primitive."""


class ThresholdError(CryptoError):
    """Not enough (or inconsistent) shares for reconstruction."""


# ---------------------------------------------------------------------------
# operation accounting


@dataclass
class OpCounts:
    hash: int = 0
    xor: int = 0
    enc: int = 0
    dec: int = 0

    def __add__(self, other: OpCounts) -> OpCounts:
        return OpCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_active_counts: contextvars.ContextVar[OpCounts | None] = contextvars.ContextVar(
    "olevbill_active_counts", default=None
)


@contextmanager
def counting(counts: OpCounts) -> Iterator[OpCounts]:
    """Tally primitive calls made inside the block into ``counts``.

    Only the public entry points count: one ``digest``/``keyed_digest`` is
    one hash, one ``xor_bytes``/``xor_mask`` is one XOR no matter how long
    the keystream, one cipher call is one enc/dec.
    """
    token = _active_counts.set(counts)
    try:
        yield counts
    finally:
        _active_counts.reset(token)


def _tally(kind: str) -> None:
    counts = _active_counts.get()
    if counts is not None:
        setattr(counts, kind, getattr(counts, kind) + 1)


# ---------------------------------------------------------------------------
# hashing


def _sha512(data: bytes) -> bytes:
    return hashlib.sha512(data).digest()


def digest(data: bytes) -> bytes:
    """SHA-512 of ``data``."""
    _tally("hash")
    return _sha512(data)


def keyed_digest(key: bytes, data: bytes) -> bytes:
    """HMAC-SHA-512."""
    _tally("hash")
    return hmac.new(key, data, hashlib.sha512).digest()


def hash_chain(seed: bytes, i: int) -> bytes:
    """Apply ``digest`` i times; ``i == 0`` returns the seed unchanged."""
    if i < 0:
        raise CryptoError("chain index must be non-negative")
    value = seed
    for _ in range(i):
        value = digest(value)
    return value


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise CryptoError(f"xor length mismatch: {len(a)} != {len(b)}")
    _tally("xor")
    return bytes(x ^ y for x, y in zip(a, b))


def keystream(mask_source: bytes, length: int) -> bytes:
    # mask_source || H(mask_source || 1) || H(mask_source || 2) ...
    out = bytearray(mask_source[:length])
    ctr = 1
    while len(out) < length:
        out += _sha512(mask_source + ctr.to_bytes(4, "big"))
        ctr += 1
    return bytes(out[:length])


def xor_mask(mask_source: bytes, data: bytes) -> bytes:
    """XOR ``data`` with a keystream grown from ``mask_source``.

    Self-inverse. Short data uses a prefix of the mask; long data extends
    the mask with counter-indexed SHA-512 blocks.
    """
    _tally("xor")
    return _mask(mask_source, data)


def _mask(mask_source: bytes, data: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(data, keystream(mask_source, len(data))))


# ---------------------------------------------------------------------------
# group


def encode_point(point) -> bytes:
    if point == INFINITY:
        return _IDENTITY_BYTES
    return point.to_bytes("compressed")


def decode_point(data: bytes):
    if len(data) != POINT_SIZE:
        raise CryptoError(f"group element must be {POINT_SIZE} bytes")
    if data == _IDENTITY_BYTES:
        return INFINITY
    try:
        return PointJacobi.from_bytes(CURVE.curve, data, valid_encodings=["compressed"], order=ORDER)
    except (MalformedPointError, AssertionError) as exc:
        raise CryptoError("not a point on the curve") from exc


def encode_scalar(value: int) -> bytes:
    if not 0 <= value < ORDER:
        raise CryptoError("scalar out of range")
    return value.to_bytes(SCALAR_SIZE, "big")


def decode_scalar(data: bytes) -> int:
    if len(data) != SCALAR_SIZE:
        raise CryptoError(f"scalar must be {SCALAR_SIZE} bytes")
    value = int.from_bytes(data, "big")
    if value >= ORDER:
        raise CryptoError("scalar out of range")
    return value


def scalar_mul(k: int, point=None):
    return (GENERATOR if point is None else point) * k


def random_scalar(rng) -> int:
    """Uniform non-zero scalar drawn from ``rng`` (any ``random.Random``)."""
    return rng.randrange(1, ORDER)


def hash_point(point) -> bytes:
    """Group element -> digest, via its canonical encoding."""
    return digest(encode_point(point))


@dataclass(frozen=True)
class SigningKeypair:
    private: int
    public: object

    @classmethod
    def from_private(cls, private: int) -> SigningKeypair:
        if not 0 < private < ORDER:
            raise CryptoError("private key out of range")
        return cls(private, scalar_mul(private))

    @classmethod
    def generate(cls, rng) -> SigningKeypair:
        return cls.from_private(random_scalar(rng))

    @property
    def public_bytes(self) -> bytes:
        return encode_point(self.public)


# ---------------------------------------------------------------------------
# hashed ElGamal


@dataclass(frozen=True)
class ElGamalCiphertext:
    delta1: object
    delta2: bytes

    def to_bytes(self) -> bytes:
        return encode_point(self.delta1) + self.delta2

    @classmethod
    def from_bytes(cls, data: bytes) -> ElGamalCiphertext:
        return cls(decode_point(data[:POINT_SIZE]), data[POINT_SIZE:])


def elgamal_encrypt(pk, plaintext: bytes, r: int) -> ElGamalCiphertext:
    """(rP, m xor mask(H(r*pk))). Counts as one encryption."""
    if not 0 < r < ORDER:
        raise CryptoError("ElGamal nonce must be a non-zero scalar")
    _tally("enc")
    shared = _sha512(encode_point(scalar_mul(r, pk)))
    return ElGamalCiphertext(scalar_mul(r), _mask(shared, plaintext))


def elgamal_decrypt(sk: int, ciphertext: ElGamalCiphertext) -> bytes:
    if not 0 < sk < ORDER:
        raise CryptoError("private key out of range")
    if ciphertext.delta1 == INFINITY:
        raise CryptoError("identity element is not a valid ciphertext component")
    # re-decode so that points built by hand are checked for curve membership
    delta1 = decode_point(encode_point(ciphertext.delta1))
    _tally("dec")
    shared = _sha512(encode_point(scalar_mul(sk, delta1)))
    return _mask(shared, ciphertext.delta2)


# ---------------------------------------------------------------------------
# Shamir secret sharing over Z_q


@dataclass(frozen=True)
class SecretShare:
    index: int
    value: int


def default_threshold(j: int) -> int:
    return (j + 2) // 2  # ceil((j + 1) / 2)


def share_secret(x: int, j: int, t: int, rng) -> list[SecretShare]:
    if j < 1 or not 1 <= t <= j:
        raise ThresholdError(f"need 1 <= t <= j, got t={t}, j={j}")
    if not 0 <= x < ORDER:
        raise CryptoError("secret out of range")
    coeffs = [x] + [rng.randrange(ORDER) for _ in range(t - 1)]
    shares = []
    for i in range(1, j + 1):
        y = 0
        for c in reversed(coeffs):
            y = (y * i + c) % ORDER
        shares.append(SecretShare(i, y))
    return shares


def reconstruct_secret(shares: Sequence[SecretShare], t: int) -> int:
    """Lagrange interpolation at zero using the first ``t`` shares."""
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise ThresholdError("duplicate share indices")
    if any(not 0 < i < ORDER for i in indices):
        raise ThresholdError("share index out of range")
    if len(shares) < t:
        raise ThresholdError(f"{len(shares)} shares given, threshold is {t}")
    used = shares[:t]
    secret = 0
    for s in used:
        num, den = 1, 1
        for other in used:
            if other.index != s.index:
                num = num * other.index % ORDER
                den = den * (other.index - s.index) % ORDER
        secret = (secret + s.value * num * pow(den, -1, ORDER)) % ORDER
    return secret


# ---------------------------------------------------------------------------
# symmetric ciphers


def _check_key(key: bytes) -> None:
    if len(key) != KEY_SIZE:
        raise CryptoError(f"symmetric key must be {KEY_SIZE} bytes")


def sym_encrypt(key: bytes, plaintext: bytes) -> bytes:
    """AES-256 block encryption (ECB) of fixed-width fields; no padding."""
    _check_key(key)
    if len(plaintext) % BLOCK_SIZE:
        raise CryptoError("plaintext must be a whole number of blocks")
    _tally("enc")
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(plaintext) + enc.finalize()


def sym_decrypt(key: bytes, ciphertext: bytes) -> bytes:
    _check_key(key)
    if len(ciphertext) % BLOCK_SIZE:
        raise CryptoError("ciphertext must be a whole number of blocks")
    _tally("dec")
    dec = Cipher(algorithms.AES(key), modes.ECB()).decryptor()
    return dec.update(ciphertext) + dec.finalize()


def _xts(session_key: bytes):
    # XTS keeps frame lengths intact (ciphertext stealing), so a 135-byte
    # request stays 135 bytes on the air
    return Cipher(algorithms.AES(_sha512(session_key)), modes.XTS(bytes(BLOCK_SIZE)))


def session_encrypt(session_key: bytes, plaintext: bytes) -> bytes:
    """Length-preserving encryption of a session frame (>= 16 bytes)."""
    if len(plaintext) < BLOCK_SIZE:
        raise CryptoError("session frames must be at least one block")
    _tally("enc")
    enc = _xts(session_key).encryptor()
    return enc.update(plaintext) + enc.finalize()


def session_decrypt(session_key: bytes, ciphertext: bytes) -> bytes:
    if len(ciphertext) < BLOCK_SIZE:
        raise CryptoError("session frames must be at least one block")
    _tally("dec")
    dec = _xts(session_key).decryptor()
    return dec.update(ciphertext) + dec.finalize()


# ---------------------------------------------------------------------------
# signatures


@lru_cache(maxsize=256)
def _signing_key(private: int) -> SigningKey:
    return SigningKey.from_secret_exponent(private, curve=CURVE, hashfunc=hashlib.sha512)


@lru_cache(maxsize=1024)
def _verifying_key(public: bytes) -> VerifyingKey:
    return VerifyingKey.from_string(public, curve=CURVE, hashfunc=hashlib.sha512)


def sign(private: int, msg: bytes) -> bytes:
    """Deterministic (RFC 6979) ECDSA over SHA-512; 64-byte ``r || s``."""
    return _signing_key(private).sign_deterministic(msg, sigencode=sigencode_string)


def verify(public, msg: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is valid; malformed input yields False."""
    if len(signature) != SIGNATURE_SIZE:
        return False
    try:
        key = _verifying_key(public if isinstance(public, bytes) else encode_point(public))
        return key.verify(signature, msg, sigdecode=sigdecode_string)
    except (BadSignatureError, MalformedPointError, CryptoError, AssertionError, ValueError):
        return False
