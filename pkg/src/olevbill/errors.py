"""Authentication failure with a cause drawn from a closed set."""

CAUSES = frozenset(
    {
        "bad_password",
        "unknown_x_obu",
        "c3_mismatch",
        "c6_mismatch",
        "bad_signature",
        "tries_exhausted",
        "hash_mismatch",
        "replay",
        "chain_exhausted",
        "not_registered",
        "bad_certificate",
        "link_down",
        "timeout",
        "stale_timestamp",
        "malformed",
    }
)


class AuthFailure(Exception):
    def __init__(self, cause: str, detail: str = ""):
        if cause not in CAUSES:
            raise ValueError(f"unknown failure cause {cause!r}")
        super().__init__(f"{cause}: {detail}" if detail else cause)
        self.cause = cause
        self.detail = detail
