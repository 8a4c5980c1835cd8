"""Exception base classes shared by every ubic module.

Each concrete error carries a stable machine-readable ``code``.  Errors
derived from :class:`Rejected` are cryptographic rejections (a forged
signature, a wrong key, a stale challenge); everything else is a usage,
format or I/O problem.
"""


class UbicError(Exception):
    code = "ubic.error"


class Rejected(UbicError):
    code = "ubic.rejected"
