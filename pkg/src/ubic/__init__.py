"""Visual cryptography tokens: identification, signed printed documents and
block-wise content hiding, printed as QR codes and read back from photos.
"""

from .errors import Rejected, UbicError

__version__ = "0.1.0"

__all__ = ["Rejected", "UbicError", "__version__"]
