"""Exception hierarchy."""


class DyngramError(Exception):
    """Base class for all package errors."""


class IngestError(DyngramError, ValueError):
    """Malformed or inconsistent input data."""


class UsageError(DyngramError, ValueError):
    """An operation was called with arguments that violate its contract."""


class IndexAbsentError(UsageError, LookupError):
    """The bundle has no index for the requested n."""


class BundleError(DyngramError):
    """A bundle file could not be read."""


class BundleFormatError(BundleError):
    """Not a bundle file (bad magic bytes or unparseable header)."""


class BundleVersionError(BundleError):
    """Bundle written by an unsupported format version."""


class BundleTruncatedError(BundleError):
    """Bundle file is shorter than its header declares."""


class BundleChecksumError(BundleError):
    """Bundle contents do not match the trailing checksum."""
