"""Exception types shared across the toolkit.

Small, flat hierarchy: everything derives from MirrorlightError so callers
can catch the whole family, and the CLI can turn any of them into a
one-line failure message.
"""


class MirrorlightError(Exception):
    pass


# -- data pipeline ---------------------------------------------------------

class MissingDirectory(MirrorlightError):
    pass


class EmptySplit(MirrorlightError):
    pass


class DimensionMismatch(MirrorlightError):
    pass


class DecodeError(MirrorlightError):
    pass


class NonRGBError(MirrorlightError):
    pass


class CropTooLarge(MirrorlightError):
    pass


# -- losses / features -----------------------------------------------------

class ShapeMismatch(MirrorlightError):
    pass


class ChannelCountError(MirrorlightError):
    pass


class NegativeBeta(MirrorlightError):
    pass


class PyramidDepthMismatch(MirrorlightError):
    pass


class ImageTooSmall(MirrorlightError):
    pass


class UnknownConfigTag(MirrorlightError):
    pass


# -- model / training ------------------------------------------------------

class IndivisibleDims(MirrorlightError):
    pass


class InvalidConfig(MirrorlightError):
    pass


class NonFiniteLoss(MirrorlightError):
    pass


class CheckpointCorrupt(MirrorlightError):
    pass


class ConfigMismatch(MirrorlightError):
    pass


# -- metrics ---------------------------------------------------------------

class ModelUnavailable(MirrorlightError):
    pass


# -- config parsing --------------------------------------------------------

class UnknownKey(MirrorlightError):
    pass


class RangeError(MirrorlightError):
    pass
