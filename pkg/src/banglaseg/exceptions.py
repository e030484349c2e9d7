"""Exception types raised by the segmentation pipeline."""


class PageError(Exception):
    """Base class for page-content failures (as opposed to bad arguments)."""


class EmptyPageError(PageError):
    """Cropping found no text-like content on the page."""


class NoTextError(PageError):
    """Segmentation or span detection found no text lines."""


class ConfigError(Exception):
    """A configuration file or value is invalid; message names the field."""
