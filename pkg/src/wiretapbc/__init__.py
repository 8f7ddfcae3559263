"""Secrecy rate regions of wiretap broadcast channels.

Submodules: ``probcore`` (pmfs, channels, information measures),
``ordering`` (degraded / less-noisy / more-capable checks), ``hull`` (rate
regions), ``regions`` (bound evaluators and auxiliary-law search),
``becbsc`` (closed-form BEC/BSC example), ``sim`` (scheme simulator) and
``cli``.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree without installation
    __version__ = "0.1.0"

__all__ = ["__version__"]
