"""Python surface of the pipeline simulator and its learning controllers."""

try:
    from ._chainpilot import *  # noqa: F401,F403
    from . import _chainpilot as _impl
except ImportError:  # running against a build tree with a flat module layout
    from _chainpilot import *  # type: ignore[import-not-found] # noqa: F401,F403
    import _chainpilot as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
__version__ = "0.1.0"
