"""Latent-space clustering of dynamic networks with an HDP prior over
evolving communities.

The heavy lifting lives in the compiled extension `_hdplpcm`; this package
re-exports its public surface.
"""

try:
    from ._hdplpcm import *  # noqa: F401,F403  (installed layout)
    from ._hdplpcm import __version__  # noqa: F401
except ImportError:  # development layout: extension on PYTHONPATH
    from _hdplpcm import *  # noqa: F401,F403
    from _hdplpcm import __version__  # noqa: F401
