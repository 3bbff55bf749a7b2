"""The **Few-SUM** logger.

Index
-----
.. currentmodule:: fewSUM.logger
.. autosummary::
    logger

API
---
.. autodata:: logger
    :annotation: : logging.Logger

"""

import sys
import logging

__all__ = ['logger']

#: The package-wide :class:`logging.Logger`.
logger = logging.getLogger('fewSUM')
logger.setLevel(logging.INFO)

if not logger.handlers:
    _handler = logging.StreamHandler(stream=sys.stdout)
    _handler.setLevel(logging.INFO)
    _handler.setFormatter(logging.Formatter(
        fmt='[%(asctime)s] %(levelname)s: %(message)s',
        datefmt='%H:%M:%S'
    ))
    logger.addHandler(_handler)
