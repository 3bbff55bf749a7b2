"""A module with the bundled configuration presets used by :mod:`fewSUM.config`.

Index
-----
.. currentmodule:: fewSUM.data
.. autosummary::
    PRESET_DICT

API
---
.. autodata:: PRESET_DICT
    :annotation: : Mapping[str, str] = ...

"""

import os
from types import MappingProxyType
from typing import Mapping

_DATA = os.path.abspath(os.path.dirname(__file__))

#: A mapping of preset names to the absolute paths of their .yaml files in :mod:`fewSUM.data`.
PRESET_DICT: Mapping[str, str] = MappingProxyType({
    os.path.splitext(f)[0]: os.path.join(_DATA, f) for f in sorted(os.listdir(_DATA))
    if f.endswith('.yaml')
})
del _DATA
del os

__all__ = ['PRESET_DICT']
