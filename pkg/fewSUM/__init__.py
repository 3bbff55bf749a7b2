"""Few-shot opinion summarization with a property-conditioned encoder-generator."""

# flake8: noqa: F401,E402,N812

from nanoutils import VersionInfo

from .__version__ import __version__

version_info = FEWSUM_VERSION = VersionInfo.from_str(__version__)
del VersionInfo

from .logger import logger
from .exceptions import ReviewFormatError, AnnotationError, ConfigError, ShapeError, StageAbort
from .property_dset import (create_prop_group, create_prop_dset, update_prop_dset,
                            validate_prop_group, prop_to_dataframe, dump_properties)
from .hdf5_log import create_hdf5_log, update_hdf5_log, reset_hdf5_log, log_to_dataframe
from .checkpoint import save_checkpoint, load_checkpoint, verify_checkpoint
from .config import validate_config, parse_config
from .run_dir import RunDirectory
from . import (
    corpus, textproc, metrics, oracle, model, plugin, training, decoding, baselines,
    evaluation, synthetic, testing_utils, dtype
)

__all__ = [
    'FEWSUM_VERSION', 'logger',

    'corpus', 'textproc', 'metrics', 'oracle', 'model', 'plugin', 'training', 'decoding',
    'baselines', 'evaluation', 'synthetic', 'testing_utils', 'dtype',

    'ReviewFormatError', 'AnnotationError', 'ConfigError', 'ShapeError', 'StageAbort',

    'create_hdf5_log', 'update_hdf5_log', 'reset_hdf5_log', 'log_to_dataframe',

    'create_prop_group', 'create_prop_dset', 'update_prop_dset',
    'validate_prop_group', 'prop_to_dataframe', 'dump_properties',

    'save_checkpoint', 'load_checkpoint', 'verify_checkpoint',

    'validate_config', 'parse_config',

    'RunDirectory',
]
