"""One-shot exporter: image folders -> ZTEB embedding files + manifest."""

__version__ = "0.1.0"

from .encoders import HfClipEncoder, MockVlmEncoder, load_encoder
from .export import DEFAULT_TEMPLATE, TEMPLATE_SET_7, ExportJob, run_export, scan_dataset
from .format import view_block_offset, write_manifest, write_zteb

__all__ = [
    "DEFAULT_TEMPLATE",
    "TEMPLATE_SET_7",
    "ExportJob",
    "HfClipEncoder",
    "MockVlmEncoder",
    "load_encoder",
    "run_export",
    "scan_dataset",
    "view_block_offset",
    "write_manifest",
    "write_zteb",
]
