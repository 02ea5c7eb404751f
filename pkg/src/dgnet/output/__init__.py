from dgnet.output.frames import FrameWriter, read_frames, write_frame_csv
from dgnet.output.report import (
    config_hash,
    render_summary,
    run_directory,
    save_summary,
    write_csv,
    write_grid_csv,
    write_manifest,
)

__all__ = [
    "FrameWriter",
    "config_hash",
    "read_frames",
    "render_summary",
    "run_directory",
    "save_summary",
    "write_csv",
    "write_frame_csv",
    "write_grid_csv",
    "write_manifest",
]
