"""vidsr: accelerate single-image super-resolution on video.

One frame per GOP is super-resolved with any single-image SR operator; the
other frames reuse that output through codec-style syntax elements
(quarter-pel motion vectors, residuals, block quadtrees, skip flags) at a
small fraction of the cost.
"""

from .deblock import BoundarySegment, DeblockConfig, compute_boundary_strength, deblock_frame
from .encoder import (EncoderConfig, MvAccuracy, ResidualMode, SidecarFormatError,
                      build_quadtree, decode_frame, decode_sequence, encode_frame,
                      encode_sequence, estimate_motion_integer, read_sidecar,
                      refine_qpel, write_sidecar)
from .evaluate import (ExperimentReport, FrameRecord, emit_csv, emit_stats, psnr,
                       run_chained_experiment, run_deblock_ablation,
                       run_mv_accuracy_sweep)
from .model import (BlockNode, BlockPartition, FrameSyntax, GopConfig, Plane,
                    PlaneKind, QuarterPelMV, TransferMode, block_region_view)
from .sampling import CubicKernel, bicubic_downsample, bicubic_upsample, qpel_fetch_block
from .sr import PluginError, SrKind, SrOperator, apply_sr
from .transfer import (TransferConfig, TransferStats, collect_training_blocks,
                       learn_threshold, resolve_transfer_modes, transfer_block,
                       transfer_frame)
from .video_io import VideoClip, load_clip, read_y4m, save_clip, write_y4m

__version__ = "0.1.0"
