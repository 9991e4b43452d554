"""Dictionary learning from incomplete data with low-rank component recovery.

Kernels run on a compiled extension when it is built and fall back to numpy
otherwise; ``itkrmm.backend`` names the active one.
"""

from . import _backend
from .dictlearn import (IterationStats, LearnConfig, LearnState, init_closeby, init_random,
                        initial_state, itkrm_iteration, itkrmm_iteration, learn, learn_unadapted)
from .inpaint import PatchSet, extract_patches, inpaint_image, learn_for_inpainting, reconstruct_image
from .io import FormatError
from .lowrank import (DegenerateBatchError, LowRankEstimate, atom_energy_ratio, lowrank_atom_iteration,
                      recover_lowrank, svd_lowrank_baseline)
from .maskgen import BurstSpec, ErasureSpec, burst_mask, random_pixel_mask
from .metrics import RecoveryReport, atom_distances, coherence, lowrank_error, psnr
from .sparse import SparseCode, SupportSelection, omp_masked, omp_masked_batch, threshold_masked
from .synthgen import (RepresentationPair, SignalSource, SignalSpec, draw_signal, draw_signals,
                       make_dct_pair, make_random_pair, make_support_pair)

backend = _backend.get().NAME

__version__ = "0.1.0"
