"""Mass localisation by greedy backtracking of activations in a bias-free
stacked auto-encoder, with seed clustering, seeded region growing, an
occlusion-sensitivity baseline, and a synthetic evaluation harness.
"""

from .image import BinaryMask, Image, PixelCoord, read_pgm, resize_bilinear, write_pgm
from .network import ActivationTrace, NetworkParams, classify, forward, sigmoid, softmax
from .backtrack import BacktrackResult, run_backtrack
from .seedcluster import Cluster, ClusterConfig, cluster_coords, select_seed
from .segmentation import RegionGrowConfig, RoiResult, bbox_of, region_grow
from .synthdata import DatasetManifest, SynthConfig, build_dataset, gen_abnormal, gen_normal
from .occlusion import OcclusionConfig, occlusion_map, occlusion_seed
from .training import TrainConfig, init_weights, pretrain_layer, train_head, train_stacked
from .evalharness import EvalConfig, EvalReport, evaluate, is_hit, render_table

__version__ = "0.1.0"
