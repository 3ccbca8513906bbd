"""Nested polar codes over finite Abelian groups.

Lossy source coding toward the rate-distortion function and channel coding
toward capacity, built on one polar transform and two artificial test
channels per task.
"""

from .channel import (ChannelCode, SideInfo, build_channel_code,
                      channel_decode, channel_encode, error_diagnostics,
                      random_messages, simulate_channel, transmit_blocks)
from .construction import (Cell, NestedConstruction, SynthChannelParams,
                           delta_threshold, exact_params, estimate_params,
                           nest_partitions, partition_by_subgroup)
from .diagnostics import (exact_total_variation_channel,
                          exact_total_variation_source)
from .dmc import (Dmc, JointSource, bec, bsc, channel_test_channels,
                  conditional_capacity, dsbs, joint_from_forward, qsc,
                  source_test_channels, symmetric_capacity, z_d_all,
                  z_subgroup)
from .errors import (ConfigError, ConstructionIOError,
                     InconsistentEvidenceError, InvalidSubgroupError,
                     NestedPolarError, NestingError, SynthesisSizeError)
from .groups import FiniteAbelianGroup, Subgroup, Transversal, group_from_spec
from .harness import (ExperimentConfig, load_construction, run_bler_sweep,
                      run_rd_sweep, save_construction, verify)
from .lossy import (QuantizedMessage, SourceCode, build_source_code, decode,
                    diagnostics, encode)
from .oracles import (binary_entropy, channel_capacity, hamming_distortion,
                      rate_distortion)
from .polar import (inverse_polar_transform, polar_transform, sc_conditional,
                    sc_pass, synthesize_exact)

__version__ = "0.1.0"
