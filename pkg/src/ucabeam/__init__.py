"""Near-field wideband UCA channel estimation in the phase-mode beamspace."""

from .beamform import (PadpGrid, SteeringConfig, cbf_padp, default_mode_cap, fibf_padp,
                       phase_mode_transform, unit_patterns)
from .estimator import (CancellationConfig, EstimationTrace, PathEstimate, estimate_paths,
                        reconstruct_channel, residual_power_rate, rp_sweep)
from .formats import Scenario, load_scenario, parse_scenario, read_cfr, serialize_scenario, write_cfr
from .scene import (ElementChannelMatrix, FrequencyGrid, PathTruth, ScattererLocation, UcaGeometry,
                    friis_path_loss_db, synthesize_channel)

__version__ = "0.1.0"
