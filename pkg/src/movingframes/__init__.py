"""Simulation and analysis of entangled-photon correlations measured from moving frames."""

from .analysis import (BoundResult, CBRFrameSpec, FitResult, FringeFitter, WindowedVisibility,
                       cbr_bound, cbr_worst_case_delay, fit_interferogram, lab_velocity_in_cbr,
                       speed_bound, windowed_visibility)
from .collapse import (AfterAfterRule, CollapseModelSpec, JointDistribution, ModelVariant,
                       model_joint, qm_joint, reachable)
from .config import ExperimentConfig, load_config, parse_config
from .engine import (DetectorSpec, Interferogram, ScanPlan, derive_bin_stream,
                     simulate_scan, smoothed_visibility_factor)
from .exceptions import (AmbiguousOrdering, ConfigInvalid, FitDegenerate, FrameSuperluminal,
                         MissingModelParams, ParseError, ValidationError)
from .kinematics import (C, ChoiceEvent, InertialFrame, IntervalSpec, Ordering, PairClass,
                         SpacetimeEvent, before_before_window, boost_interval, classify_pair,
                         order_in_frame)
from .optics import (ChoiceDeviceSpec, DeviceKind, FiberLink, InterferometerSpec,
                     PhotonPairSource, choice_events, propagation_delay, two_photon_spread,
                     wheel_rim_speed)

__version__ = "0.1.0"
