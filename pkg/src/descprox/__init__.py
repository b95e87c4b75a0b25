"""Descriptive proximity analytics, descriptive dynamics and lobe-energy dissipation."""

from importlib import resources

from .description import (ConvergenceReport, Description, DescribedSet, FeatureChain,
                          FeaturedElement, Probe, ProbeSuite, cardinality_gap, describe,
                          descriptive_distance, descriptively_near,
                          indefinite_descriptive_distance)
from .dynamics import (CompactFamily, DescriptiveSystem, check_descriptive_sensitivity,
                       check_descriptive_transitivity, check_periodic_density, classify_point,
                       extension, orbit, periodic_set, set_map, set_power)
from .hausdorff import (AxiomReport, BallCover, DescribedCollection, ball,
                        descriptive_hausdorff_distance, distance_matrix, hausdorff_distance,
                        verify_topology_axioms)
from .kernels import BACKEND
from .waveform import (DissipationRecord, Envelope, EnvelopeLobe, FrameLobes, ProximityVerdict,
                       Waveform, dissipation_between_frames, dissipation_within_frame,
                       hilbert_envelope, lobe_area, relaxed_near, segment_lobes,
                       stability_report, waveform_energy)

__version__ = "0.1.0"


def data_path(name: str):
    """Path to a bundled data file (e.g. ``runner_lobes.csv``)."""
    return resources.files(__name__) / "data" / name
