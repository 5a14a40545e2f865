"""Network slicing as a mixed binary linear program.

Exact instance data, the cloud-clone virtual network, two equivalent
formulations (a natural per-host-pair one and a compact per-segment one),
an in-tree branch-and-bound solver, solution decoding/verification, flow
decomposition, seeded instance generation and a command-line harness.
"""

from .flows import decompose, path_stats
from .formulation import BuildError
from .generator import GenParams, fig1_fixture, generate, preset_instance
from .model import (
    ObjectiveWeights,
    PhysicalNetwork,
    ServiceRequest,
    SlicingInstance,
    SlicingSolution,
    Violation,
    make_network,
    make_service,
    validate_instance,
)
from .ns1 import build_ns1, ns1_size
from .ns2 import build_ns2, ns2_size
from .semantics import decode, encode_ns1, encode_ns2, map_ns1_to_ns2, map_ns2_to_ns1, verify_domain
from .virtual import VirtualNetwork, build_virtual_network

__version__ = "0.1.0"
