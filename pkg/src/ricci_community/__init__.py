"""Community detection with discrete Ollivier-Ricci flow.

Typical use::

    from ricci_community import load_edge_list, FlowConfig, run_flow, scan_cutoffs, select_cutoff

    g = load_edge_list(open("graph.edgelist").read())
    trace = run_flow(g, FlowConfig(max_iterations=50, surgery_every=5))
    curve = scan_cutoffs(trace.final, original=g)
    partition = cut_by_threshold(trace.final, select_cutoff(curve))
"""

__version__ = "0.1.0"

from .community import CutoffCurve, CutoffPoint, cut_by_threshold, scan_cutoffs, select_cutoff, write_curve
from .config import FlowConfig
from .curvature import CurvatureMap, all_curvatures, edge_curvature
from .errors import DomainError, ParseError, RicciError, TransportError, UnreachableError
from .flow import FlowTrace, IterationRecord, flow_step, normalize_weights, read_trace, run_flow, surgery, write_trace
from .generators import (
    GabParams,
    OrbitWeights,
    gab_eigen,
    gab_orbits,
    gab_step_matrix,
    gab_weights_at,
    gen_gab,
    gen_sbm,
    orbit_weights,
)
from .graph import (
    DiscreteMeasure,
    Graph,
    Partition,
    connected_components,
    distance_rows,
    load_edge_list,
    local_distances,
    neighbor_measure,
    read_labels,
    shortest_distance,
    write_edge_list,
    write_partition,
)
from .metrics import ContingencyTable, ari, contingency, modularity
from .transport import TransportPlan, wasserstein_exact, wasserstein_sinkhorn


def karate_club():
    """The bundled Zachary karate club graph and its two-faction split."""
    from importlib.resources import files

    data = files(__name__) / "data"
    g = load_edge_list((data / "karate.edgelist").read_text(encoding="utf-8"))
    truth = Partition.from_mapping(read_labels((data / "karate.labels").read_text(encoding="utf-8")), g)
    return g, truth
