"""Multiparty session workbench.

Parse choreographies, project them to per-participant views, synthesize the
relaying medium processes, check those against a linear-logic binary session
type system, and verify the equivalence and operational-correspondence
properties connecting the two levels.
"""

from .btypes import (
    Bang, BinaryType, Lolli, Nu, One, Plus, Tensor, TVar, With, btype_equal,
    btype_to_text, clt_map, gt_map, lt_map, oplus_leq,
)
from .equivalence import (
    INCONCLUSIVE, RewriteTrace, cc_equiv_bounded, cc_rewrite_step, swap_equiv,
    weak_bisim,
)
from .medium import (
    MediumConfig, annotated_medium, finite_medium, recursive_medium,
)
from .opcorr import (
    MidFinal, MidIn, MidOut, STRATEGIES, System, build_closure, build_system,
    check_correspondence, check_progress, glab, global_lts_step, gt_ext, mlab,
)
from .parser import ParseError, parse_global, parse_local, parse_process
from .process import (
    Branch, BoundOut, Corec, Fwd, Nil, Par, Process, Recv, RecCall, ReplRecv,
    Restrict, Select, Send, canonical, free_names, proc_to_text,
    struct_congruent, subst,
)
from .projection import (
    MergeConflict, ProjectError, is_swf, is_wf, merge, merge_leq, project,
    project_simple, wf_report,
)
from .semantics import (
    lts_step, reduce_step, weak_transitions,
)
from .syntax import (
    Base, GComm, GEnd, GPar, GRec, GVar, GlobalType, LEnd, LRec, LRecv, LSend,
    LVar, LocalT, LocalType, Unit, global_to_text, local_to_text,
    participants,
)
from .typecheck import (
    Derivation, EtaEntry, EtaMap, Judgment, TypeCheckError, infer_offer,
    judgment, typecheck, typecheck_compositional,
)

__all__ = [name for name in dir() if not name.startswith("_")]
