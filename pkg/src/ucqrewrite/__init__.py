"""UCQ rewriting of conjunctive queries over existential rules."""

from .kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    FreshCounter,
    KnowledgeBase,
    Term,
    atom,
    attach_answer_atom,
    canonicalize,
    const,
    cq,
    decompose_atomic_head,
    freshen_rule,
    rule,
    strip_answer_atom,
    var,
)
from .homomorphism import (
    core,
    cover,
    equivalent,
    find_homomorphism,
    homomorphisms,
    isomorphic,
    more_general,
)
from .partition import (
    TermPartition,
    associated_substitution,
    finer_than,
    is_admissible,
    join,
)
from .unification import (
    AggregatedUnifier,
    PieceUnifier,
    aggregate,
    aggregate_rules,
    enumerate_aggregated,
    general_piece_unifiers,
    partition_by_position,
    pieces,
    separating_vars,
    single_piece_unifiers,
    sticky_variables,
    unifiable,
    validate_piece_unifier,
)
from .rewriting import (
    Limits,
    RewritingOperator,
    RewritingResult,
    beta,
    make_operator,
    rewrite,
    saturate,
)
from .chase import (
    ChaseState,
    EntailmentVerdict,
    chase,
    check_one_step_soundness,
    entails,
    freeze_query,
    verify_rewriting_set,
)
from .dlgp import Document, DlgpError, parse_document, query_to_dlgp, serialize

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
