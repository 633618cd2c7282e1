"""Class group structure of imaginary quadratic orders.

The pipeline: build a factor base of non-inert primes, sieve principal-form
values for smooth relations (with up to two large primes), eliminate the
sparse relation matrix down to its dense core, certify the class number h
against the analytic window [h*, 2h*), and read the elementary divisors off
the Smith normal form of the essential Hermite block.

`group_structure` runs the whole chain; the pieces are importable for
separate use and the `classgroup` script drives them from the shell.
"""

from .classnumber import (GroupStructure, HStarBound, WindowViolation,
                          class_number, essential_hnf, group_structure,
                          hstar, minimal_denominator, snf)
from .elimination import CostParams, EliminationError, run as eliminate
from .forms import (FactorBase, Form, build_factor_base, is_discriminant,
                    is_fundamental, prime_form, principal_form)
from .relations import RelationMatrix, enough_relations
from .sieve import (CollectBudget, Relation, SieveError, SieveParams,
                    collect, make_params, verify_relation)

__version__ = "0.1.0"

__all__ = [
    "CollectBudget", "CostParams", "EliminationError", "FactorBase", "Form",
    "GroupStructure", "HStarBound", "Relation", "RelationMatrix",
    "SieveError", "SieveParams", "WindowViolation", "build_factor_base",
    "class_number", "collect", "eliminate", "enough_relations",
    "essential_hnf", "group_structure", "hstar", "is_discriminant",
    "is_fundamental", "make_params", "minimal_denominator", "prime_form",
    "principal_form", "snf", "verify_relation",
]
