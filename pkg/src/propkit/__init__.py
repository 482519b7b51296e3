"""Uniform pro-p groups at finite precision: p-adic terms, coordinates, good bases, finite quotients."""

from .errors import *  # noqa: F401,F403
from .padic import PadicScalar, Valuation, is_nth_power, d_div, eval_series
from .uniform import UniformGroupModel, parse_group_spec, builtin_models
from .goodbasis import (OpenSubgroupHandle, contains, enumerate_open_subgroups, good_basis_from_generators,
                        index, is_good_basis, same_subgroup, subgroup_counts)
from .finitep import (FiniteGroupTable, SubgroupSet, build_metacyclic_G2, build_quotient, build_wreath,
                      enumerate_subgroups, frattini, lower_p_series, min_generators, rank_of, sylow_decompose)

__version__ = "0.1.0"
