from .exclusion import certify, check_abelian_iff, construct_povm, construct_povm_hw_shift, verify_povm
from .pbr import minimal_n, pbr_condition
from .zero_error import build_graph, capacity_lower_bound, fractional_packing
