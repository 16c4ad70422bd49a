from .construct import SMData, SPlusData, SurfaceData, construct_sm, construct_splus
from .domain import FundamentalDomain, reduce_to_domain
from .group import AffineMap, GroupElement, apply_group
from .invariance import check_invariance, pullback
