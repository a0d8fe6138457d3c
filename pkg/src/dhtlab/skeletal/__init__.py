from .decompose import check_decomposition, decomposition_rhs
from .expr import (
    A,
    KA,
    Atom,
    Expansion,
    OpH,
    OpI,
    OpK,
    PowerOfKA,
    Product,
    building_expr,
    evaluate,
    expand_power,
    exprs_equal,
    is_normal_form,
    parse_expr,
    product,
    skeleton_normal_form,
)
from .frames import (
    Bone,
    FrameSet,
    build,
    count_h_applications,
    enumerate_skeletons,
    frame_depth,
    frame_size,
    has_bone_at_every_level,
    is_skeleton,
    iter_skeletons,
    parse_frame,
    shape_census,
)
