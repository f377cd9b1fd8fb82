"""Pfaffian point processes over complexified quaternions.

Quaternion determinants, correlation kernels, Palm and conditional
transforms, Fredholm quaternion determinants and an exact sampler for
finite ground sets.
"""

__version__ = "0.1.0"

from .errors import (
    DegeneratePalmError,
    ExistenceError,
    InvalidKernelError,
    NotSelfAdjointError,
    NumericalError,
    QpfaffError,
    SingularMatrixError,
    SingularPathError,
    SingularResolventError,
    SizeCapError,
    ZeroProbabilityError,
)
from .fredholm import (
    FredholmResult,
    expectation_multiplicative,
    fredholm_pfaffian,
    fredholm_series,
    fredholm_signed,
)
from .kernels import (
    Configuration,
    CSEKernel,
    GridKernel,
    GroundSet,
    Kernel,
    ScalarKernel,
    Sine4Kernel,
    correlation,
    cse_kernel,
    grid_discretize,
    kernel_from_json,
    sine4_kernel,
)
from .qmatrix import (
    QMatrix,
    elementary_op,
    pfaffian,
    phi_lift,
    psi,
    qdet,
    qdet_moore,
    qdet_recursive,
    qmat_inverse,
    random_self_adjoint,
)
from .quaternion import Quaternion
from .sampler import (
    AtomTable,
    SampleBatch,
    atom_oracle,
    chain_probabilities,
    conditional_oracle,
    gap_probability,
    sequential_sample,
)
from .transforms import (
    PalmKernel,
    conditional_kernel,
    kg_transform,
    palm_many,
    palm_one,
    palm_ratio,
)
