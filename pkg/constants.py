"""
Application constants for the semiclassical spectral toolkit
"""
from fractions import Fraction

# Twisted algebra
PHASE_TOLERANCE = 1e-12
PRUNE_THRESHOLD = 1e-15  # Frobenius norm below which a block is dropped
EXACT_DENOMINATOR_LIMIT = 2 ** 20
KEY_RADIX_BITS = 20  # vectorised support lookup, |gamma_i| < 2**19

# Cocycles and pairings
COCYCLE_TOLERANCE = 1e-10
PROJECTION_TOLERANCE = 1e-10
TRUNCATED_PROJECTION_TOLERANCE = 1e-5  # real-space gap projections cut at a finite radius
PAIRING_IMAGINARY_WARNING = 1e-8

# Model operator
LEVEL_MERGE_RELATIVE = 1e-9
FD_POINTS_1D = 2000
FD_HALF_WIDTH_1D = 10.0  # in oscillator lengths
FD_POINTS_2D = 161
FD_HALF_WIDTH_2D = 8.0
HERMITE_BASIS_SIZE = 40
METRIC_DETERMINANT_TOLERANCE = 1e-9

# Gap certificate
OPTIMAL_KAPPA = Fraction(2, 5)
OPTIMAL_EXPONENT = Fraction(1, 5)
DEFAULT_ESTIMATE_CONSTANT = 1.0
CUTOFF_SAMPLES = 10_000
PARTITION_TOLERANCE = 1e-12
SINGULAR_VALUE_FLOOR = 1e-10

# Lattice simulator
MIN_POINTS_PER_CELL = 16
DENSE_FIBER_LIMIT = 2000
EIGEN_TOLERANCE = 1e-10
HERMITICITY_TOLERANCE = 1e-12
GAP_MERGE_RELATIVE = 1e-9
DEFAULT_GAP_MARGIN = 1e-6
WELL_VALUE_TOLERANCE = 1e-10
RIESZ_NODES = 64
RIESZ_TOLERANCE = 1e-8
DEFAULT_FHS_GRID = (24, 24)
DEFAULT_KUBO_GRID = (32, 96)
DEFAULT_KUBO_RADIUS = (10, 30)
CHERN_AGREEMENT = 0.01

# Orientation anchor: flux 1/3 Harper model, lowest gap
ANCHOR_FLUX = Fraction(1, 3)
ANCHOR_FERMI_LEVEL = -1.366

# Command line
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG_ERROR = 2
EXIT_HYPOTHESIS_FAILURE = 3

SERVICE_NAME = "semiclassical-gaps"
SERVICE_VERSION = "1.0.0"


# Error codes
class ErrorCodes:
    INVALID_CONFIG = "ERR_001"
    UNKNOWN_KEY = "ERR_002"
    INVALID_MATRIX = "ERR_003"
    DIMENSION_MISMATCH = "ERR_004"
    MULTIPLIER_MISMATCH = "ERR_005"
    NOT_NORMALIZED = "ERR_006"
    NOT_POSITIVE_DEFINITE = "ERR_007"
    INCOMPLETE_SPECTRUM = "ERR_008"
    CUTOFF_EXCEEDED = "ERR_009"
    CERTIFICATE_FAILURE = "ERR_010"
    KAPPA_OUT_OF_RANGE = "ERR_011"
    NOT_A_PROJECTION = "ERR_012"
    NO_EQUIVALENCE = "ERR_013"
    GRID_TOO_COARSE = "ERR_014"
    IRRATIONAL_FLUX = "ERR_015"
    NOT_IN_GAP = "ERR_016"
    METHODS_DISAGREE = "ERR_017"
    CALIBRATION_FAILURE = "ERR_018"
    PARTITION_OF_UNITY = "ERR_019"
    INVALID_WELL = "ERR_020"
    INVALID_INPUT = "ERR_021"
