import os


#: Absolute path to output directory.
OUT_DIR = os.path.abspath(
    os.path.join(os.path.dirname(__file__), '..', 'out')
)
#: Version string embedded in every report.
VERSION = '0.3.0'
#: Smallest stream length the interval geometry is validated for.
MIN_N = 2**16
#: Longest strings the permutation brute force will accept.
ORACLE_MAX_LENGTH = 10
#: Widest Toeplitz matrix whose entropy is computed by full enumeration.
EXHAUSTIVE_WIDTH_CAP = 24
#: Minimum number of input vectors drawn by the plug-in entropy estimator.
SAMPLED_ENTROPY_MIN_SAMPLES = 2**20
#: Environment variable capping the number of worker processes.
THREADS_ENV_VAR = 'BITSTREAM_LAB_THREADS'
#: Seed used when none is given on the command line.
DEFAULT_SEED = 7
#: The two 4-symbol frames the hard distribution draws from.
FRAME_0101 = (0, 1, 0, 1)
FRAME_1010 = (1, 0, 1, 0)
#: Padding frame of the L2 subarrays and filler frame of F.
PADDING_FRAME = (1, 0, 0, 1)
FILLER_FRAME = (0, 1, 0, 1)
#: Even-block bits up to which the recovery certificate enumerates every
#: configuration instead of sampling.
CERTIFICATE_EXHAUSTIVE_BITS = 12
