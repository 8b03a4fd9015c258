"""
Centralized configuration for the epsilon-MSCR repair simulator.

Ambient settings (paths, logging, parallelism) are loaded from environment
variables (via .env file). Experiment parameters never come from the
environment: they live in the experiment config file and CLI flags, and
the DEFAULT_* values below are only the fallbacks for missing keys.
"""

import os
import logging
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------
PROJECT_ROOT = Path(__file__).parent
DATA_DIR = Path(os.getenv("EMSCR_DATA_DIR", str(PROJECT_ROOT / "data")))

# File names inside a run directory
DB_NAME = os.getenv("EMSCR_DB_NAME", "emscr.db")
PARAMS_FILE_NAME = "params.bin"
TRANSCRIPT_FILE_NAME = "transcript.json"
REPORT_FILE_NAME = "report.txt"
SHARD_FILE_PATTERN = "node_{node:04d}.shard"
LOST_SUFFIX = ".lost"

# ---------------------------------------------------------------------------
# Experiment defaults: the reference parameter set
#
#   inner code:  (n=q=7, k=2, r=5, l=3^21) MSCR code
#   outer code:  Reed-Solomon (N=7, K=2) over F_7, M = 49 nodes
#   field:       GF(2^12) from x^12 + x^3 + 1, B0 of order 63 (65 cosets)
# ---------------------------------------------------------------------------
DEFAULT_Q = 7
DEFAULT_INNER_K = 2
DEFAULT_OUTER_N = 7
DEFAULT_OUTER_K = 2
DEFAULT_FIELD_ORDER = 4096
DEFAULT_FIELD_POLY = 0x1009
DEFAULT_SUBGROUP_ORDER = 63
DEFAULT_GROUPS = 20
DEFAULT_SEED = 7
DEFAULT_FAIL = (1, 2)

# Above this many base-3 digits a block is never materialized densely
MAX_DENSE_DIGITS = 12

# ---------------------------------------------------------------------------
# Repair
# ---------------------------------------------------------------------------
REPAIR_N_JOBS = int(os.getenv("REPAIR_N_JOBS", "1"))

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
