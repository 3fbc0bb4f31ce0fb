import os

FAIL_FITNESS = 1.0e10  # Fitness of configurations that failed to compile or run

DEFAULT_BUDGETS = [25, 50, 100, 200, 400, 800, 1600]
DEFAULT_REPETITIONS = 50
DEFAULT_GRID_REPETITIONS = 20
SAMPLES_PER_CONFIGURATION = 32

DEFAULT_DAMPING = 0.85
DEFAULT_NODE_LIMIT = 1_000_000
CENTRALITY_P_MAX = 15  # Percent

WORKERS_ENV = "TUNELAND_WORKERS"

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(ROOT_DIR, "data")
SPACES_DIR = os.path.join(DATA_DIR, "spaces")
DEFAULTS_FILE = os.path.join(DATA_DIR, "hyperparameters", "defaults.json")
