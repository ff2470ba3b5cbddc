import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


# Motion Representation Configuration
MOTION_FPS = 20  # every dataset is processed to 20 FPS
JOINT_COUNT = 22  # first 22 joints of the SMPL skeleton
FEATURE_DIM = 263
MAX_FRAMES = 196  # 9.8 s training segments
CONTACT_THRESHOLD = _env_float("MCM_CONTACT_THRESHOLD", 1e-3)  # squared speed, m^2/frame^2
SKELETON_PATH = os.getenv(
    "MCM_SKELETON_PATH",
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "motion", "smpl22.yaml"),
)

# Diffusion Configuration
DIFFUSION_STEPS = _env_int("MCM_DIFFUSION_STEPS", 1000)
BETA_START = 0.0001
BETA_END = 0.02
GUIDANCE_SCALE = 1.0  # 1.0 disables guidance

# Model Configuration
MODEL_WIDTH = 64
MODEL_LAYERS = 2
MODEL_HEADS = 4
MODEL_GROUPS = 4
BLOCK_SPEC = "CS/F/T/CA/F"
BLOCK_LN_EPS = 1e-5
TEXT_CONTEXT_DIM = 32  # stand-in for the CLIP feature width
TEXT_EMBEDDER = os.getenv("MCM_TEXT_EMBEDDER", "hash")
AUDIO_FEATURE_DIM = 64  # stand-in for the Jukebox feature width

# Optimizer Configuration
LEARNING_RATE = _env_float("MCM_LEARNING_RATE", 0.0002)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Evaluation Configuration
R_PRECISION_POOL = 32
MULTIMODALITY_SAMPLES = 10
DIVERSITY_PAIRS = 300
BAS_SIGMA = 0.15  # seconds, 3 frames at 20 FPS
BEAT_SMOOTH_WINDOW = 5
EVAL_WORKERS = _env_int("MCM_EVAL_WORKERS", 4)

# Output Configuration
OUTPUT_DIR = os.getenv("MCM_OUTPUT_DIR", "runs")

# Logging configuration
LOG_LEVEL = os.getenv("MCM_LOG_LEVEL", os.getenv("LOG_LEVEL", "INFO"))
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Create logs directory
LOGS_DIR = os.getenv("MCM_LOGS_DIR", "logs")
os.makedirs(LOGS_DIR, exist_ok=True)
