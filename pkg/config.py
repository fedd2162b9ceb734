import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    # Logging Configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR = os.getenv("LOG_DIR", "logs")
    ENABLE_FILE_LOGGING = os.getenv("ENABLE_FILE_LOGGING", "True").lower() == "true"

    # Experiment Defaults
    WORKERS = int(os.getenv("WORKERS", "1"))
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "2025"))
    DEFAULT_OUTPUT = os.getenv("DEFAULT_OUTPUT", "results/regret.csv")

    # Solver Configuration
    PROJECTION_MAX_ITER = int(os.getenv("MNL_PROJECTION_MAX_ITER", "200"))
    PROJECTION_TOL = float(os.getenv("MNL_PROJECTION_TOL", "1e-12"))
    MLE_MAX_ITER = int(os.getenv("MNL_MLE_MAX_ITER", "500"))
    MLE_TOL = float(os.getenv("MNL_MLE_TOL", "1e-8"))
    CHOLESKY_JITTER = float(os.getenv("MNL_CHOLESKY_JITTER", "1e-12"))

    # Assortment Configuration
    BRUTE_FORCE_MAX_ITEMS = int(os.getenv("BRUTE_FORCE_MAX_ITEMS", "20"))
    ASSORTMENT_TOL = float(os.getenv("ASSORTMENT_TOL", "1e-12"))

settings = Settings()
