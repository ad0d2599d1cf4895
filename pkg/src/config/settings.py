import os
from dotenv import load_dotenv

load_dotenv()

SOLVER_CHOICES = ("reference", "external")


class Settings:
    def __init__(self):
        self.solver = os.getenv("EVDR_SOLVER", "external").strip().lower()
        self.solver_path = os.getenv("EVDR_SOLVER_PATH", "").strip() or None

        # Solver limits per monthly problem
        self.time_limit = float(os.getenv("EVDR_TIME_LIMIT", "300"))
        self.mip_gap = float(os.getenv("EVDR_MIP_GAP", "0.0001"))

        # Step grid and baseline defaults
        self.dt_minutes = int(os.getenv("EVDR_DT_MINUTES", "15"))
        self.baseline_days = int(os.getenv("EVDR_BASELINE_DAYS", "10"))

        self.jobs = int(os.getenv("EVDR_JOBS", "1"))
        self.output_dir = os.getenv("EVDR_OUTPUT_DIR", "out")
        self.log_level = os.getenv("EVDR_LOG_LEVEL", "INFO").upper()

        if self.solver not in SOLVER_CHOICES:
            self.solver = "external"

# Global settings instance
settings = Settings()
