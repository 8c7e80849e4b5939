import os
from dotenv import load_dotenv

load_dotenv()

class Settings:
    PROJECT_NAME: str = "rcesc-toolkit"

    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "info")

    # Where CSV traces land when no --out is given
    OUTPUT_DIR: str = os.getenv("RCESC_OUTPUT_DIR", "runs")
    # Searched for <name>.ini when a run/validate argument is neither a path nor a built-in
    SCENARIO_DIR: str = os.getenv("RCESC_SCENARIO_DIR", "scenarios")

    MAX_CONCURRENT_RUNS: int = int(os.getenv("RCESC_MAX_CONCURRENT_RUNS", "4"))

    CSV_PRECISION: int = int(os.getenv("RCESC_CSV_PRECISION", "17"))

    @classmethod
    def get_output_config(cls) -> dict:
        """Get trace output configuration dictionary."""
        return {
            "directory": cls.OUTPUT_DIR,
            "precision": cls.CSV_PRECISION,
        }

settings = Settings()
