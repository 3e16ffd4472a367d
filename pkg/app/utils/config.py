from typing import Literal
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "SBF Coverage Planner"
    DEBUG: bool = False

    # Logging Configuration
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    LOG_DIR: str = "logs"
    LOG_ROTATION_TYPE: Literal["size", "time"] = "size"

    # Size-based rotation settings
    LOG_MAX_BYTES: int = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT: int = 5

    # Time-based rotation settings
    LOG_ROTATION_WHEN: Literal[
        "S", "M", "H", "D", "midnight", "W0", "W1", "W2", "W3", "W4", "W5", "W6"
    ] = "midnight"
    LOG_ROTATION_INTERVAL: int = 1

    # Log formatting
    LOG_TIMESTAMP_FORMAT: str = "%Y-%m-%d %H:%M:%S"
    LOG_USE_UTC: bool = False

    # Exhaustive-search guards
    QUBIT_LIMIT: int = 24
    PATH_ENUMERATION_LIMIT: int = 200_000
    DFS_COMBINATION_BUDGET: int = 100_000_000
    REACHABILITY_STATE_CAP: int = 200_000
    REDUCTION_MOVE_FACTOR: int = 4

    # Simulated annealing defaults
    SA_T_INITIAL: float = 10.0
    SA_T_FINAL: float = 0.01
    SA_DECAY: float = 0.95
    SA_STEPS_FACTOR: int = 50  # steps per temperature = factor * sub-grids * robots
    SA_NEIGHBOR_TRIES_FACTOR: int = 10

    # Genetic algorithm defaults
    GA_POPULATION_SIZE: int = 20
    GA_GENERATIONS: int = 20

    # QAOA defaults
    QAOA_STEP_SIZE: float = 0.1
    QAOA_MOMENTUM: float = 0.9
    QAOA_ITERATIONS: int = 100
    QAOA_FD_SHIFT: float = 1e-4
    QAOA_RESTARTS: int = 4
    QAOA_SHOTS: int = 1024

    # Artifacts
    OUTPUT_DIR: str = "results"

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
