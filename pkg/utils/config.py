import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
env_path = Path(".env")
if env_path.exists():
    load_dotenv(dotenv_path=env_path)


def _env_float(name, default):
    raw = os.environ.get(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def _env_int(name, default):
    raw = os.environ.get(name, default)
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


class Config:
    """Base configuration class."""

    # Output and run settings
    OUTPUT_DIR = os.environ.get("CDQSIM_OUTPUT_DIR", "results")
    THREADS = _env_int("CDQSIM_THREADS", "1")
    if THREADS < 1:
        raise ValueError("CDQSIM_THREADS must be at least 1")
    SEED = _env_int("CDQSIM_SEED", "1234")
    LOG_LEVEL = os.environ.get("CDQSIM_LOG_LEVEL", "INFO").upper()

    # Numerical tolerances
    PAULI_PRUNE_EPS = _env_float("CDQSIM_PRUNE_EPS", "1e-14")
    GAP_TOLERANCE = _env_float("CDQSIM_GAP_TOL", "1e-9")
    GRAM_RTOL = _env_float("CDQSIM_GRAM_RTOL", "1e-12")

    # Dense-storage guards
    DENSE_QUBIT_LIMIT = _env_int("CDQSIM_DENSE_LIMIT", "12")
    ORACLE_QUBIT_LIMIT = _env_int("CDQSIM_ORACLE_LIMIT", "8")
    SNAPSHOT_QUBIT_LIMIT = _env_int("CDQSIM_SNAPSHOT_LIMIT", "12")

    # Gate error model (average single-qubit and CNOT infidelities)
    EPS_ROTATION = _env_float("CDQSIM_EPS_ROT", "5e-4")
    EPS_CNOT = _env_float("CDQSIM_EPS_CNOT", "0.015")
    for _name, _value in (("CDQSIM_EPS_ROT", EPS_ROTATION), ("CDQSIM_EPS_CNOT", EPS_CNOT)):
        if not 0.0 <= _value <= 1.0:
            raise ValueError(f"{_name} must lie in [0, 1], got {_value}")
    del _name, _value

    # Readout sampling
    READOUT_ERROR = _env_float("CDQSIM_READOUT_ERROR", "0.04")
    if not 0.0 <= READOUT_ERROR < 0.5:
        raise ValueError("CDQSIM_READOUT_ERROR must lie in [0, 0.5)")
    SHOTS = _env_int("CDQSIM_SHOTS", "1024")

    # Run registry; empty means "<output dir>/runs.sqlite"
    RUN_STORE_URL = os.environ.get("CDQSIM_RUN_STORE_URL", "").strip()
    RUN_STORE_ENGINE_OPTIONS = {
        "pool_pre_ping": True,
    }


class DevelopmentConfig(Config):
    """Development configuration."""

    DEBUG = True


class ProductionConfig(Config):
    """Batch/cluster configuration."""

    DEBUG = False
    LOG_LEVEL = os.environ.get("CDQSIM_LOG_LEVEL", "WARNING").upper()


class TestingConfig(Config):
    """Testing configuration."""

    TESTING = True
    DEBUG = False
    THREADS = 1
    SEED = 1234
    RUN_STORE_URL = "sqlite:///:memory:"
    OUTPUT_DIR = "test-results"


# Configuration mapping
config = {
    "development": DevelopmentConfig,
    "production": ProductionConfig,
    "testing": TestingConfig,
    "default": DevelopmentConfig,
}


def get_config():
    """Get configuration based on CDQSIM_CONFIG environment variable."""
    config_name = os.environ.get("CDQSIM_CONFIG", "default")
    if config_name not in config:
        raise ValueError(
            f"Unknown CDQSIM_CONFIG {config_name!r}; expected one of {sorted(config)}"
        )
    return config[config_name]


def main():
    """Validate configuration and display status."""
    try:
        config_obj = get_config()
        print("Configuration validation successful!")
        print(f"Configuration: {config_obj.__name__}")
        print(f"Environment: {os.environ.get('CDQSIM_CONFIG', 'default')}")
        print(f"Output directory: {config_obj.OUTPUT_DIR}")
        print(f"Worker threads: {config_obj.THREADS}")
        print(
            f"Gate error model: eps_rot={config_obj.EPS_ROTATION}, "
            f"eps_cnot={config_obj.EPS_CNOT}"
        )
        print(f"Readout error: {config_obj.READOUT_ERROR} ({config_obj.SHOTS} shots)")

        store_url = config_obj.RUN_STORE_URL or (
            f"sqlite:///{Path(config_obj.OUTPUT_DIR) / 'runs.sqlite'}"
        )
        try:
            from sqlalchemy import create_engine, text

            if store_url.startswith("sqlite:///") and ":memory:" not in store_url:
                Path(store_url[len("sqlite:///"):]).parent.mkdir(
                    parents=True, exist_ok=True
                )
            engine = create_engine(store_url)
            with engine.connect() as conn:
                conn.execute(text("SELECT 1"))
            print("Run store connection: ✅ Success")
        except Exception as e:
            print(f"Run store connection: ❌ Failed ({str(e)})")

    except Exception as e:
        print(f"❌ Configuration validation failed: {str(e)}")
        exit(1)


if __name__ == "__main__":
    main()
