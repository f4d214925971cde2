#!/usr/bin/env python3
"""
Run store initialization module for cdqsim.
Handles run-table creation and connection checks.
"""

import logging
import os

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def validate_store_connection(store):
    """Validate run store connection."""
    try:
        from sqlalchemy import text

        # Safety check: the testing profile never writes to a file-backed store
        if os.environ.get("CDQSIM_CONFIG") == "testing":
            if ":memory:" not in store.url:
                raise ValueError("Testing mode must use an in-memory run store")
            logger.info("Run store connection validation: Using test store")

        with store.engine.connect() as conn:
            conn.execute(text("SELECT 1"))
        logger.info("Run store connection: ✅ Success")
        return True
    except Exception as e:
        logger.error(f"Run store connection: ❌ Failed ({str(e)})")
        return False


def create_run_tables(store):
    """Create the runs table and verify it exists."""
    try:
        from sqlalchemy import inspect

        store.create_tables()
        if "runs" not in inspect(store.engine).get_table_names():
            raise Exception("Runs table was not created")
        logger.info("✅ Runs table is present!")
        return True
    except Exception as e:
        logger.error(f"❌ Error creating runs table: {e}")
        logger.error("This might be due to:")
        logger.error("  • An unwritable output directory")
        logger.error("  • An invalid CDQSIM_RUN_STORE_URL")
        return False


def initialize_store(store=None):
    """
    Complete run store initialization process.

    Args:
        store: RunStore instance (optional, built from configuration if not provided)

    Returns:
        bool: True when the store is reachable and its table exists
    """
    logger.info(" Starting run store initialization...")

    if store is None:
        from cdqsim.run_store import RunStore

        store = RunStore()

    if not validate_store_connection(store):
        logger.error("❌ Run store connection failed. Check your configuration.")
        return False

    if not create_run_tables(store):
        logger.error("❌ Failed to create run store tables.")
        return False

    logger.info("Run store initialization completed successfully!")
    return True


def main():
    """Main function for standalone execution."""
    try:
        logger.info("=" * 60)
        logger.info("cdqsim - Run Store Initialization")
        logger.info("=" * 60)

        from utils.config import get_config

        config_obj = get_config()
        logger.info(f"Environment: {os.environ.get('CDQSIM_CONFIG', 'default')}")
        logger.info(f"Output directory: {config_obj.OUTPUT_DIR}")

        success = initialize_store()
        if success:
            logger.info("=" * 60)
            logger.info("✅ Run store initialization completed successfully!")
            logger.info("=" * 60)
        else:
            logger.error("❌ Run store initialization failed.")
        return success

    except Exception as e:
        logger.error(f"❌ Unexpected error during initialization: {e}")
        return False


if __name__ == "__main__":
    success = main()
    exit(0 if success else 1)
