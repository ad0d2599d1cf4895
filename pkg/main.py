import logging
import sys

from src.cli.app import main
from src.config.settings import settings

# Configure logging - concise format
logging.basicConfig(
    level=getattr(logging, settings.log_level, logging.INFO),
    format='%(asctime)s - %(levelname)s - %(message)s'
)

# Reduce noise from the CBC wrapper
logging.getLogger("pulp").setLevel(logging.WARNING)


if __name__ == "__main__":
    sys.exit(main())
