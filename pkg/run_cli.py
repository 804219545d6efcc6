#!/usr/bin/env python
import logging
import sys

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main():
    from cli.commands import EXIT_ERROR, run
    try:
        sys.exit(run(sys.argv[1:]))
    except Exception as e:
        # never 1, which is the FAILED verdict
        logger.exception(f"Error running condpoisson: {e}")
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
