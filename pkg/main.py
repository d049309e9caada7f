import logging

from app.core.config import settings
from app.cli.commands import cli

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def main() -> None:
    logger.info(f"Starting {settings.APP_NAME} {settings.VERSION}")
    cli(prog_name="wbswe")


if __name__ == "__main__":
    main()
