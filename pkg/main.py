import sys
from typing import Optional, Sequence

from core.app import create_app
from core.errors import ToolkitError
from config.settings import settings
from utils.logger import setup_logging, get_logger

logger = get_logger(__name__)

app = create_app()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = app.parse_args(argv)
    try:
        if args.log_level:
            setup_logging(level=args.log_level)
        logger.debug(f"{settings.PROJECT_NAME}: output={settings.OUTPUT_DIR} scenarios={settings.SCENARIO_DIR}")
        return args.handler(args)
    except ToolkitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
