import argparse

from config.settings import settings
from utils.logger import setup_logging, get_logger

setup_logging(level=settings.LOG_LEVEL)
logger = get_logger(__name__)


def create_app() -> argparse.ArgumentParser:
    app = argparse.ArgumentParser(
        prog=settings.PROJECT_NAME,
        description="Simulate classic and retrospective-cost extremum seeking controllers.",
    )
    app.add_argument("--log-level", default=None, help=f"override LOG_LEVEL (currently {settings.LOG_LEVEL})")
    commands = app.add_subparsers(dest="command", required=True)

    from cli import run, scenario
    run.register(commands)
    scenario.register(commands)

    return app
