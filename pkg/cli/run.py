import argparse
import json
from pathlib import Path

from config.settings import settings
from models.scenario import ControllerKind
from services.scenario_service import scenario_service
from services.storage_service import storage_service
from utils.logger import get_logger

logger = get_logger(__name__)

EXIT_DIVERGED = 2


def register(commands) -> None:
    parser = commands.add_parser("run", help="run a scenario and export its trace")
    parser.add_argument("scenario", help="built-in name, scenario file, or name inside the scenario directory")
    parser.add_argument("--out", default=None, help="output directory for CSV traces and the summary")
    parser.add_argument(
        "--controller",
        choices=[kind.value for kind in ControllerKind],
        default=None,
        help="override the scenario's controller",
    )
    parser.add_argument("--compare", action="store_true", help="run the ESC baseline and RC/ESC side by side")
    parser.set_defaults(handler=handle_run)


def handle_run(args: argparse.Namespace) -> int:
    scenario = scenario_service.load_scenario(args.scenario)
    out_dir = Path(args.out or scenario.output.directory or settings.OUTPUT_DIR)

    if args.compare:
        results = scenario_service.compare(scenario)
    else:
        controller = ControllerKind(args.controller) if args.controller else None
        results = [scenario_service.run_scenario(scenario, controller)]

    for result in results:
        path = storage_service.trace_path(out_dir, scenario.name, result.summary.controller)
        storage_service.export_csv(result.trace, path, error=result.summary.error)

    summaries = [result.summary for result in results]
    storage_service.write_summaries(summaries, out_dir / f"{scenario.name}_summary.json")
    print(json.dumps([summary.model_dump(mode="json") for summary in summaries], indent=2))

    if any(result.diverged for result in results):
        logger.warning(f"[{scenario.name}] At least one run diverged")
        return EXIT_DIVERGED
    return 0
