import argparse

from services.scenario_service import scenario_service


def register(commands) -> None:
    listing = commands.add_parser("list", help="list the built-in scenarios")
    listing.set_defaults(handler=handle_list)

    validate = commands.add_parser("validate", help="parse and validate a scenario without running it")
    validate.add_argument("scenario")
    validate.set_defaults(handler=handle_validate)


def handle_list(args: argparse.Namespace) -> int:
    for name, description in scenario_service.list_builtins():
        print(f"{name:<10} {description}")
    return 0


def handle_validate(args: argparse.Namespace) -> int:
    scenario = scenario_service.load_scenario(args.scenario)
    # Assemble the controller too, so cross-section dimension errors surface here
    scenario_service.build_loop(scenario, scenario.controller)
    print(f"ok: {scenario.name} ({scenario.controller.value} on {scenario.plant.kind.value})")
    return 0
