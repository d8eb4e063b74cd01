"""
Main entry point for the garz command-line tool.
"""
import argparse
import importlib
import sys
from typing import Dict, List, Optional

from garz_kit.core.exceptions import ConfigError, ConvergenceError, GarzError
from garz_kit.core.logger import logger


class GarzApp:
    """サブコマンドの登録と実行"""

    extensions = (
        "garz_kit.commands.solve",
        "garz_kit.commands.studies",
        "garz_kit.commands.riemann",
    )

    def __init__(self):
        """Initialize the argument parser."""
        self.parser = argparse.ArgumentParser(
            prog="garz",
            description="Finite-volume GARZ traffic solver and verification harness",
        )
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)
        self.commands: Dict[str, object] = {}

    def setup(self):
        """Load command modules."""
        for name in self.extensions:
            self.load_extension(name)

    def load_extension(self, name: str):
        module = importlib.import_module(name)
        module.setup(self)

    def add_command(self, command):
        parser = self.subparsers.add_parser(command.name, help=command.description,
                                            description=command.description)
        command.configure(parser)
        self.commands[command.name] = command

    def run(self, argv: Optional[List[str]] = None) -> int:
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            # argparse exits with 2 on usage errors and 0 for --help
            return 0 if e.code in (0, None) else 2

        command = self.commands[args.command]
        try:
            return command.run(args)
        except ConfigError as e:
            logger.log_error(e, f"Command: {args.command}")
            print(f"config error: {e}", file=sys.stderr)
            return 2
        except ConvergenceError as e:
            logger.log_error(e, f"Command: {args.command}")
            print(f"solver error: {e}", file=sys.stderr)
            if e.trace is not None:
                print(e.trace.dump(), file=sys.stderr)
            return 1
        except GarzError as e:
            logger.log_error(e, f"Command: {args.command}")
            print(f"solver error: {e}", file=sys.stderr)
            return 1
        except OSError as e:
            logger.log_error(e, f"Command: {args.command}")
            print(str(e), file=sys.stderr)
            return 1


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    app = GarzApp()
    app.setup()
    return app.run(argv)


if __name__ == "__main__":
    sys.exit(main())
