import os

import sys

import signal

import logging

import traceback

# BLAS / OpenMP pools are sized when numpy loads
for _name in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
              "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS"):

    os.environ.setdefault(_name, "1")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT, EXIT_INTERRUPT = 0, 1, 2, 3, 130

def _global_excepthook(exc_type, exc_value, exc_tb):

    if issubclass(exc_type, KeyboardInterrupt):

        sys.exit(EXIT_INTERRUPT)

    print("\n" + "=" * 60, file=sys.stderr)

    print("[UNHANDLED EXCEPTION]", file=sys.stderr)

    traceback.print_exception(exc_type, exc_value, exc_tb)

    print("=" * 60 + "\n", file=sys.stderr)

    sys.exit(EXIT_INVARIANT)

sys.excepthook = _global_excepthook

def _sigint_handler(sig, frame):

    print("interrupted", file=sys.stderr)

    sys.exit(EXIT_INTERRUPT)

signal.signal(signal.SIGINT, _sigint_handler)

from common.app_data import app_data

from common.errors import FastMelError

from view.main.main_console import MainConsole

from view.main.command_handler import CommandHandler

logger = logging.getLogger("fastmel")

class FastMelApp:

    def __init__(self, argv=None):

        self.argv = argv

        self.args = None

        self.handler = None

        self._setup_application()

    def _setup_application(self) -> None:

        logging.basicConfig(
            stream=sys.stderr, level=logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )

        app_data.init()

    def start(self) -> None:

        self.args = MainConsole().parse(self.argv)

        level = logging.DEBUG if self.args.verbose > 1 else logging.INFO if self.args.verbose else logging.WARNING

        logging.getLogger().setLevel(level)

        self.handler = CommandHandler(self.args)

    def run(self) -> int:

        try:

            if self.handler is None:

                self.start()

            return self.handler.run()

        except FastMelError as e:

            print(f"error: {e}", file=sys.stderr)

            return e.exit_code

        except OSError as e:

            print(f"error: {e}", file=sys.stderr)

            return EXIT_DATA

def main(argv=None) -> int:

    app = FastMelApp(argv)

    return app.run()

if __name__ == "__main__":

    sys.exit(main())
