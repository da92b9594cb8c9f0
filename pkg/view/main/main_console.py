import argparse

from common.app_data import app_data

from common.errors import UsageError

from view.table import FORMATS


class ConsoleParser(argparse.ArgumentParser):

    def error(self, message):

        raise UsageError(f"{self.prog}: {message}")


def _add_model(parser, help_text: str, many: bool = False) -> None:

    parser.add_argument(
        "--model", required=True, action="append" if many else "store", help=help_text,
    )


def _add_features(parser) -> None:

    group = parser.add_argument_group("features")

    group.add_argument("--weights", default=None, help="w_hor,w_ver,w_diag (default 1,1,1.41421356)")

    group.add_argument("--coeffs", type=int, default=None, help="retained cepstral coefficients")

    group.add_argument("--floor", type=float, default=None, help="mel floor before the log")

    group.add_argument("--include-c0", action="store_true")

    group.add_argument("--lifter", type=int, default=0)

    group.add_argument("--scale", choices=("unit", "db"), default="unit", help="MCD constant")

    group.add_argument("--step-rule", choices=("path_min", "predecessor"), default="path_min")


def _add_mel(parser) -> None:

    group = parser.add_argument_group("mel extraction")

    group.add_argument("--n-fft", type=int, default=None)

    group.add_argument("--hop", type=int, default=None)

    group.add_argument("--n-mels", type=int, default=None)

    group.add_argument("--fmin", type=float, default=None)

    group.add_argument("--fmax", type=float, default=None)

    group.add_argument("--power", action="store_true", help="filter the power spectrum")

    group.add_argument("--slaney", action="store_true", help="area-normalize the filters")


class MainConsole:

    """Command-line surface: one subcommand per handler in CommandHandler."""

    def __init__(self):

        self.parser = ConsoleParser(prog="fastmel", description=f"{app_data.title} lightweight TTS toolkit")

        self.commands = None

        self._setup_global()

        self._setup_commands()

    def _setup_global(self) -> None:

        p = self.parser

        p.add_argument("--seed", type=int, default=None, help="random seed (env FASTMEL_SEED)")

        p.add_argument("--threads", type=int, default=1, help="compute threads (bench needs 1)")

        p.add_argument("--format", choices=FORMATS, default="table")

        p.add_argument("-v", "--verbose", action="count", default=0)

    def _setup_commands(self) -> None:

        self.commands = self.parser.add_subparsers(dest="command", metavar="command", parser_class=ConsoleParser)

        self.commands.required = True

        count = self.commands.add_parser("count", help="parameter and FLOP accounting")

        _add_model(count, "builtin name or spec .json (repeat to compare)", many=True)

        count.add_argument("--t-text", type=int, default=None)

        count.add_argument("--t-mel", type=int, default=None)

        count.add_argument("--schedule", choices=("autoregressive", "single"), default="autoregressive")

        count.add_argument("--no-bias", action="store_true")

        count.add_argument("--include-embedding", action="store_true")

        count.add_argument("--totals-only", action="store_true", help="omit per-layer rows")

        count.add_argument("--out", default=None)

        bench = self.commands.add_parser("bench", help="single-thread synthesis timing")

        _add_model(bench, "model .fdt1, builtin name or spec .json (repeatable)", many=True)

        bench.add_argument("--frames", type=int, default=None)

        bench.add_argument("--repeats", type=int, default=None)

        bench.add_argument("--warmup", type=int, default=None)

        bench.add_argument("--text", default=None)

        bench.add_argument("--out", default=None, help="timing CSV")

        prune = self.commands.add_parser("prune", help="filter pruning")

        _add_model(prune, "model .fdt1, builtin name or spec .json")

        prune.add_argument("--ratio", type=float, required=True)

        prune.add_argument("--score", choices=("l1", "l2"), default="l1")

        prune.add_argument("--no-attention", action="store_true", help="keep attention key channels")

        prune.add_argument("--out", required=True)

        prune.add_argument("--report", default=None)

        fold = self.commands.add_parser("fold", help="fold weight normalization into plain kernels")

        _add_model(fold, "model .fdt1")

        fold.add_argument("--out", required=True)

        mel = self.commands.add_parser("mel", help="WAV to mel-spectrogram")

        mel.add_argument("--wav", required=True)

        mel.add_argument("--out", required=True)

        _add_mel(mel)

        emcd = self.commands.add_parser("emcd", help="EMCD of one pair")

        emcd.add_argument("--syn", required=True)

        emcd.add_argument("--gt", required=True)

        emcd.add_argument("--no-norm", action="store_true")

        emcd.add_argument("--path", default=None, help="alignment CSV")

        emcd.add_argument("--plot", default=None, help="alignment figure")

        emcd.add_argument("--out", default=None)

        _add_features(emcd)

        _add_mel(emcd)

        corpus = self.commands.add_parser("emcd_corpus", help="EMCD over a pairs.csv")

        corpus.add_argument("--pairs", required=True)

        corpus.add_argument("--out", required=True)

        corpus.add_argument("--jobs", type=int, default=None)

        corpus.add_argument("--progress", action="store_true")

        _add_features(corpus)

        _add_mel(corpus)

        init = self.commands.add_parser("init", help="seeded random weights")

        _add_model(init, "builtin name or spec .json")

        init.add_argument("--weight-norm", action="store_true")

        init.add_argument("--out", required=True)

        synth = self.commands.add_parser("synth", help="autoregressive mel synthesis")

        _add_model(synth, "model .fdt1, builtin name or spec .json")

        synth.add_argument("--text", required=True)

        synth.add_argument("--frames", type=int, default=None)

        synth.add_argument("--no-early-stop", action="store_true")

        synth.add_argument("--full", action="store_true", help="recompute the whole prefix per frame")

        synth.add_argument("--out", required=True)

    def parse(self, argv=None) -> argparse.Namespace:

        return self.parser.parse_args(argv)
