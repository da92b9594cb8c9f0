import csv

import json

import logging

from pathlib import Path

from common.app_data import app_data

from common.errors import DataError, UsageError

from audio.features import MelParams, wav_to_mel

from compress import fold_weight_norm, prune

from metrics import (
    FeatureConfig, TransitionWeights, emcd, emcd_corpus, load_mfcc, mcd_matrix, read_pairs,
)

from net.bench import CSV_FIELDS as BENCH_FIELDS, bench_synthesize, mel_digest

from net.cost import Schedule, count_flops, ratio

from net.graph import synthesize_aligned

from net.model import Model, init_model

from net.spec import resolve_spec

from net.text import text_to_ids

from view.table import csv_text, emit, emit_records, format_table, json_text

logger = logging.getLogger(__name__)


def load_model(source: str, seed: int, weight_norm: bool = False) -> Model:

    """A saved .fdt1 model, or seeded random weights for a builtin name or spec file."""

    path = Path(source)

    if path.suffix == ".fdt1" or (path.is_file() and path.suffix != ".json"):
        return Model.load(path)

    return init_model(resolve_spec(source, weight_norm), seed)


class CommandHandler:

    def __init__(self, args):

        self.args = args

        self.app_data = app_data

        self.seed = args.seed if args.seed is not None else app_data.seed

        self.handlers = {}

        self.connect_commands()

    def connect_commands(self) -> None:

        self.handlers["count"] = self.on_count

        self.handlers["bench"] = self.on_bench

        self.handlers["prune"] = self.on_prune

        self.handlers["fold"] = self.on_fold

        self.handlers["mel"] = self.on_mel

        self.handlers["emcd"] = self.on_emcd

        self.handlers["emcd_corpus"] = self.on_emcd_corpus

        self.handlers["init"] = self.on_init

        self.handlers["synth"] = self.on_synth

    def run(self) -> int:

        if self.args.verbose:
            config = dict(self.app_data.resolved(), **vars(self.args), seed=self.seed)

            logger.info("resolved config: %s", json.dumps(config, default=str, sort_keys=True))

        if self.args.threads != 1 and self.args.command != "bench":
            logger.warning("--threads only applies to bench; running single-threaded")

        self.handlers[self.args.command]()

        return 0

    def _weights(self) -> TransitionWeights:

        if self.args.weights:
            return TransitionWeights.parse(self.args.weights)

        return TransitionWeights(*self.app_data.emcd_weights)

    def _mel_params(self) -> MelParams:

        a = self.args

        return MelParams.from_app_data(
            n_fft=a.n_fft, hop=a.hop, n_mels=a.n_mels, fmin=a.fmin, fmax=a.fmax,
            power=a.power, slaney_norm=a.slaney,
        )

    def _features(self) -> FeatureConfig:

        a = self.args

        overrides = dict(include_c0=a.include_c0, lifter=a.lifter, mel=self._mel_params())

        if a.coeffs is not None:
            overrides["n_coeffs"] = a.coeffs

        if a.floor is not None:
            overrides["floor"] = a.floor

        return FeatureConfig.from_app_data(**overrides)

    def on_count(self) -> None:

        a = self.args

        t_text = a.t_text or self.app_data.t_text

        t_mel = a.t_mel or self.app_data.t_mel

        reports = [
            count_flops(
                resolve_spec(name), t_text, t_mel, schedule=Schedule(a.schedule),
                include_bias=not a.no_bias, include_embedding=a.include_embedding,
            )
            for name in a.model
        ]

        headers = ("model", "network", "layer", "params", "macs", "flops")

        rows = []

        for report in reports:
            if not a.totals_only:
                rows.extend(
                    (report.model, r.network, r.label, r.params, r.macs, r.flops) for r in report.rows
                )

            rows.append((report.model, "total", "", report.params, report.macs, report.flops))

            delta = report.reference_delta()

            if delta:
                rows.append((report.model, "delta", "vs published", delta["params"], None, delta["flops"]))

        payload = {"models": [r.to_dict() for r in reports]}

        if len(reports) > 1:
            base, last = reports[0], reports[-1]

            params_ratio, macs_ratio = ratio(last.params, base.params), ratio(last.macs, base.macs)

            rows.append((f"{last.model}/{base.model}", "ratio", "", params_ratio, macs_ratio,
                         ratio(last.flops, base.flops)))

            payload["ratio"] = {"params": params_ratio, "macs": macs_ratio}

        title = f"T_text={t_text} T_mel={t_mel} schedule={a.schedule}"

        emit_records(a.format, headers, rows, payload, a.out, title)

    def on_bench(self) -> None:

        a = self.args

        if a.threads != 1:
            raise UsageError("bench requires exactly one thread")

        frames = a.frames or self.app_data.t_mel

        repeats = a.repeats or self.app_data.bench_repeats

        warmup = a.warmup if a.warmup is not None else self.app_data.bench_warmup

        ids = text_to_ids(a.text) if a.text else None

        summaries = [
            bench_synthesize(load_model(m, self.seed), self.seed, frames, repeats, warmup=warmup, ids=ids)
            for m in a.model
        ]

        if a.out:
            emit(csv_text(BENCH_FIELDS, [r.to_csv() for s in summaries for r in s.rows]), a.out)

        headers = ("model", "params", "frames", "median_s", "p10_s", "p90_s", "digest")

        rows = [(s.model, s.params, s.frames, s.median, s.p10, s.p90, s.digest[:16]) for s in summaries]

        payload = {"runs": [s.to_dict() for s in summaries]}

        if len(summaries) > 1:
            speedup = ratio(summaries[0].median, summaries[-1].median)

            rows.append((f"{summaries[0].model}/{summaries[-1].model}", None, None, speedup, None, None, ""))

            payload["speedup"] = speedup

        if a.format == "table":
            emit(format_table(headers, rows, f"single thread, {repeats} runs"))
        elif a.format == "csv":
            emit(csv_text(headers, rows))
        else:
            emit(json_text(payload))

    def on_prune(self) -> None:

        a = self.args

        model = load_model(a.model, self.seed)

        pruned, report = prune(model, a.ratio, score=a.score, include_attention=not a.no_attention)

        pruned.save(a.out)

        if a.report:
            report.save(a.report)

        headers = ("unit", "size", "group", "removed")

        rows = [(u.name, u.size, u.group, len(u.removed)) for u in report.units]

        rows.append(("total", None, None, report.removed))

        title = (
            f"{report.model} ratio {report.ratio}: params {report.params_before:,} -> "
            f"{report.params_after:,}, macs drop {report.macs_drop:.2%}"
        )

        emit_records(a.format, headers, rows, report.to_dict(), None, title)

    def on_fold(self) -> None:

        a = self.args

        model = Model.load(a.model)

        folded = fold_weight_norm(model)

        folded.save(a.out)

        count = sum(1 for _, _, layer in model.spec.layers() if layer.weight_norm)

        emit(f"folded {count} weight-normalized layers -> {a.out}\n")

    def on_mel(self) -> None:

        a = self.args

        mel = wav_to_mel(a.wav, self._mel_params())

        mel.save(a.out)

        emit(f"{a.wav}: {mel.n_mels} x {mel.frames} -> {a.out}\n")

    def on_emcd(self) -> None:

        a = self.args

        features = self._features()

        x, y = load_mfcc(a.syn, features), load_mfcc(a.gt, features)

        report = emcd(x, y, self._weights(), normalize=not a.no_norm, step_rule=a.step_rule, scale=a.scale)

        if a.path:
            with open(a.path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")

                writer.writerow(("i", "j", "move"))

                writer.writerows((i, j, m.value) for (i, j), m in zip(report.path, report.moves))

        if a.plot:
            from view.plot import plot_alignment

            plot_alignment(mcd_matrix(x, y, a.scale), report, a.plot)

        headers = ("syn", "gt", "t_syn", "t_gt", "emcd_raw", "emcd_norm")

        rows = [(a.syn, a.gt, report.t_syn, report.t_gt, report.emcd_raw, report.emcd_normalized)]

        payload = dict(report.to_dict(), syn=a.syn, gt=a.gt)

        if a.format == "table":
            norm = "-" if report.emcd_normalized is None else repr(report.emcd_normalized)

            emit(f"raw {report.emcd_raw!r}\nnorm {norm}\n")

            if a.out:
                emit(json_text(payload), a.out)
        else:
            emit_records(a.format, headers, rows, payload, a.out)

    def on_emcd_corpus(self) -> None:

        a = self.args

        jobs = a.jobs or self.app_data.jobs

        pairs = read_pairs(a.pairs)

        result = emcd_corpus(
            pairs, self._weights(), self._features(), jobs,
            step_rule=a.step_rule, scale=a.scale, progress=True if a.progress else None,
        )

        result.write_csv(a.out)

        if result.scored == 0:
            raise DataError(f"none of {len(pairs)} pairs could be scored; see {a.out}")

        headers = ("pairs", "scored", "failed", "mean_norm", "std_norm")

        rows = [(len(result.rows), result.scored, result.failed, result.mean, result.std)]

        payload = {"pairs": len(result.rows), "scored": result.scored, "failed": result.failed,
                   "mean": result.mean, "std": result.std}

        emit_records(a.format, headers, rows, payload, None)

    def on_init(self) -> None:

        a = self.args

        model = init_model(resolve_spec(a.model, a.weight_norm), self.seed)

        model.save(a.out)

        emit(f"{model.spec.name}: {model.num_weights():,} weights (seed {self.seed}) -> {a.out}\n")

    def on_synth(self) -> None:

        a = self.args

        model = load_model(a.model, self.seed)

        frames = a.frames or self.app_data.t_mel

        result = synthesize_aligned(
            model, text_to_ids(a.text), frames, incremental=not a.full, early_stop=not a.no_early_stop,
        )

        result.mel.save(a.out)

        emit(
            f"{model.spec.name}: {result.mel.frames} frames"
            f"{' (stopped early)' if result.stopped_early else ''} "
            f"sha256 {mel_digest(result.mel.bins)} -> {a.out}\n"
        )
