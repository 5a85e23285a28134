"""Command-line front end: every pipeline stage behind a stable subcommand.

Exit codes: 0 on success, 2 on malformed input or bad parameters, 1 on
internal errors. Diagnostics go to stderr; data goes to files or stdout.
Output files are written atomically and are byte-stable across runs.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .alignment import build_framewise_targets
from .calibration import PredictionRecord, ece
from .errors import DistilcalError, InvalidInputError, InvalidParameterError
from .fileio import (
    read_alignment_file,
    read_config_file,
    read_hypothesis_file,
    read_posterior_file,
    read_prediction_file,
    read_unit_map_file,
    write_text_atomic,
)
from .probs import softmax_t
from .tempscale import DEFAULT_BOUNDS, combine_scores, fit_temperature
from .toy import (
    SweepConfig,
    TrainConfig,
    _derive_seed,
    evaluate,
    generate_data,
    make_student,
    make_task,
    make_teacher,
    sweep_csv,
    sweep_lambda,
    teacher_logits_on,
    train,
)


def _fmt6(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0
    return f"{x:.6f}"


def _records_from_logits(logits: np.ndarray, labels: np.ndarray, t: float = 1.0):
    probs = softmax_t(logits, t)
    return [PredictionRecord(probs[i], int(labels[i])) for i in range(len(labels))]


# ---------------------------------------------------------------- ece

def _parse_group(spec: str) -> Optional[int]:
    """'pooled' -> None, 'batch:SIZE' -> SIZE."""
    if spec == "pooled":
        return None
    if spec.startswith("batch:"):
        try:
            size = int(spec.split(":", 1)[1])
        except ValueError:
            raise InvalidParameterError(f"bad --group value {spec!r}") from None
        if size < 1:
            raise InvalidParameterError("batch size must be >= 1")
        return size
    raise InvalidParameterError(f"--group must be 'pooled' or 'batch:SIZE', got {spec!r}")


def _cmd_ece(args) -> int:
    logits, labels = read_prediction_file(args.input)
    records = _records_from_logits(logits, labels)
    batch = _parse_group(args.group)
    if batch is None:
        chunks = [records]
    else:
        chunks = [records[i : i + batch] for i in range(0, len(records), batch)]
    n_total = len(records)
    total = 0.0
    lines = ["rank,bin,count,mean_conf,mean_acc,gap"]
    bin_index = 0
    for chunk in chunks:
        report = ece(chunk, args.rank, args.bins)
        for b in report.bins:
            total += (b.count / n_total) * abs(b.gap)
            lines.append(
                f"{args.rank},{bin_index},{b.count},"
                f"{_fmt6(b.mean_conf)},{_fmt6(b.mean_acc)},{_fmt6(b.gap)}"
            )
            bin_index += 1
    write_text_atomic(args.out, "\n".join(lines) + "\n")
    print(f"rank={args.rank} bins={args.bins} ece={_fmt6(total)} n={n_total}")
    return 0


# ---------------------------------------------------------------- fit-temp

def _cmd_fit_temp(args) -> int:
    logits, labels = read_prediction_file(args.val)
    validation = [(logits[i], int(labels[i])) for i in range(len(labels))]
    fit = fit_temperature(validation, bounds=(args.t_min, args.t_max))
    ece_before = ece(_records_from_logits(logits, labels), 1, args.bins).ece
    ece_after = ece(_records_from_logits(logits, labels, fit.t_star), 1, args.bins).ece
    print(
        f"t_star={_fmt6(fit.t_star)} "
        f"nll_before={_fmt6(fit.nll_at_unit)} nll_after={_fmt6(fit.nll_at_t_star)} "
        f"ece_before={_fmt6(ece_before)} ece_after={_fmt6(ece_after)}"
    )
    return 0


# ---------------------------------------------------------------- combine

def _cmd_combine(args) -> int:
    groups = read_hypothesis_file(args.hyps)
    out_lines = []
    for utt, hyps in groups.items():
        best_id, ranked = combine_scores(hyps, args.t1, args.t2)
        out_lines.append(f"{utt}\tbest\t{best_id}")
        for position, (hyp, score) in enumerate(ranked, start=1):
            out_lines.append(f"{utt}\t{position}\t{hyp.id}\t{_fmt6(score)}")
    print("\n".join(out_lines))
    return 0


# ---------------------------------------------------------------- targets

def _cmd_targets(args) -> int:
    alignments = read_alignment_file(args.align, args.unit)
    maps = args.map or []
    posts = args.posteriors or []
    if maps and len(maps) != len(posts):
        raise InvalidInputError(
            f"got {len(maps)} --map but {len(posts)} --posteriors"
        )
    teacher_files = [
        (f"t{i}", maps[i] if maps else "identity", posts[i]) for i in range(len(posts))
    ]
    teacher_tables = []
    for tid, map_path, post_path in teacher_files:
        unit_map = (
            None
            if map_path == "identity"
            else read_unit_map_file(map_path, source=args.unit, target=tid)
        )
        teacher_tables.append((tid, unit_map, read_posterior_file(post_path)))

    lines = []
    for utt, alignment in alignments.items():
        teachers = []
        for tid, unit_map, table in teacher_tables:
            if utt not in table:
                raise InvalidInputError(
                    f"utterance {utt!r} missing from posterior file for teacher {tid}"
                )
            teachers.append((tid, unit_map, lambda labels, p=table[utt]: p))
        for frame_idx, target in enumerate(build_framewise_targets(alignment, teachers)):
            cells = [utt, str(frame_idx), target.hard]
            for tid, vec in target.soft:
                cells.append(f"{tid}:" + ",".join(_fmt6(v) for v in vec))
            lines.append("\t".join(cells))
    write_text_atomic(args.out, "\n".join(lines) + "\n")
    print(f"utterances={len(alignments)} frames={len(lines)} teachers={len(posts)}")
    return 0


# ---------------------------------------------------------------- train / sweep

_SWEEP_CASTS = {
    "num_classes": int,
    "input_dim": int,
    "coarse_classes": lambda v: None if v.lower() == "none" else int(v),
    "noise_sigma": float,
    "mean_scale": float,
    "task_seed": int,
    "n_train": int,
    "n_test": int,
    "hidden_dim": int,
    "epochs": int,
    "learning_rate": float,
    "batch_size": int,
    "teacher_hidden_multiplier": int,
    "teacher_data_multiplier": int,
    "teacher_epochs": int,
    "lst_temperature": float,
    "multitask_temperature": float,
    "hierarchical": lambda v: v.lower() in ("1", "true", "yes"),
    "eval_bins": int,
}

_TRAIN_ONLY_KEYS = {"method", "lambda", "epsilon", "temperature", "seed", "out"}
_SWEEP_ONLY_KEYS = {"lambdas", "methods", "seeds", "out"}


def _build_sweep_config(cfg: dict[str, str], extra_keys: set[str]) -> SweepConfig:
    unknown = set(cfg) - set(_SWEEP_CASTS) - extra_keys
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, cast in _SWEEP_CASTS.items():
        if key in cfg:
            try:
                kwargs[key] = cast(cfg[key])
            except ValueError:
                raise InvalidInputError(f"bad value for config key {key!r}: {cfg[key]!r}") from None
    return SweepConfig(**kwargs)


def _require(cfg: dict[str, str], key: str) -> str:
    if key not in cfg:
        raise InvalidInputError(f"config key {key!r} is required")
    return cfg[key]


def _default_temperature(method: str) -> float:
    return {"lst": 5.0, "multitask": 1.0}.get(method, 1.0)


def _cmd_train(args) -> int:
    cfg = read_config_file(args.config)
    scfg = _build_sweep_config(cfg, _TRAIN_ONLY_KEYS)
    method = _require(cfg, "method")
    out_path = _require(cfg, "out")
    seed = int(cfg.get("seed", "0"))
    tcfg = TrainConfig(
        method=method,
        epochs=scfg.epochs,
        learning_rate=scfg.learning_rate,
        batch_size=scfg.batch_size,
        seed=_derive_seed(seed, "shuffle"),
        lam=float(cfg.get("lambda", "0.5")),
        epsilon=float(cfg.get("epsilon", "0.1")),
        temperature=float(cfg.get("temperature", str(_default_temperature(method)))),
    )
    task = make_task(
        num_classes=scfg.num_classes,
        input_dim=scfg.input_dim,
        coarse_classes=scfg.coarse_classes,
        noise_sigma=scfg.noise_sigma,
        mean_scale=scfg.mean_scale,
        seed=scfg.task_seed,
    )
    x_train, y_train = generate_data(task, scfg.n_train, _derive_seed(seed, "train"))
    x_test, y_test = generate_data(task, scfg.n_test, _derive_seed(seed, "test"))
    streams = None
    if method in ("lst", "multitask"):
        fine_teacher = make_teacher(
            task,
            _derive_seed(seed, "teacher-fine"),
            hidden_dim=scfg.hidden_dim * scfg.teacher_hidden_multiplier,
            n_samples=scfg.n_train * scfg.teacher_data_multiplier,
            epochs=scfg.teacher_epochs,
            learning_rate=scfg.learning_rate,
            batch_size=scfg.batch_size,
        )
        streams = {"fine": teacher_logits_on(fine_teacher, x_train)}
        if method == "multitask" and scfg.hierarchical and task.coarse_map is not None:
            coarse_teacher = make_teacher(
                task,
                _derive_seed(seed, "teacher-coarse"),
                coarse=True,
                hidden_dim=scfg.hidden_dim * scfg.teacher_hidden_multiplier,
                n_samples=scfg.n_train * scfg.teacher_data_multiplier,
                epochs=scfg.teacher_epochs,
                learning_rate=scfg.learning_rate,
                batch_size=scfg.batch_size,
            )
            streams["coarse"] = teacher_logits_on(coarse_teacher, x_train)
    student = make_student(task, scfg.hidden_dim, _derive_seed(seed, "student"))
    _, curve = train(student, x_train, y_train, tcfg, streams)
    ev = evaluate(student, x_test, y_test, ranks=(1, 2, 3), num_bins=scfg.eval_bins)
    model = {
        "method": method,
        "architecture": {
            "input_dim": student.input_dim,
            "hidden_dim": student.hidden_dim,
            "heads": student.head_dims,
        },
        "rng_seed": student.rng_seed,
        "params": student.params.tolist(),
        "loss_curve": curve,
        "metrics": {
            "acc": ev.accuracy,
            "ece1": ev.reports[1].ece,
            "ece2": ev.reports[2].ece,
            "ece3": ev.reports[3].ece,
        },
    }
    write_text_atomic(out_path, json.dumps(model, sort_keys=True, indent=1) + "\n")
    print(
        f"method={method} acc={_fmt6(ev.accuracy)} "
        f"ece1={_fmt6(ev.reports[1].ece)} ece2={_fmt6(ev.reports[2].ece)} "
        f"ece3={_fmt6(ev.reports[3].ece)}"
    )
    return 0


def _parse_list(text: str, cast, key: str) -> list:
    try:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidInputError(f"bad value for config key {key!r}: {text!r}") from None


def _cmd_sweep(args) -> int:
    cfg = read_config_file(args.config)
    scfg = _build_sweep_config(cfg, _SWEEP_ONLY_KEYS)
    out_path = _require(cfg, "out")
    lambdas = _parse_list(_require(cfg, "lambdas"), float, "lambdas")
    methods = _parse_list(_require(cfg, "methods"), str, "methods")
    seeds = _parse_list(_require(cfg, "seeds"), int, "seeds")
    rows = sweep_lambda(scfg, lambdas, methods, seeds)
    write_text_atomic(out_path, sweep_csv(rows))
    print(f"rows={len(rows)} out={out_path}")
    return 0


# ---------------------------------------------------------------- wiring

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distilcal",
        description="Distillation targets, calibration measurement, and temperature scaling.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--version", action="version", version=f"distilcal {__version__}")
        p.set_defaults(func=func)
        return p

    p = add("ece", _cmd_ece, "Reliability CSV and calibration error for one rank.")
    p.add_argument("--input", required=True, help="JSON-lines prediction file")
    p.add_argument("--rank", type=int, default=1, help="which Nth-best class (default 1)")
    p.add_argument("--bins", type=int, default=15, help="number of bins (default 15)")
    p.add_argument("--group", default="pooled", help="'pooled' or 'batch:SIZE'")
    p.add_argument("--out", required=True, help="output CSV path")

    p = add("fit-temp", _cmd_fit_temp, "Fit a temperature on validation logits.")
    p.add_argument("--val", required=True, help="JSON-lines prediction file")
    p.add_argument("--t-min", type=float, default=DEFAULT_BOUNDS[0])
    p.add_argument("--t-max", type=float, default=DEFAULT_BOUNDS[1])
    p.add_argument("--bins", type=int, default=15, help="bins for the ECE readout")

    p = add("combine", _cmd_combine, "Re-rank hypotheses with two temperatures.")
    p.add_argument("--hyps", required=True, help="JSON-lines hypothesis file")
    p.add_argument("--t1", type=float, default=1.0, help="acoustic-score temperature")
    p.add_argument("--t2", type=float, default=1.0, help="language-score temperature")

    p = add("targets", _cmd_targets, "Frame-wise targets from alignment + posteriors.")
    p.add_argument("--align", required=True, help="alignment file (utt<TAB>tokens)")
    p.add_argument("--unit", default="fine", help="alignment unit tag (default 'fine')")
    p.add_argument(
        "--map",
        action="append",
        help="unit-map TSV per teacher, or 'identity'; repeatable",
    )
    p.add_argument(
        "--posteriors",
        action="append",
        help="posterior file per teacher; repeatable",
    )
    p.add_argument("--out", required=True, help="output target file")

    p = add("train", _cmd_train, "Train one toy student from a key=value config.")
    p.add_argument("--config", required=True, help="key=value config file")

    p = add("sweep", _cmd_sweep, "Lambda sweep over methods and seeds.")
    p.add_argument("--config", required=True, help="key=value config file")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DistilcalError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
