"""Command-line harness: ``synth``, ``evaluate`` and ``learning-curve``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags, later sources winning. The
resolved settings are written to ``resolved_config.txt`` in the output
directory and can be passed back with ``--config`` to repeat the run.
``workers`` only changes how work is scheduled, never the outputs, and is
left out of that file.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import _serial
from ._random import check_seed, derive_seed
from .curves import LearningCurveError, learning_curve, min_data_to_plateau
from .dataset import Dataset, kfold, load_csv, split_train_test, write_csv
from .exceptions import DataValidationError, TrainingDivergedError
from .forest import RandomForestRegressor
from .metrics import error_distribution, evaluate
from .neural import NeuralNetworkRegressor
from .polynomial import PolynomialRegression
from .synth import SynthConfig, generate

logger = logging.getLogger("strengthcurve")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MODELS = ("pr", "ann", "rf")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: str = "all"
    data: str = ""
    percent_fractions: bool = False
    lenient: bool = False
    synth_n: int = 0
    synth_seed: int = 0
    synth_noise_std: float = 2.0
    seed: int = 0
    ratio: float = 0.7
    k: int = 5
    increment: float = 0.10
    degree: int = 3
    ridge: float = 1e-8
    hidden: int = 7
    learning_rate: float = 0.05
    epochs: int = 500
    batch_size: int = 32
    trees: int = 16
    max_depth: int = -1
    min_leaf: int = 5
    max_features: int = 0
    bootstrap: bool = True
    out: str = "out"

    def models(self):
        return list(MODELS) if self.model == "all" else [self.model]

    def to_text(self):
        lines = ["# resolved run configuration; reuse with --config"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, raw):
    kind = _TYPES[key]
    try:
        if kind is bool or kind == "bool":
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int or kind == "int":
            return int(raw)
        if kind is float or kind == "float":
            return float(raw)
        return str(raw).strip()
    except ValueError:
        raise UsageError(f"invalid value for {key}: {raw!r}") from None


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"{path}:{n}: expected 'key = value'")
            key, value = (s.strip() for s in text.split("=", 1))
            key = key.replace("-", "_")
            if key == "workers":
                continue
            if key not in _TYPES:
                raise UsageError(f"{path}:{n}: unknown key {key!r}")
            values[key] = _coerce(key, value)
    return values


def _parse_synth(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"--synth expects key=value pairs, got {pair!r}")
        key, value = pair.split("=", 1)
        key = {"noise": "noise_std"}.get(key, key)
        name = f"synth_{key}"
        if name not in _TYPES:
            raise UsageError(f"unknown --synth key {key!r} (use n, seed, noise_std)")
        out[name] = _coerce(name, value)
    return out


def resolve_config(args):
    values = {}
    if args.config:
        if not os.path.isfile(args.config):
            raise UsageError(f"config file not found: {args.config}")
        values.update(read_config_file(args.config))
    cli = {k: v for k, v in vars(args).items() if k in _TYPES and v is not None}
    if getattr(args, "synth", None) is not None:
        cli.update(_parse_synth(args.synth))
        if "synth_n" not in cli and "synth_n" not in values:
            raise UsageError("--synth needs n=<rows>")
    values.update(cli)
    if "seed" in values and "synth_seed" not in values:
        values["synth_seed"] = values["seed"]
    cfg = RunConfig(**values)
    if cfg.model not in MODELS + ("all",):
        raise UsageError(f"--model must be one of pr, ann, rf, all; got {cfg.model!r}")
    for name in ("seed", "synth_seed"):
        try:
            check_seed(getattr(cfg, name))
        except (TypeError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    return cfg


def build_estimator(name, cfg, seed):
    if name == "pr":
        return PolynomialRegression(degree=cfg.degree, ridge=cfg.ridge)
    if name == "ann":
        return NeuralNetworkRegressor(
            n_hidden=cfg.hidden,
            learning_rate=cfg.learning_rate,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size if cfg.batch_size > 0 else None,
            random_state=seed,
        )
    return RandomForestRegressor(
        n_estimators=cfg.trees,
        max_depth=cfg.max_depth if cfg.max_depth >= 0 else None,
        min_samples_leaf=cfg.min_leaf,
        max_features=cfg.max_features if cfg.max_features > 0 else None,
        bootstrap=cfg.bootstrap,
        random_state=seed,
    )


def load_dataset(cfg):
    if cfg.data and cfg.synth_n:
        raise UsageError("give either --data or --synth, not both")
    if cfg.data:
        return load_csv(cfg.data, percent_fractions=cfg.percent_fractions, strict=not cfg.lenient)
    if cfg.synth_n:
        return generate(SynthConfig(n=cfg.synth_n, seed=cfg.synth_seed, noise_std=cfg.synth_noise_std))
    raise UsageError("no data: give --data <csv> or --synth n=<rows> [seed=..] [noise_std=..]")


def _write(out_dir, name, text):
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _scatter_tsv(indices, measured, predicted):
    rows = ["index\tmeasured\tpredicted\terror"]
    for i, m, p in zip(indices, measured, predicted):
        rows.append(f"{int(i)}\t{_serial.fmt(m)}\t{_serial.fmt(p)}\t{_serial.fmt(p - m)}")
    return "\n".join(rows) + "\n"


def _errors_tsv(errors, report):
    edges = np.histogram_bin_edges(errors, bins="auto")
    counts, _ = np.histogram(errors, bins=edges)
    width = np.diff(edges)
    density = counts / (counts.sum() * width)
    centers = (edges[:-1] + edges[1:]) / 2
    pdf = report.gaussian.pdf(centers)
    rows = [
        f"# gaussian mu {_serial.fmt(report.mu)}",
        f"# gaussian sigma {_serial.fmt(report.sigma)}",
        "bin_left\tbin_right\tcount\tdensity\tgaussian_density",
    ]
    for lo, hi, c, d, g in zip(edges[:-1], edges[1:], counts, density, pdf):
        rows.append("\t".join([_serial.fmt(lo), _serial.fmt(hi), str(int(c)), _serial.fmt(d), _serial.fmt(g)]))
    return "\n".join(rows) + "\n"


def _prepare(cfg):
    ds = load_dataset(cfg)
    plan = split_train_test(ds, cfg.ratio, derive_seed(cfg.seed, 0))
    os.makedirs(cfg.out, exist_ok=True)
    _write(cfg.out, "resolved_config.txt", cfg.to_text())
    return ds, plan


def run_evaluation(cfg, ds, plan, workers=1):
    """Fit every selected model on the training split and write its report files."""
    X, y = ds.X, ds.y
    tr, te = np.array(plan.train_indices), np.array(plan.test_indices)
    reports = {}
    for name in cfg.models():
        est = build_estimator(name, cfg, derive_seed(cfg.seed, 2))
        if name == "rf":
            est.set_params(n_jobs=workers)
        logger.info("fitting %s on %d rows", name, len(tr))
        est.fit(X[tr], y[tr])
        pred = est.predict(X[te])
        report = evaluate(pred, y[te])
        train_mse = float(np.mean((est.predict(X[tr]) - y[tr]) ** 2))
        extra = {
            "model": name,
            "split_hash": plan.digest,
            "n_train": str(len(tr)),
            "train_mse": _serial.fmt(train_mse),
            "source": ds.source_id.replace(" ", ""),
        }
        _write(cfg.out, f"report_{name}.txt", report.to_text(extra))
        _write(cfg.out, f"scatter_{name}.tsv", _scatter_tsv(te, y[te], pred))
        _write(cfg.out, f"errors_{name}.tsv", _errors_tsv(error_distribution(pred, y[te]), report))
        _write(cfg.out, f"model_{name}.txt", est.to_text())
        reports[name] = report
    return reports


def cmd_synth(cfg, workers=1):
    if not cfg.synth_n:
        raise UsageError("synth needs --n <rows> (or --synth n=<rows>)")
    ds = generate(SynthConfig(n=cfg.synth_n, seed=cfg.synth_seed, noise_std=cfg.synth_noise_std))
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "synth.csv")
    write_csv(ds, path)
    _write(cfg.out, "resolved_config.txt", cfg.to_text())
    logger.info("wrote %d rows to %s", len(ds), path)
    return path


def cmd_evaluate(cfg, workers=1):
    ds, plan = _prepare(cfg)
    return run_evaluation(cfg, ds, plan, workers)


def cmd_learning_curve(cfg, workers=1):
    ds, plan = _prepare(cfg)
    reports = run_evaluation(cfg, ds, plan, workers)
    folds = kfold(plan, cfg.k, derive_seed(cfg.seed, 1))
    summary = ["model\tr2\tci90\tci95\tplateau_size\tfinal_val_mse\tn_train"]
    curves = {}
    for name in cfg.models():
        est = build_estimator(name, cfg, 0)
        logger.info("learning curve for %s", name)
        curve = learning_curve(
            est, ds.X, ds.y, folds, cfg.increment, derive_seed(cfg.seed, 3), label=name, n_jobs=workers
        )
        _write(cfg.out, f"curve_{name}.tsv", curve.to_tsv())
        rep = reports[name]
        summary.append(
            "\t".join(
                [
                    name,
                    _serial.fmt(rep.r2),
                    _serial.fmt(rep.ci90),
                    _serial.fmt(rep.ci95),
                    str(min_data_to_plateau(curve)),
                    _serial.fmt(curve.points[-1].val_mse_mean),
                    str(len(plan.train_indices)),
                ]
            )
        )
        curves[name] = curve
    _write(cfg.out, "summary.tsv", "\n".join(summary) + "\n")
    return curves


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--workers", type=int, default=1, help="parallel workers; outputs do not depend on it")
    p.add_argument("-v", "--verbose", action="store_true")


def make_parser():
    parser = _Parser(prog="strengthcurve", description="Train, evaluate and profile concrete-strength regressors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    _common(s)
    s.add_argument("--n", dest="synth_n", type=int, help="number of rows")
    s.add_argument("--noise-std", dest="synth_noise_std", type=float, help="noise std in MPa (default 2)")
    s.add_argument("--synth", nargs="+", metavar="KEY=VALUE", help="n=.. seed=.. noise_std=..")

    for name, helptext in (
        ("evaluate", "train on the training split and report test accuracy"),
        ("learning-curve", "learning curves, plateau sizes and an accuracy summary"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        src = p.add_argument_group("data")
        src.add_argument("--data", help="CSV file with the standard columns")
        src.add_argument("--synth", nargs="+", metavar="KEY=VALUE", help="synthetic data: n=.. seed=.. noise_std=..")
        src.add_argument("--percent-fractions", action="store_const", const=True, default=None)
        src.add_argument("--lenient", action="store_const", const=True, default=None,
                         help="skip invalid rows instead of failing")
        p.add_argument("--model", choices=MODELS + ("all",))
        p.add_argument("--ratio", type=float, help="training fraction (default 0.7)")
        p.add_argument("--k", type=int, help="cross-validation folds (default 5)")
        p.add_argument("--increment", type=float, help="learning-curve step (default 0.10)")
        h = p.add_argument_group("hyperparameters")
        h.add_argument("--degree", type=int)
        h.add_argument("--ridge", type=float)
        h.add_argument("--hidden", type=int)
        h.add_argument("--learning-rate", type=float)
        h.add_argument("--epochs", type=int)
        h.add_argument("--batch-size", type=int, help="0 for full batch")
        h.add_argument("--trees", type=int)
        h.add_argument("--max-depth", type=int, help="-1 for unlimited")
        h.add_argument("--min-leaf", type=int)
        h.add_argument("--max-features", type=int, help="0 for all")
        h.add_argument("--no-bootstrap", dest="bootstrap", action="store_const", const=False, default=None)
    return parser


COMMANDS = {"synth": cmd_synth, "evaluate": cmd_evaluate, "learning-curve": cmd_learning_curve}


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        COMMANDS[args.command](cfg, workers=args.workers)
    except UsageError as exc:
        print(f"strengthcurve: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, FileNotFoundError) as exc:
        print(f"strengthcurve: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergedError, np.linalg.LinAlgError) as exc:
        print(f"strengthcurve: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LearningCurveError as exc:
        numeric = isinstance(exc.__cause__, (TrainingDivergedError, np.linalg.LinAlgError))
        print(f"strengthcurve: {'numeric failure' if numeric else 'error'}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if numeric else EXIT_DATA
    except ValueError as exc:
        print(f"strengthcurve: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
