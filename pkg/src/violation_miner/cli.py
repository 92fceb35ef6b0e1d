"""Batch command-line driver: stats, train, analyze, report.

Configuration is a flat file of dotted keys ("train.dimension = 100", '#'
comments allowed); every key is also exposed as a command-line flag of the
same name, which overrides the file. Relative paths in a config file resolve
against the file's directory. All randomness flows from the single
configured seed.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DataError, InternalError
from .preprocess import (
    ASCII_PUNCTUATION,
    PreprocessConfig,
    default_lemma_lexicon,
    default_stopwords,
    load_lemma_lexicon,
    load_stopwords,
    preprocess,
)
from .records import (
    ColumnMap,
    ViolationType,
    compute_stats,
    filter_records,
    parse_report,
    stats_to_delimited,
    stats_to_json,
)
from .relations import build_chains, chains_to_delimited, render_report
from .similarity import annotations_to_delimited, matrix_to_delimited, pairwise_matrix
from .trainer import Objective, TrainingConfig, load_model, save_model, train
from .vocab import (
    KeywordCategory,
    build_vocabulary,
    dump_vocabulary,
    load_keyword_catalog,
    load_vocabulary_dump,
)

log = logging.getLogger(__name__)

_PATH_KEYS = {
    "input.report",
    "preprocess.stopwords",
    "preprocess.lexicon",
    "catalog.path",
    "model.path",
    "model.vocab",
    "output.dir",
}
_MAGIC_PATH_VALUES = {"", "default"}


@dataclass(frozen=True)
class _Key:
    default: str
    help: str


KEYS: dict[str, _Key] = {
    "input.report": _Key("", "path to the delimited compliance-report export"),
    "input.delimiter": _Key(",", "field delimiter: ',' or 'tab'"),
    "input.date_format": _Key("%Y-%m-%d", "strptime format for inspection dates"),
    "columns.record_id": _Key("record_id", "source column holding the record id"),
    "columns.date": _Key("inspection_date", "source column holding the inspection date"),
    "columns.type": _Key("violation_type", "source column holding the violation type"),
    "columns.code": _Key("violation_code", "source column holding the violation code"),
    "columns.description": _Key("violation_description", "source column holding the violation description"),
    "columns.comment": _Key("inspection_comment", "source column holding the inspection comment"),
    "alias.none": _Key("None", "pipe-separated source strings meaning 'no violation'"),
    "alias.administrative": _Key("Administrative", "pipe-separated source strings for administrative violations"),
    "alias.environmental_health_safety": _Key(
        "Environmental Health & Safety|Environmental Health and Safety|EHS",
        "pipe-separated source strings for environmental health & safety violations",
    ),
    "filter.type": _Key("EnvironmentalHealthSafety", "violation type whose comments form the corpus"),
    "filter.require_comment": _Key("true", "keep only records with a non-empty comment"),
    "stats.top_codes": _Key("5", "how many top violation descriptions the stats report lists"),
    "preprocess.stopwords": _Key("default", "stopword list path, or 'default' for the bundled list"),
    "preprocess.lexicon": _Key("default", "lemma exception lexicon path, or 'default'"),
    "preprocess.strip_chars": _Key("ascii", "characters deleted during tokenization; 'ascii' = ASCII punctuation"),
    "preprocess.remove_stopwords": _Key("true", "toggle the stopword-removal stage"),
    "preprocess.lemmatize": _Key("true", "toggle the lemmatization stage"),
    "preprocess.stem": _Key("true", "toggle the stemming stage"),
    "preprocess.lemmatize_before_stem": _Key("true", "lemmatize before stemming (false reverses)"),
    "preprocess.drop_numeric": _Key("false", "drop all-digit tokens"),
    "vocab.min_count": _Key("1", "exclude tokens seen fewer times than this"),
    "train.dimension": _Key("100", "embedding dimension"),
    "train.window": _Key("5", "maximum context window width"),
    "train.epochs": _Key("5", "training epochs"),
    "train.initial_lr": _Key("0.025", "initial learning rate"),
    "train.final_lr": _Key("", "final learning rate (empty: 1e-4 * initial)"),
    "train.objective": _Key("negative_sampling", "'negative_sampling' or 'softmax'"),
    "train.negatives": _Key("5", "noise samples per pair (negative sampling)"),
    "train.subsample": _Key("0", "frequent-word subsampling threshold, 0 disables"),
    "train.seed": _Key("1", "seed for every random draw"),
    "train.dynamic_window": _Key("true", "draw the window width uniformly from 1..window"),
    "train.shuffle": _Key("false", "shuffle stream order between epochs"),
    "model.path": _Key("", "model file (default: <output.dir>/model.txt)"),
    "model.vocab": _Key("", "vocabulary dump beside the model (default: <output.dir>/vocab.tsv)"),
    "catalog.path": _Key("default", "keyword catalog path, or 'default' for the bundled catalog"),
    "catalog.threshold": _Key("30", "keyword kept only if corpus frequency is strictly above this"),
    "similarity.average_output": _Key("false", "average input and output weights for similarities"),
    "chains.k": _Key("3", "entries kept per chain list"),
    "chains.global_quartile": _Key("false", "quartile over the whole matrix instead of per row"),
    "output.dir": _Key("out", "directory for emitted artifacts"),
}

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


class PipelineConfig:
    """Typed view over the resolved dotted-key table."""

    def __init__(self, values: dict[str, str]):
        self.values = values

    def get(self, key: str) -> str:
        return self.values[key]

    def get_int(self, key: str) -> int:
        try:
            return int(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {self.values[key]!r}") from None

    def get_float(self, key: str) -> float:
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {self.values[key]!r}") from None

    def get_bool(self, key: str) -> bool:
        value = self.values[key].strip().lower()
        if value in _TRUE:
            return True
        if value in _FALSE:
            return False
        raise ConfigError(f"{key}: expected true/false, got {self.values[key]!r}")

    # ---- assembled sub-configurations -------------------------------------

    def delimiter(self) -> str:
        value = self.get("input.delimiter")
        if value.lower() in ("tab", "\\t"):
            return "\t"
        if len(value) != 1:
            raise ConfigError(f"input.delimiter: expected one character or 'tab', got {value!r}")
        return value

    def column_map(self) -> ColumnMap:
        aliases: dict[str, ViolationType] = {}
        for key, vtype in (
            ("alias.none", ViolationType.NONE),
            ("alias.administrative", ViolationType.ADMINISTRATIVE),
            ("alias.environmental_health_safety", ViolationType.ENVIRONMENTAL_HEALTH_SAFETY),
        ):
            for source_string in self.get(key).split("|"):
                if source_string:
                    aliases[source_string] = vtype
        return ColumnMap(
            record_id=self.get("columns.record_id"),
            inspection_date=self.get("columns.date"),
            violation_type=self.get("columns.type"),
            violation_code=self.get("columns.code"),
            violation_description=self.get("columns.description"),
            inspection_comment=self.get("columns.comment"),
            type_aliases=aliases,
        )

    def filter_type(self) -> ViolationType:
        value = self.get("filter.type").strip().lower().replace(" ", "").replace("&", "").replace("_", "")
        table = {
            "none": ViolationType.NONE,
            "administrative": ViolationType.ADMINISTRATIVE,
            "environmentalhealthsafety": ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
            "environmentalhealthandsafety": ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
            "ehs": ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
        }
        if value not in table:
            raise ConfigError(f"filter.type: unknown violation type {self.get('filter.type')!r}")
        return table[value]

    def preprocess_config(self) -> PreprocessConfig:
        stopwords_src = self.get("preprocess.stopwords")
        lexicon_src = self.get("preprocess.lexicon")
        strip_chars = self.get("preprocess.strip_chars")
        return PreprocessConfig(
            stopwords=default_stopwords() if stopwords_src == "default" else load_stopwords(stopwords_src),
            lemma_lexicon=default_lemma_lexicon() if lexicon_src == "default" else load_lemma_lexicon(lexicon_src),
            strip_chars=ASCII_PUNCTUATION if strip_chars == "ascii" else strip_chars,
            remove_stopwords=self.get_bool("preprocess.remove_stopwords"),
            lemmatize=self.get_bool("preprocess.lemmatize"),
            stem=self.get_bool("preprocess.stem"),
            lemmatize_before_stem=self.get_bool("preprocess.lemmatize_before_stem"),
            drop_numeric=self.get_bool("preprocess.drop_numeric"),
        )

    def training_config(self) -> TrainingConfig:
        objective_text = self.get("train.objective").strip().lower()
        try:
            objective = Objective(objective_text)
        except ValueError:
            raise ConfigError(
                f"train.objective: expected 'negative_sampling' or 'softmax', got {objective_text!r}"
            ) from None
        final_lr_text = self.get("train.final_lr")
        return TrainingConfig(
            dimension=self.get_int("train.dimension"),
            window=self.get_int("train.window"),
            epochs=self.get_int("train.epochs"),
            initial_lr=self.get_float("train.initial_lr"),
            final_lr=float(final_lr_text) if final_lr_text else None,
            objective=objective,
            negatives=self.get_int("train.negatives"),
            subsample=self.get_float("train.subsample"),
            seed=self.get_int("train.seed"),
            dynamic_window=self.get_bool("train.dynamic_window"),
            shuffle_streams=self.get_bool("train.shuffle"),
        )

    def out_dir(self) -> Path:
        return Path(self.get("output.dir"))

    def model_path(self) -> Path:
        value = self.get("model.path")
        return Path(value) if value else self.out_dir() / "model.txt"

    def model_vocab_path(self) -> Path:
        value = self.get("model.vocab")
        return Path(value) if value else self.out_dir() / "vocab.tsv"

    def require_file(self, key: str, path: Path | None = None) -> Path:
        value = self.get(key)
        if path is None:
            if not value:
                raise ConfigError(f"{key} is required for this command")
            path = Path(value)
        if not path.is_file():
            raise ConfigError(f"{key}: no such file: {path}")
        return path


def parse_config_line(raw: str, origin: str, lineno: int) -> tuple[str, str] | None:
    line = raw.strip()
    if not line or line.startswith("#"):
        return None
    if "=" not in line:
        raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
    key, _, value = line.partition("=")
    key = key.strip()
    if key not in KEYS:
        raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
    return key, value.strip()


def _resolve_path_value(key: str, value: str, base: Path) -> str:
    if key not in _PATH_KEYS or value in _MAGIC_PATH_VALUES:
        return value
    path = Path(value)
    return value if path.is_absolute() else str(base / path)


def load_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    base = path.resolve().parent
    for lineno, raw in enumerate(path.read_text("utf-8").splitlines(), 1):
        parsed = parse_config_line(raw, str(path), lineno)
        if parsed is not None:
            key, value = parsed
            values[key] = _resolve_path_value(key, value, base)
    return values


def resolve_config(ns: argparse.Namespace) -> PipelineConfig:
    values = {key: spec.default for key, spec in KEYS.items()}
    if ns.config is not None:
        config_path = Path(ns.config)
        if not config_path.is_file():
            raise ConfigError(f"--config: no such file: {config_path}")
        values.update(load_config_file(config_path))
    flags = vars(ns)
    for key in KEYS:
        flag_value = flags.get(key)
        if flag_value is not None:
            values[key] = _resolve_path_value(key, flag_value, Path.cwd())
    if ns.seed is not None:
        values["train.seed"] = str(ns.seed)
    if ns.out is not None:
        values["output.dir"] = ns.out
    return PipelineConfig(values)


# ---- commands --------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _parse_input_report(config: PipelineConfig):
    report_path = config.require_file("input.report")
    parsed = parse_report(
        report_path,
        config.column_map(),
        delimiter=config.delimiter(),
        date_format=config.get("input.date_format"),
    )
    for error in parsed.errors:
        log.warning("%s row %d: %s", report_path, error.row_number, error.message)
    return parsed


def cmd_stats(config: PipelineConfig) -> int:
    """Parse the report and write the violation statistics artifacts."""
    config.require_file("input.report")
    out = config.out_dir()
    parsed = _parse_input_report(config)
    stats = compute_stats(parsed.records, top_n=config.get_int("stats.top_codes"))
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "stats.csv", stats_to_delimited(stats))
    _write(out / "stats.json", stats_to_json(stats))
    if parsed.errors:
        rows = io.StringIO()
        writer = csv.writer(rows, lineterminator="\n")
        writer.writerow(["row_number", "message"])
        writer.writerows((e.row_number, e.message) for e in parsed.errors)
        _write(out / "row_errors.csv", rows.getvalue())
    counts = ", ".join(f"{t.value}={c}" for t, c in stats.count_by_type.items())
    print(f"stats: {stats.total_records} records ({counts}); selected={stats.selected_records}")
    return 0


def cmd_train(config: PipelineConfig) -> int:
    """Build the filtered comment corpus, train embeddings, save the model."""
    config.require_file("input.report")
    training_config = config.training_config()
    preprocess_config = config.preprocess_config()
    violation_type = config.filter_type()
    require_comment = config.get_bool("filter.require_comment")
    min_count = config.get_int("vocab.min_count")
    out = config.out_dir()

    parsed = _parse_input_report(config)
    selected = filter_records(parsed.records, violation_type, require_comment)
    streams = [
        preprocess(r.inspection_comment, preprocess_config, source_id=r.record_id) for r in selected
    ]
    vocab = build_vocabulary(streams, min_count=min_count)
    model = train(streams, vocab, training_config)

    out.mkdir(parents=True, exist_ok=True)
    config.model_path().parent.mkdir(parents=True, exist_ok=True)
    config.model_vocab_path().parent.mkdir(parents=True, exist_ok=True)
    save_model(model, config.model_path())
    dump_vocabulary(vocab, config.model_vocab_path())
    print(
        f"train: {len(selected)} comments, vocabulary {len(vocab)}, "
        f"dimension {training_config.dimension}, model at {config.model_path()}"
    )
    return 0


def _default_catalog_source(config: PipelineConfig):
    value = config.get("catalog.path")
    if value == "default":
        return None
    config.require_file("catalog.path")
    return value


def _run_analysis(config: PipelineConfig):
    model_path = config.require_file("model.path", config.model_path())
    vocab_path = config.require_file("model.vocab", config.model_vocab_path())
    catalog_source = _default_catalog_source(config)
    threshold = config.get_int("catalog.threshold")
    average_output = config.get_bool("similarity.average_output")
    k = config.get_int("chains.k")
    global_quartile = config.get_bool("chains.global_quartile")

    model = load_model(model_path, vocab=load_vocabulary_dump(vocab_path))
    loaded = load_keyword_catalog(catalog_source, model.vocab, threshold=threshold)
    for rejection in loaded.rejections:
        log.warning("keyword %r (%s): %s", rejection.keyword, rejection.category.value, rejection.reason)
    # the rejection report is written even when analysis cannot proceed
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "keyword_rejections.csv", _rejections_csv(loaded))
    catalog = loaded.catalog
    for category in KeywordCategory:
        if not catalog.categories.get(category):
            raise DataError(
                f"empty category {category.value!r}: no keyword passed the vocabulary/threshold filters"
            )

    locations = catalog.keywords(KeywordCategory.LOCATION)
    contaminants = catalog.keywords(KeywordCategory.CONTAMINANT)
    operations = catalog.keywords(KeywordCategory.OPERATION)
    matrices = {
        "location_contaminant": pairwise_matrix(model, locations, contaminants, average_output),
        "location_operation": pairwise_matrix(model, locations, operations, average_output),
        "operation_contaminant": pairwise_matrix(model, operations, contaminants, average_output),
    }
    chains = build_chains(
        matrices["location_contaminant"],
        matrices["location_operation"],
        matrices["operation_contaminant"],
        k=k,
        global_quartile=global_quartile,
    )
    return model, loaded, matrices, chains


def _rejections_csv(loaded) -> str:
    rows = io.StringIO()
    writer = csv.writer(rows, lineterminator="\n")
    writer.writerow(["category", "keyword", "reason"])
    writer.writerows((r.category.value, r.keyword, r.reason) for r in loaded.rejections)
    return rows.getvalue()


def _write_analysis(config: PipelineConfig, loaded, matrices, chains) -> None:
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)

    freq_rows = io.StringIO()
    writer = csv.writer(freq_rows, lineterminator="\n")
    writer.writerow(["category", "keyword", "frequency"])
    for category in KeywordCategory:
        writer.writerows(
            (category.value, token, freq) for token, freq in loaded.catalog.categories[category]
        )
    _write(out / "keyword_frequencies.csv", freq_rows.getvalue())

    for name, matrix in matrices.items():
        _write(out / f"similarity_{name}.csv", matrix_to_delimited(matrix))
        _write(out / f"similarity_{name}_annotations.csv", annotations_to_delimited(matrix))

    _write(out / "chains.csv", chains_to_delimited(chains))


def cmd_analyze(config: PipelineConfig) -> int:
    """Keyword filtering, the three similarity matrices, and chain export."""
    _, loaded, matrices, chains = _run_analysis(config)
    _write_analysis(config, loaded, matrices, chains)
    kept = sum(len(v) for v in loaded.catalog.categories.values())
    print(
        f"analyze: {kept} keywords kept, {len(loaded.rejections)} rejected, "
        f"{len(chains)} chains written to {config.out_dir()}"
    )
    return 0


def cmd_report(config: PipelineConfig) -> int:
    """Analyze plus the rendered human-readable report."""
    # validate everything the command will need before any artifact is written
    include_stats = bool(config.get("input.report"))
    if include_stats:
        config.require_file("input.report")
    top_n = config.get_int("stats.top_codes")
    parameters = {
        "k": config.get_int("chains.k"),
        "quartile_scope": "global" if config.get_bool("chains.global_quartile") else "row",
        "threshold": config.get_int("catalog.threshold"),
        "seed": config.get_int("train.seed"),
    }
    _, loaded, matrices, chains = _run_analysis(config)
    stats = None
    if include_stats:
        parsed = _parse_input_report(config)
        stats = compute_stats(parsed.records, top_n=top_n)
    _write_analysis(config, loaded, matrices, chains)
    text = render_report(
        chains,
        stats=stats,
        matrices=[
            ("Location x Contaminant similarity", matrices["location_contaminant"]),
            ("Location x Operation similarity", matrices["location_operation"]),
            ("Operation x Contaminant similarity", matrices["operation_contaminant"]),
        ],
        catalog=loaded.catalog,
        parameters=parameters,
    )
    _write(config.out_dir() / "report.txt", text)
    print(f"report: written to {config.out_dir() / 'report.txt'}")
    return 0


# ---- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="violation-miner",
        description="Compliance-report text mining: statistics, skip-gram embeddings, "
        "keyword similarity matrices, and location/operation/contaminant chains.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    commands = {
        "stats": (cmd_stats, "violation statistics from a report export"),
        "train": (cmd_train, "preprocess comments and train the embedding model"),
        "analyze": (cmd_analyze, "similarity matrices and relation chains from a trained model"),
        "report": (cmd_report, "analyze plus the rendered plain-text report"),
    }
    for name, (func, help_text) in commands.items():
        sub = subparsers.add_parser(name, help=help_text, description=func.__doc__)
        sub.set_defaults(func=func)
        sub.add_argument("--config", help="config file of dotted keys (see the key list below)")
        sub.add_argument("--seed", type=int, help="override train.seed")
        sub.add_argument("--out", help="override output.dir")
        group = sub.add_argument_group("config keys (each overrides the config file)")
        for key, spec in KEYS.items():
            help_text = f"{spec.help} (default: {spec.default!r})".replace("%", "%%")
            group.add_argument(f"--{key}", dest=key, metavar="VALUE", help=help_text)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        config = resolve_config(ns)
        return ns.func(config)
    except ConfigError as error:
        print(f"config error: {error}", file=sys.stderr)
        return 1
    except DataError as error:
        print(f"data error: {error}", file=sys.stderr)
        return 2
    except InternalError as error:
        print(f"internal error: {error}", file=sys.stderr)
        return 3
    except Exception as error:  # noqa: BLE001 - last-resort mapping to exit code
        print(f"internal error: {error!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
