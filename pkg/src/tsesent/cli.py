"""Command-line pipeline: one subcommand per stage, artifacts in an output directory."""

from __future__ import annotations

import argparse
import csv
import graphlib
import hashlib
import json
import math
import sys
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from datetime import date, time
from pathlib import Path

from . import classifier, econometrics as ec, indicators, ingest, lexicon as lx, persian_text as pt
from .ingest import Label

PROVENANCE_VERSION = 1


class CliError(Exception):
    exit_code = 1
    kind = "error"

    def payload(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class ConfigError(CliError):
    exit_code = 2
    kind = "config"

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__(f"{len(self.problems)} configuration problem(s)")

    def payload(self) -> dict:
        return {**super().payload(), "problems": self.problems}


class DependencyError(CliError):
    exit_code = 3
    kind = "dependency"

    def __init__(self, stage: str, artifact: str, producer: str):
        self.stage, self.artifact, self.producer = stage, artifact, producer
        super().__init__(f"stage '{stage}' needs {artifact}; run '{producer}' first")

    def payload(self) -> dict:
        return {**super().payload(), "stage": self.stage, "missing": self.artifact, "run_first": self.producer}


# -- configuration ---------------------------------------------------------

def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_time(raw: str) -> time:
    return time.fromisoformat(raw.strip())


def _parse_window(raw: str) -> str:
    v = raw.strip()
    if v in ("train", "all"):
        return v
    lo, sep, hi = v.partition("..")
    if not sep:
        raise ValueError("expected 'train', 'all' or YYYY-MM-DD..YYYY-MM-DD")
    if date.fromisoformat(lo) > date.fromisoformat(hi):
        raise ValueError("window start is after its end")
    return v


def _choice(*options: str) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        v = raw.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {raw!r}")
        return v
    return parse


def _positive_int(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _df_threshold(raw: str) -> float:
    v = float(raw)
    if math.isnan(v) or v < 0:
        raise ValueError("must be a non-negative number")
    return v


def _unit_interval(raw: str) -> float:
    v = float(raw)
    if not 0.0 < v < 1.0:
        raise ValueError("must lie strictly between 0 and 1")
    return v


def _non_negative(raw: str) -> float:
    v = float(raw)
    if not v >= 0:
        raise ValueError("must be non-negative")
    return v


@dataclass(frozen=True)
class Option:
    parse: Callable[[str], object]
    default: str | None
    help: str
    is_path: bool = False


OPTIONS: dict[str, Option] = {
    "comments": Option(str, None, "comment file (CSV or JSONL)", True),
    "market": Option(str, None, "daily closes CSV (date, close)", True),
    "stemmer": Option(str, "", "stemming dictionary TSV; empty uses the bundled one", True),
    "stopwords": Option(str, "", "stopword list; empty uses the bundled one", True),
    "lexicon": Option(str, "", "prebuilt lexicon to use instead of building one", True),
    "model": Option(str, "", "pretrained classifier to use instead of training", True),
    "symbol": Option(str, "", "stock symbol; defaults to the comment file name"),
    "timezone": Option(str, ingest.DEFAULT_TZ, "zone for naive timestamps and the cutoff"),
    "cutoff": Option(_parse_time, "12:30", "comments at or after this local time count for the next day"),
    "df_threshold": Option(_df_threshold, "3", "terms need a document frequency above this"),
    "smoothing": Option(_non_negative, "0.5", "additive smoothing of the PMI table"),
    "algorithm": Option(_choice(*classifier.ALGORITHMS), "bagging", "classifier"),
    "bagging_size": Option(_positive_int, "25", "trees in the bagging ensemble"),
    "include_score": Option(_parse_bool, "true", "add the aggregate comment score feature"),
    "k_folds": Option(_positive_int, "10", "cross-validation folds"),
    "seed": Option(int, "0", "master random seed"),
    "trust_window": Option(_parse_window, "train", "days used for trust coefficients"),
    "missing_policy": Option(_choice(*indicators.FILL_POLICIES), "neutral", "fill for undefined indices"),
    "target": Option(_choice("return", "close"), "return", "series to forecast"),
    "max_lag": Option(_positive_int, "5", "largest lag considered"),
    "alpha": Option(_unit_interval, "0.05", "significance level"),
    "train_fraction": Option(_unit_interval, "0.9", "chronological share used for fitting"),
    "correction": Option(_choice("bonferroni", "none"), "bonferroni", "multiplicity control of the Granger screen"),
}
PATH_OPTIONS = tuple(k for k, o in OPTIONS.items() if o.is_path)
CANDIDATES = ("index1", "index2", "index3", "index4", "count", "count_with_likes")


@dataclass(frozen=True)
class PipelineConfig:
    values: Mapping[str, object]
    raw: Mapping[str, str]
    out: Path

    def __getitem__(self, key: str):
        return self.values[key]

    def path(self, key: str) -> Path | None:
        v = self.values[key]
        return Path(v) if v else None

    def digest(self) -> str:
        """Hash of every setting plus the bytes of every input file."""
        h = hashlib.sha256()
        for key in sorted(self.raw):
            if key in PATH_OPTIONS:
                p = self.path(key)
                value = _file_digest(p) if p is not None and p.is_file() else ""
            else:
                value = self.raw[key]
            h.update(f"{key}={value}\n".encode("utf-8"))
        return h.hexdigest()[:16]

    def provenance(self, stage: str) -> dict:
        return {"config_hash": self.digest(), "seed": self["seed"], "stage": stage, "version": PROVENANCE_VERSION}

    def stamp(self, stage: str) -> str:
        p = self.provenance(stage)
        return f"tsesent stage={stage} config_hash={p['config_hash']} seed={p['seed']}"


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_config_file(path: Path) -> tuple[dict[str, str], list[str]]:
    values, problems = {}, []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        return {}, [f"{path}: cannot read config ({exc.strerror})"]
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            problems.append(f"{path}:{i}: expected 'key = value'")
            continue
        if key in values:
            problems.append(f"{path}:{i}: '{key}' set twice")
        values[key] = value.strip()
    return values, problems


def resolve_config(config_path: str | None, overrides: Mapping[str, str], out: str | None) -> PipelineConfig:
    """Merge defaults, the config file and flag overrides; report every problem at once."""
    raw: dict[str, str] = {k: o.default for k, o in OPTIONS.items() if o.default is not None}
    problems: list[str] = []
    base = Path.cwd()
    if config_path:
        cfg = Path(config_path)
        base = cfg.resolve().parent
        file_values, problems = read_config_file(cfg)
        for k, v in file_values.items():
            if k == "out":
                if out is None:
                    out = str(base / v) if not Path(v).is_absolute() else v
                continue
            raw[k] = v
    for k, v in overrides.items():
        raw[k] = v
    for k in raw:
        if k not in OPTIONS:
            problems.append(f"unknown setting '{k}'")
    values: dict[str, object] = {}
    for k, opt in OPTIONS.items():
        if k not in raw:
            problems.append(f"'{k}' is required")
            continue
        try:
            values[k] = opt.parse(raw[k])
        except ValueError as exc:
            problems.append(f"'{k}': {exc}")
            continue
        if opt.is_path and values[k]:
            p = Path(values[k])
            values[k] = str(p if p.is_absolute() else base / p)
    if problems:
        raise ConfigError(problems)
    raw = {k: raw[k] for k in OPTIONS}
    return PipelineConfig(values, raw, Path(out) if out is not None else Path("tsesent-out"))


def check_inputs(cfg: PipelineConfig, keys: Sequence[str]) -> None:
    problems = []
    for k in keys:
        p = cfg.path(k)
        if p is None:
            if OPTIONS[k].default != "":
                problems.append(f"'{k}' is required for this stage")
        elif not p.is_file():
            problems.append(f"'{k}': no such file {p}")
    if problems:
        raise ConfigError(problems)


# -- artifacts -------------------------------------------------------------

def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=1, allow_nan=False) + "\n",
                    encoding="utf-8")


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def _csv_rows(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence], stamp: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {stamp}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _text_pipeline(cfg: PipelineConfig) -> pt.TextPipeline:
    stemmer = pt.DictionaryStemmer.from_file(cfg.path("stemmer")) if cfg["stemmer"] else pt.DictionaryStemmer.default()
    stop = pt.load_stopwords(cfg.path("stopwords")) if cfg["stopwords"] else pt.load_stopwords()
    return pt.TextPipeline(stemmer, stop)


class Workspace:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = cfg.out

    def path(self, name: str) -> Path:
        return self.out / name

    def require(self, stage: str) -> None:
        for dep in STAGES[stage].deps:
            for artifact in STAGES[dep].outputs:
                if not self.path(artifact).is_file():
                    raise DependencyError(stage, artifact, dep)

    def corpus(self) -> ingest.CommentCorpus:
        symbol = self.cfg["symbol"] or Path(self.cfg["comments"]).stem
        return ingest.load_comments(self.path("comments.csv"), stock_symbol=symbol)

    def bars(self) -> list[ingest.MarketBar]:
        return ingest.load_market(self.path("market.csv"))

    def buckets(self) -> ingest.DailyBuckets:
        return ingest.bucket_by_trading_day(self.corpus(), self.bars(), self.cfg["cutoff"], self.cfg["timezone"])

    def tokens(self) -> dict[str, list[pt.Token]]:
        out = {}
        with open(self.path("tokens.jsonl"), encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#") or not line.strip():
                    continue
                rec = json.loads(line)
                out[rec["id"]] = [pt.Token(s, st, bool(neg)) for s, st, neg in rec["tokens"]]
        return out

    def labels(self) -> tuple[dict[str, Label], dict[str, float]]:
        labels, scores = {}, {}
        for rec in _csv_rows(self.path("labels.csv")):
            labels[rec["id"]] = Label.parse(rec["label"])
            scores[rec["id"]] = float(rec["score"])
        return labels, scores


# -- stages ----------------------------------------------------------------

def stage_ingest(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    check_inputs(cfg, ("comments", "market"))
    symbol = cfg["symbol"] or Path(cfg["comments"]).stem
    corpus = ingest.load_comments(cfg["comments"], stock_symbol=symbol, tz=cfg["timezone"])
    bars = ingest.load_market(cfg["market"])
    buckets = ingest.bucket_by_trading_day(corpus, bars, cfg["cutoff"], cfg["timezone"])
    stamp = cfg.stamp("ingest")
    ingest.write_comments(corpus, ws.path("comments.csv"), stamp)
    ingest.write_market(bars, ws.path("market.csv"), stamp)
    days = buckets.day_of()
    _write_csv(ws.path("days.csv"), ("id", "date"), [(c.id, days[c.id].isoformat()) for c in corpus], stamp)
    counts = corpus.label_counts()
    return [f"{len(corpus)} comments ({counts[Label.BULLISH]} bullish, {counts[Label.BEARISH]} bearish) "
            f"over {len(bars)} trading days"]


def stage_preprocess(ws: Workspace) -> list[str]:
    check_inputs(ws.cfg, ("stemmer", "stopwords"))
    pipe = _text_pipeline(ws.cfg)
    corpus = ws.corpus()
    with open(ws.path("tokens.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(f"# {ws.cfg.stamp('preprocess')}\n")
        for c in corpus:
            toks = [[t.surface, t.stem, int(t.is_negative_verb)] for t in pipe.tokens(c.text)]
            fh.write(json.dumps({"id": c.id, "tokens": toks}, ensure_ascii=False) + "\n")
    return [f"tokenized {len(corpus)} comments"]


def stage_build_lexicon(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    check_inputs(cfg, ("lexicon", "stemmer"))
    if cfg["lexicon"]:
        lex = lx.load_lexicon(cfg["lexicon"])
    else:
        tokens = ws.tokens()
        stemmer = _text_pipeline(cfg).stemmer
        docs = [(tokens[c.id], c.label) for c in ws.corpus() if c.is_labeled]
        lex = lx.build_lexicon(docs, cfg["df_threshold"], cfg["smoothing"], stemmer)
    lx.save_lexicon(lex, ws.path("lexicon.jsonl"), {"provenance": cfg.provenance("build-lexicon")})
    return [f"lexicon of {len(lex)} terms"]


def _vectors(ws: Workspace, lex: lx.SentimentLexicon, include_score: bool, labeled_only: bool):
    tokens = ws.tokens()
    stemmer = _text_pipeline(ws.cfg).stemmer
    out = []
    for c in ws.corpus():
        if labeled_only and not c.is_labeled:
            continue
        v = classifier.featurize(tokens[c.id], lex, include_score, stemmer=stemmer,
                                 label=c.label if c.is_labeled else None)
        out.append((c, v))
    return out


def _learner_params(cfg: PipelineConfig) -> dict:
    return {"n_estimators": cfg["bagging_size"]} if cfg["algorithm"] == "bagging" else {}


def stage_train(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    check_inputs(cfg, ("model",))
    lex = lx.load_lexicon(ws.path("lexicon.jsonl"))
    pairs = _vectors(ws, lex, cfg["include_score"], labeled_only=True)
    vectors = [v for _, v in pairs]
    schema = classifier.FeatureSchema.from_lexicon(lex, cfg["include_score"])
    params = _learner_params(cfg)
    if cfg["model"]:
        model = classifier.load_model(cfg["model"])
        metrics = None
    else:
        metrics = classifier.cross_validate(vectors, cfg["algorithm"], cfg["k_folds"], cfg["seed"],
                                            schema=schema, **params)
        model = classifier.train(vectors, cfg["algorithm"], cfg["seed"], schema=schema, **params)
    prov = {"provenance": cfg.provenance("train")}
    classifier.save_model(model, ws.path("model.json"), prov)
    doc = {**prov, "algorithm": model.algorithm, "n_labeled": len(vectors), "k_folds": cfg["k_folds"],
           "cross_validation": metrics.to_dict() if metrics else None}
    _write_json(ws.path("cv_metrics.json"), doc)
    if metrics is None:
        return ["loaded pretrained classifier"]
    return [f"{cfg['k_folds']}-fold accuracy {metrics.accuracy:.4f}, macro F {metrics.f_measure:.4f}"]


def stage_classify(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    lex = lx.load_lexicon(ws.path("lexicon.jsonl"))
    model = classifier.load_model(ws.path("model.json"))
    pairs = _vectors(ws, lex, model.schema.include_score, labeled_only=False)
    todo = [v for c, v in pairs if not c.is_labeled]
    predicted = iter(classifier.predict_many(model, todo))
    rows = []
    for c, v in pairs:
        # index3/index4 need the score even when the classifier was trained without it
        score = v.comment_score if v.comment_score is not None else (
            sum(v.term_features.values()) / v.n_tokens if v.n_tokens else 0.0)
        if c.is_labeled:
            rows.append((c.id, c.label.value, "given", _num(float(score))))
        else:
            rows.append((c.id, next(predicted).value, "predicted", _num(float(score))))
    _write_csv(ws.path("labels.csv"), ("id", "label", "source", "score"), rows, cfg.stamp("classify"))
    return [f"labeled {len(todo)} comments with the classifier, kept {len(rows) - len(todo)} given labels"]


def _trust_window(cfg: PipelineConfig, calendar: Sequence[date]) -> tuple[date, date]:
    w = cfg["trust_window"]
    if w == "all":
        return calendar[0], calendar[-1]
    if w == "train":
        n = ec.split_index(len(calendar), cfg["train_fraction"])
        return calendar[0], calendar[max(n - 1, 0)]
    lo, _, hi = w.partition("..")
    return date.fromisoformat(lo), date.fromisoformat(hi)


def stage_trust(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    buckets = ws.buckets()
    labels, _ = ws.labels()
    window = _trust_window(cfg, buckets.calendar)
    table = indicators.compute_trust(buckets, ws.bars(), window, labels=labels)
    indicators.write_trust(table, ws.path("trust.csv"), cfg.stamp("trust"))
    return [f"{len(table.coefficients)} users above the average activity get their own coefficient"]


def stage_indices(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    buckets = ws.buckets()
    labels, scores = ws.labels()
    table = indicators.read_trust(ws.path("trust.csv"))
    rows = indicators.compute_daily_indices(buckets, labels, scores, table, cfg["missing_policy"])
    indicators.write_indicators(rows, ws.path("indicators.csv"), cfg.stamp("indices"))
    return [f"{len(rows)} daily rows, {sum(r.missing_flag for r in rows)} with filled or missing indices"]


def _series(ws: Workspace) -> tuple[ec.Series, list[ec.Series]]:
    cfg = ws.cfg
    bars = ws.bars()
    close = ec.Series("close", tuple(b.date for b in bars), [b.close for b in bars])
    target = ec.daily_return(close) if cfg["target"] == "return" else close
    rows = indicators.read_indicators(ws.path("indicators.csv"))
    dates = tuple(r.date for r in rows)
    cands = []
    for name in CANDIDATES:
        values = [r.value(name) for r in rows]
        if any(v is None for v in values):
            raise CliError(f"{name} has missing days; choose a fill policy other than leave-missing to model it")
        cands.append(ec.Series(name, dates, values))
    aligned = ec.align(target, *cands)
    return aligned[0], aligned[1:]


def stage_analyze(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    target, cands = _series(ws)
    n_train = ec.split_index(len(target), cfg["train_fraction"])
    head = target.head(n_train)
    b = ec.band(n_train)
    stamp = cfg.stamp("analyze")
    acf_rows = []
    for s in [head] + [c.head(n_train) for c in cands]:
        try:
            for r in ec.acf(s, cfg["max_lag"]):
                acf_rows.append((s.name, r.lag, _num(r.r), _num(-b), _num(b), int(r.significant)))
        except ec.DegenerateError:
            acf_rows.append((s.name, "", "", _num(-b), _num(b), 0))
    _write_csv(ws.path("acf.csv"), ("series", "lag", "r", "lower", "upper", "significant"), acf_rows, stamp)
    ccf_rows = []
    for c in cands:
        try:
            for r in ec.ccf(c.head(n_train), head, cfg["max_lag"]):
                ccf_rows.append((c.name, r.lag, _num(r.r), _num(-b), _num(b), int(r.significant)))
        except ec.DegenerateError:
            ccf_rows.append((c.name, "", "", _num(-b), _num(b), 0))
    _write_csv(ws.path("ccf.csv"), ("candidate", "lag", "r", "lower", "upper", "significant"), ccf_rows, stamp)
    screens = ec.screen_candidates(head, [c.head(n_train) for c in cands], cfg["max_lag"], cfg["alpha"],
                                   cfg["correction"])
    g_rows = [(s.name, " ".join(str(k) for k in s.lead_lags), _num(s.strength), _num(s.granger_p), int(s.causal))
              for s in screens]
    _write_csv(ws.path("granger.csv"), ("candidate", "lead_lags", "strength", "p_value", "causal"), g_rows, stamp)
    causal = [s.name for s in screens if s.causal]
    return [f"Granger-causal candidates: {', '.join(causal) if causal else 'none'}"]


def stage_fit(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    target, cands = _series(ws)
    n_train = ec.split_index(len(target), cfg["train_fraction"])
    head = target.head(n_train)
    m0 = ec.fit_m0(head, cfg["max_lag"], cfg["alpha"])
    m1 = ec.build_m1(m0, head, [c.head(n_train) for c in cands], cfg["max_lag"], cfg["alpha"], cfg["correction"])
    doc = {"provenance": cfg.provenance("fit"), "target": target.name, "n_train": n_train,
           "m0": m0.to_dict(), "m1": m1.to_dict()}
    _write_json(ws.path("models.json"), doc)
    return [f"M0: {m0.describe()}", f"M1: {m1.describe()}"]


def stage_evaluate(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    target, cands = _series(ws)
    doc = _read_json(ws.path("models.json"))
    m0 = ec.RegressionModel.from_dict(doc["m0"])
    m1 = ec.RegressionModel.from_dict(doc["m1"])
    r0 = ec.evaluate(m0, target, cands, cfg["train_fraction"])
    r1 = ec.evaluate(m1, target, cands, cfg["train_fraction"])
    _write_json(ws.path("evaluation.json"), {"provenance": cfg.provenance("evaluate"), "target": target.name,
                                             "m0": r0.to_dict(), "m1": r1.to_dict()})
    rows = [(d.isoformat(), _num(a), _num(p0), _num(p1))
            for d, a, p0, p1 in zip(r0.dates, r0.actual, r0.predicted, r1.predicted)]
    _write_csv(ws.path("predictions.csv"), ("date", "actual", "m0", "m1"), rows, cfg.stamp("evaluate"))
    return [f"M0 MAPE {r0.mape:.3f}% DA {r0.direction_accuracy:.3f}",
            f"M1 MAPE {r1.mape:.3f}% DA {r1.direction_accuracy:.3f}"]


def stage_report(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    models = _read_json(ws.path("models.json"))
    ev = _read_json(ws.path("evaluation.json"))
    screen = _csv_rows(ws.path("granger.csv"))
    rows, table = [], []
    for key, label in (("m0", "M0"), ("m1", "M1")):
        m = ec.RegressionModel.from_dict(models[key])
        r = ev[key]
        rows.append((label, ev["target"], _num(r["mape"]), _num(r["direction_accuracy"]), r["n_test"],
                     m.describe(), " ".join(m.flags)))
        table.append({"model": label, "equation": m.describe(), "mape": r["mape"],
                      "direction_accuracy": r["direction_accuracy"], "n_test": r["n_test"],
                      "residuals_white": m.residuals_white, "flags": list(m.flags), "notes": list(m.notes)})
    _write_csv(ws.path("report.csv"), ("model", "target", "mape", "direction_accuracy", "n_test", "equation", "flags"),
               rows, cfg.stamp("report"))
    _write_json(ws.path("report.json"), {
        "provenance": cfg.provenance("report"),
        "target": ev["target"],
        "models": table,
        "granger_screen": screen,
        "m1_beats_m0_on_mape": ev["m1"]["mape"] < ev["m0"]["mape"],
    })
    return [f"{t['model']}: MAPE {t['mape']:.3f}%  DA {t['direction_accuracy']:.3f}  {t['equation']}" for t in table]


@dataclass(frozen=True)
class Stage:
    run: Callable[[Workspace], list[str]]
    deps: tuple[str, ...]
    outputs: tuple[str, ...]
    help: str


STAGES: dict[str, Stage] = {
    "ingest": Stage(stage_ingest, (), ("comments.csv", "market.csv", "days.csv"),
                    "validate inputs and align comments to trading days"),
    "preprocess": Stage(stage_preprocess, ("ingest",), ("tokens.jsonl",), "normalize, tokenize and stem"),
    "build-lexicon": Stage(stage_build_lexicon, ("preprocess",), ("lexicon.jsonl",), "induce the polarity lexicon"),
    "train": Stage(stage_train, ("build-lexicon",), ("model.json", "cv_metrics.json"),
                   "cross-validate and fit the classifier"),
    "classify": Stage(stage_classify, ("train",), ("labels.csv",), "label the unlabeled comments"),
    "trust": Stage(stage_trust, ("classify",), ("trust.csv",), "per-user trust coefficients"),
    "indices": Stage(stage_indices, ("trust",), ("indicators.csv",), "daily bullishness indices"),
    "analyze": Stage(stage_analyze, ("indices",), ("acf.csv", "ccf.csv", "granger.csv"),
                     "ACF, CCF and Granger tables"),
    "fit": Stage(stage_fit, ("indices",), ("models.json",), "fit M0 and M1"),
    "evaluate": Stage(stage_evaluate, ("fit",), ("evaluation.json", "predictions.csv"),
                      "one-step-ahead evaluation on the held-out tail"),
    "report": Stage(stage_report, ("evaluate", "analyze"), ("report.csv", "report.json"), "M0 versus M1 table"),
}


def stage_order() -> list[str]:
    """Topological order of all stages; raises graphlib.CycleError on a bad graph."""
    return list(graphlib.TopologicalSorter({k: s.deps for k, s in STAGES.items()}).static_order())


def plan(target: str) -> list[str]:
    """The stages ``target`` needs, upstream first."""
    needed: set[str] = set()
    todo = [target]
    while todo:
        s = todo.pop()
        if s not in needed:
            needed.add(s)
            todo.extend(STAGES[s].deps)
    return [s for s in stage_order() if s in needed]


def run_stage(name: str, cfg: PipelineConfig, log=print) -> None:
    ws = Workspace(cfg)
    ws.require(name)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for line in STAGES[name].run(ws):
        log(f"[{name}] {line}")


def _synth(args) -> None:
    from .synthetic import synthetic_stock
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stock = synthetic_stock(n_days=args.days, seed=args.seed, planted=not args.null)
    ingest.write_comments(stock.corpus, out / "comments.csv")
    ingest.write_market(stock.bars, out / "market.csv")
    (out / "pipeline.conf").write_text(
        "# synthetic fixture; paths are relative to this file\n"
        "comments = comments.csv\nmarket = market.csv\nsymbol = SYNTH\n"
        f"seed = {args.seed}\nalgorithm = bagging\nk_folds = 5\n",
        encoding="utf-8",
    )
    print(f"wrote {len(stock.corpus)} comments and {len(stock.bars)} closes to {out}")


def fixture_dir() -> Path:
    return Path(__file__).parent / "data" / "fixture"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsesent", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--out", help="artifact directory (default: tsesent-out)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any setting")
        p.add_argument("--dry-run", action="store_true", help="print the plan and exit")
        p.add_argument("--quiet", action="store_true")

    for name, st in STAGES.items():
        common(sub.add_parser(name, help=st.help))
    common(sub.add_parser("pipeline", help="run every stage in order"))
    syn = sub.add_parser("synth", help="write a synthetic corpus, closes and config")
    syn.add_argument("--out", required=True)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--days", type=int, default=160)
    syn.add_argument("--null", action="store_true", help="make the price independent of the comments")
    sub.add_parser("fixture", help="print the path of the bundled fixture config")
    sub.add_parser("settings", help="list every setting with its default")
    return parser


def _overrides(args) -> dict[str, str]:
    out = {}
    problems = []
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            problems.append(f"--set {item!r}: expected KEY=VALUE")
            continue
        out[key.strip()] = value.strip()
    if problems:
        raise ConfigError(problems)
    if args.seed is not None:
        out["seed"] = str(args.seed)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            _synth(args)
            return 0
        if args.command == "fixture":
            print(fixture_dir() / "pipeline.conf")
            return 0
        if args.command == "settings":
            for k, o in OPTIONS.items():
                print(f"{k} = {o.default if o.default is not None else '<required>'}    # {o.help}")
            return 0
        cfg = resolve_config(args.config, _overrides(args), args.out)
        stages = stage_order() if args.command == "pipeline" else [args.command]
        if args.dry_run:
            steps = stage_order() if args.command == "pipeline" else plan(args.command)
            print(f"config hash {cfg.digest()}  seed {cfg['seed']}  out {cfg.out}")
            for s in steps:
                mark = "run " if s in stages else "need"
                print(f"  {mark} {s:<14} -> {', '.join(STAGES[s].outputs)}")
            return 0
        log = (lambda _msg: None) if args.quiet else print
        for s in stages:
            run_stage(s, cfg, log)
        return 0
    except CliError as exc:
        print(json.dumps(exc.payload(), ensure_ascii=False), file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError, KeyError) as exc:
        stage = getattr(args, "command", None)
        err = {"error": type(exc).__name__, "message": str(exc), "stage": stage}
        print(json.dumps(err, ensure_ascii=False), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
