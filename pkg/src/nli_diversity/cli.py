"""Command-line entry point.

Config files use a flat key/value grammar (full TOML is not needed):

    # comment lines and blanks are ignored
    seed = 7                     # integers / floats parsed numerically
    cache = runs/cache.jsonl     # bare strings allowed, or "quoted"
    score.metrics = baseline_nli, distinct_n   # comma list
    threshold.set-size = 5       # dotted keys scope a value to one subcommand

Flags always win over config values. Every output file starts with a header
line recording the config fingerprint, seed, backend descriptor, and toolkit
version; the fingerprint covers the logical run configuration (backend,
seed, command settings) and deliberately excludes file paths so identical
runs over identical data compare equal across machines.

Module errors exit nonzero and write both a human message and a
machine-readable JSON line to stderr.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import click

from . import __version__
from .backend import (
    BackendDescriptor,
    MockBackend,
    MockPoolSampler,
    NLILabel,
    RankedListSampler,
    RemoteBackend,
    RemoteSampler,
    SamplingParams,
)
from .cache import CachingNLIBackend, PairwiseCache
from .corpus import (
    CsvSchema,
    load_diversity_eval_csv,
    load_multi_reference,
    load_normalized,
    load_schema_map,
)
from .errors import AlignmentError, ConfigError, DiversityError
from .evaluation import BootstrapSpec, correlate_metric, export_histogram
from .generation import GenerationTrace, ThresholdSpec, run_corpus
from .metrics import (
    DistinctNEvaluator,
    EmbeddingDiversityEvaluator,
    NLIDiversityEvaluator,
    empirical_threshold,
)
from .relevancy import set_relevancy

ENDPOINT_ENV_VAR = "NLI_DIVERSITY_ENDPOINT"

NLI_METRICS = ("baseline_nli", "neutral_nli", "confidence_nli")
ALL_METRICS = NLI_METRICS + ("distinct_n", "sent_embed")


# ---------------------------------------------------------------------------
# config file handling

def parse_config_file(path: str | Path) -> dict[str, object]:
    """Parse the flat key/value grammar documented in the module docstring."""
    config: dict[str, object] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        config[key.strip()] = _parse_config_value(value.strip())
    return config


def _parse_config_value(text: str):
    if "," in text:
        return [_parse_config_value(part.strip()) for part in text.split(",")]
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _apply_config(ctx: click.Context, param, value):
    if not value:
        return None
    default_map: dict = {}
    for key, parsed in parse_config_file(value).items():
        if "." in key:
            section, opt = key.split(".", 1)
            default_map.setdefault(section, {})[opt.replace("-", "_")] = parsed
        else:
            default_map[key.replace("-", "_")] = parsed
    ctx.default_map = default_map
    return value


# ---------------------------------------------------------------------------
# run plumbing

@dataclass
class RunConfig:
    command: str
    backend: Optional[BackendDescriptor]
    seed: int
    jobs: int
    cache_path: Optional[str]
    settings: dict

    def fingerprint(self) -> str:
        payload = {
            "command": self.command,
            "backend": self.backend.to_dict() if self.backend else None,
            "seed": self.seed,
            "settings": self.settings,
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def header(self) -> dict:
        return {
            "record": "header",
            "config_hash": self.fingerprint(),
            "seed": self.seed,
            "backend": self.backend.to_dict() if self.backend else None,
            "version": __version__,
        }


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _write_lines(output: Optional[str], lines: Sequence[str]) -> None:
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def guarded(fn):
    """Convert module errors into exit code 1 with a JSON error on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DiversityError as e:
            click.echo(f"error: {e}", err=True)
            click.echo(
                _dumps({"record": "error", "error": type(e).__name__, "message": str(e)}),
                err=True,
            )
            sys.exit(1)

    return wrapper


def _make_nli_backend(ctx_obj: dict, backend_kind: str, model: str, endpoint: Optional[str],
                      mock_table: Optional[str]):
    cache = PairwiseCache(ctx_obj.get("cache"))
    if backend_kind == "remote":
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint:
            raise ConfigError(
                f"remote backend needs --endpoint or ${ENDPOINT_ENV_VAR}"
            )
        inner = RemoteBackend(endpoint, model_id=model)
        descriptor = BackendDescriptor(kind="remote", model_id=model, endpoint=endpoint)
    else:
        table = _load_mock_table(mock_table) if mock_table else None
        inner = MockBackend(table=table, model_id=model)
        descriptor = BackendDescriptor(kind="mock", model_id=model)
    return CachingNLIBackend(inner, cache), inner, descriptor


def _load_mock_table(path: str) -> dict[tuple[str, str], tuple[NLILabel, float]]:
    """Mock table file: {"pairs": [{"premise", "hypothesis", "label",
    "confidence"}, ...]}."""
    with Path(path).open(encoding="utf-8") as f:
        data = json.load(f)
    table = {}
    for entry in data["pairs"]:
        table[(entry["premise"], entry["hypothesis"])] = (
            NLILabel(entry["label"]),
            float(entry["confidence"]),
        )
    return table


def _load_pools(path: str) -> dict[str, list[str]]:
    """Pool file: JSON lines {"conversation_id": str, "pool": [str]}."""
    pools: dict[str, list[str]] = {}
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            pools[record["conversation_id"]] = list(record["pool"])
    return pools


def _load_bundle(dataset: str, kind: str, schema_map: Optional[str], strict: bool):
    """JSON-lines interchange by default; .csv paths (or an explicit
    --schema-map) go through the diversity-eval CSV loader."""
    if schema_map or dataset.endswith(".csv"):
        schema = load_schema_map(schema_map) if schema_map else CsvSchema.default()
        return load_diversity_eval_csv(dataset, schema)
    if kind == "multi_reference":
        return load_multi_reference(dataset, strict=strict)
    return load_normalized(dataset, kind=kind)


def _evaluator_for(metric: str, nli_backend, embed_backend):
    if metric in NLI_METRICS:
        return NLIDiversityEvaluator(nli_backend, variant=metric)
    if metric == "distinct_n":
        return DistinctNEvaluator()
    if metric == "sent_embed":
        return EmbeddingDiversityEvaluator(embed_backend)
    raise ConfigError(f"unknown metric {metric!r}; expected one of {ALL_METRICS}")


# ---------------------------------------------------------------------------
# commands

@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), is_eager=True,
              callback=_apply_config, expose_value=False,
              help="Flat key/value config file; flags override it.")
@click.option("--cache", type=click.Path(dir_okay=False), default=None,
              help="Pairwise NLI cache file (JSON lines).")
@click.option("--seed", type=int, default=0, show_default=True, help="Base random seed.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel per-conversation workers.")
@click.version_option(version=__version__)
@click.pass_context
def main(ctx, cache, seed, jobs):
    """Diversity scoring, metric evaluation, and threshold generation for
    dialogue response sets."""
    ctx.obj = {"cache": cache, "seed": seed, "jobs": jobs}


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Dataset in JSON-lines interchange format.")
@click.option("--kind", default="diversity_eval", show_default=True,
              type=click.Choice(["diversity_eval", "multi_reference", "generation_context"]))
@click.option("--metrics", default="baseline_nli", show_default=True,
              help="Comma-separated metric names.")
@click.option("--backend", "backend_kind", default="mock", show_default=True,
              type=click.Choice(["mock", "remote"]))
@click.option("--model", default="mock-nli", show_default=True)
@click.option("--endpoint", default=None, help=f"Sidecar URL (or ${ENDPOINT_ENV_VAR}).")
@click.option("--mock-table", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--schema-map", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Column mapping (JSON) for CSV datasets.")
@click.option("--strict/--permissive", "strict", default=True, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Report file (default stdout).")
@click.pass_obj
@guarded
def score(obj, dataset, kind, metrics, backend_kind, model, endpoint, mock_table,
          schema_map, strict, output):
    """Score every response set with the requested diversity metrics."""
    metric_names = [m.strip() for m in str(metrics).split(",") if m.strip()]
    nli_backend, raw_backend, descriptor = _make_nli_backend(
        obj, backend_kind, model, endpoint, mock_table
    )
    embed_backend = raw_backend if backend_kind == "remote" else MockBackend()
    bundle = _load_bundle(dataset, kind, schema_map, strict)
    config = RunConfig(
        command="score", backend=descriptor, seed=obj["seed"], jobs=obj["jobs"],
        cache_path=obj["cache"], settings={"metrics": metric_names},
    )
    lines = [_dumps(config.header())]
    for conv, response_set in _iter_sets(bundle):
        for metric in metric_names:
            evaluator = _evaluator_for(metric, nli_backend, embed_backend)
            result = evaluator.score(response_set.responses)
            lines.append(_dumps({
                "conversation_id": conv.id,
                "metric": result.metric,
                "value": result.value,
                "counts": None if result.counts is None else result.counts._asdict(),
            }))
    _write_lines(output, lines)


def _iter_sets(bundle):
    for conv, sets in bundle.items:
        for response_set in sets:
            yield conv, response_set


@main.command("evaluate-metric")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", default="diversity_eval", show_default=True,
              type=click.Choice(["diversity_eval", "multi_reference", "generation_context"]))
@click.option("--metric", default="baseline_nli", show_default=True)
@click.option("--target", default="parameter", show_default=True,
              type=click.Choice(["parameter", "human"]))
@click.option("--bootstrap/--no-bootstrap", default=False, show_default=True)
@click.option("--resample-size", type=int, default=110, show_default=True)
@click.option("--iterations", type=int, default=1000, show_default=True)
@click.option("--level", type=float, default=0.05, show_default=True)
@click.option("--backend", "backend_kind", default="mock", show_default=True,
              type=click.Choice(["mock", "remote"]))
@click.option("--model", default="mock-nli", show_default=True)
@click.option("--endpoint", default=None)
@click.option("--mock-table", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--schema-map", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Column mapping (JSON) for CSV datasets.")
@click.option("--strict/--permissive", "strict", default=True, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@guarded
def evaluate_metric(obj, dataset, kind, metric, target, bootstrap, resample_size,
                    iterations, level, backend_kind, model, endpoint, mock_table,
                    schema_map, strict, output):
    """Correlate a diversity metric with gold annotations (Spearman's rho)."""
    target_name = "diversity_parameter" if target == "parameter" else "human_rating"
    nli_backend, raw_backend, descriptor = _make_nli_backend(
        obj, backend_kind, model, endpoint, mock_table
    )
    embed_backend = raw_backend if backend_kind == "remote" else MockBackend()
    bundle = _load_bundle(dataset, kind, schema_map, strict)
    evaluator = _evaluator_for(metric, nli_backend, embed_backend)
    spec = BootstrapSpec(resample_size=resample_size, iterations=iterations,
                         level=level, seed=obj["seed"]) if bootstrap else None
    report = correlate_metric(bundle, evaluator, target_name, bootstrap=spec)
    config = RunConfig(
        command="evaluate-metric", backend=descriptor, seed=obj["seed"], jobs=obj["jobs"],
        cache_path=obj["cache"],
        settings={"metric": metric, "target": target_name, "bootstrap": bootstrap,
                  "resample_size": resample_size, "iterations": iterations, "level": level},
    )
    _write_lines(output, [_dumps(config.header()), _dumps(report.to_dict())])
    click.echo(f"rho={report.rho:.4f} n={report.n_items}"
               + (f" ci=({report.ci_low:.4f}, {report.ci_high:.4f})" if bootstrap else ""),
               err=True)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Conversations in JSON-lines interchange format.")
@click.option("--metric", default="baseline_nli", show_default=True)
@click.option("--predicate", default="count_contradictions_gt", show_default=True,
              type=click.Choice(["count_contradictions_gt", "value_ge"]))
@click.option("--threshold", type=float, default=10.0, show_default=True)
@click.option("--set-size", type=int, default=5, show_default=True)
@click.option("--max-samples", type=int, default=20, show_default=True)
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--sampler", "sampler_kind", default="mock-pool", show_default=True,
              type=click.Choice(["remote", "mock-pool", "ranked-list"]))
@click.option("--pool-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON lines {conversation_id, pool} for mock-pool / ranked-list.")
@click.option("--backend", "backend_kind", default="mock", show_default=True,
              type=click.Choice(["mock", "remote"]))
@click.option("--model", default="mock-nli", show_default=True)
@click.option("--endpoint", default=None)
@click.option("--mock-table", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--p", "nucleus_p", type=float, default=0.9, show_default=True,
              help="Nucleus-sampling p for the remote sampler.")
@click.option("--sampler-model", default="dialogpt", show_default=True,
              help="Generation model served by the sidecar (remote sampler).")
@click.option("--max-new-tokens", type=int, default=64, show_default=True)
@click.option("--truncate-tokens", type=int, default=None)
@click.option("--traces-out", type=click.Path(dir_okay=False), default=None)
@click.option("--summary-out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@guarded
def threshold(obj, dataset, metric, predicate, threshold, set_size, max_samples, trials,
              sampler_kind, pool_file, backend_kind, model, endpoint, mock_table,
              nucleus_p, sampler_model, max_new_tokens, truncate_tokens, traces_out,
              summary_out):
    """Run Diversity Threshold Generation over a corpus of conversations."""
    spec = ThresholdSpec(metric=metric, predicate=predicate, threshold=threshold,
                         set_size=set_size, max_samples=max_samples, trials=trials)
    nli_backend, raw_backend, descriptor = _make_nli_backend(
        obj, backend_kind, model, endpoint, mock_table
    )
    embed_backend = raw_backend if backend_kind == "remote" else MockBackend()
    evaluator = _evaluator_for(metric, nli_backend, embed_backend)
    bundle = load_normalized(dataset, kind="generation_context")

    if sampler_kind in ("mock-pool", "ranked-list"):
        if not pool_file:
            raise ConfigError(f"--sampler {sampler_kind} requires --pool-file")
        pools = _load_pools(pool_file)

        def sampler_factory(conv, seed):
            if conv.id not in pools:
                raise ConfigError(f"no pool for conversation {conv.id!r}")
            if sampler_kind == "ranked-list":
                return RankedListSampler(pools[conv.id])
            return MockPoolSampler(pools[conv.id], seed=seed)
    else:
        endpoint_url = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint_url:
            raise ConfigError(f"remote sampler needs --endpoint or ${ENDPOINT_ENV_VAR}")
        sampler_backend = RemoteBackend(endpoint_url, model_id=sampler_model)

        def sampler_factory(conv, seed):
            params = SamplingParams(p=nucleus_p, max_new_tokens=max_new_tokens,
                                    seed=seed, model=sampler_model,
                                    truncate_tokens=truncate_tokens)
            return RemoteSampler(sampler_backend, params)

    traces, summary = run_corpus(bundle, sampler_factory, spec, evaluator,
                                 base_seed=obj["seed"], jobs=obj["jobs"])
    config = RunConfig(
        command="threshold", backend=descriptor, seed=obj["seed"], jobs=obj["jobs"],
        cache_path=obj["cache"],
        settings={"threshold_spec": spec.to_dict(), "sampler": sampler_kind,
                  "sampler_model": sampler_model, "p": nucleus_p,
                  "max_new_tokens": max_new_tokens,
                  "truncate_tokens": truncate_tokens},
    )
    if traces_out:
        _write_lines(traces_out,
                     [_dumps(config.header())] + [_dumps(t.to_dict()) for t in traces])
    summary_obj = dict(config.header())
    summary_obj.update({"record": "summary", "threshold_spec": spec.to_dict()})
    summary_obj.update(summary.to_dict())
    if summary_out:
        _write_lines(summary_out, [_dumps(summary_obj)])
    click.echo(f"threshold: {spec.predicate} {spec.threshold} "
               f"(metric={spec.metric}, n={spec.set_size}, S={spec.max_samples}, "
               f"trials={spec.trials})")
    if summary.n_traces:
        click.echo(f"starting_div={summary.mean_starting_score:.4f} "
                   f"ending_div={summary.mean_ending_score:.4f} "
                   f"num_sampled={summary.mean_num_sampled:.4f} "
                   f"overlap={summary.mean_overlap:.4f} "
                   f"met={summary.threshold_met_fraction:.4f} "
                   f"traces={summary.n_traces} failures={len(summary.failures)}")
    else:
        click.echo(f"no completed traces; failures={len(summary.failures)}")


@main.command()
@click.option("--traces", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Trace file from the threshold command.")
@click.option("--references", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Multi-reference dataset (JSON-lines interchange).")
@click.option("--backend", "backend_kind", default="mock", show_default=True,
              type=click.Choice(["mock", "remote"]))
@click.option("--model", default="mock-bertscore", show_default=True)
@click.option("--endpoint", default=None)
@click.option("--strict/--permissive", "strict", default=True, show_default=True,
              help="Require exactly 5 references per conversation.")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@guarded
def relevancy(obj, traces, references, backend_kind, model, endpoint, strict, output):
    """Compare starting vs ending relevancy (multi-reference BLEU + BERTScore)."""
    if backend_kind == "remote":
        endpoint_url = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint_url:
            raise ConfigError(f"remote backend needs --endpoint or ${ENDPOINT_ENV_VAR}")
        scoring = RemoteBackend(endpoint_url, model_id=model)
        descriptor = BackendDescriptor(kind="remote", model_id=model, endpoint=endpoint_url)
    else:
        scoring = MockBackend()
        descriptor = BackendDescriptor(kind="mock", model_id=model)
    bundle = load_multi_reference(references, strict=strict)
    refs_by_id = {conv.id: sets[0].responses for conv, sets in bundle.items}
    trace_list = _load_traces(traces)
    if not trace_list:
        raise ConfigError(f"no traces found in {traces}")
    unmatched = sorted({t.conversation_id for t in trace_list} - set(refs_by_id))
    if unmatched:
        raise AlignmentError("traces without matching references", unmatched)

    rows = []
    starting = {"bleu": [], "bertscore": []}
    ending = {"bleu": [], "bertscore": []}
    for trace in trace_list:
        refs = refs_by_id[trace.conversation_id]
        for phase, responses in (("starting", trace.initial_set), ("ending", trace.final_set)):
            report = set_relevancy(responses, refs, scoring,
                                   conversation_id=trace.conversation_id, phase=phase)
            rows.append(report.to_dict())
            bucket = starting if phase == "starting" else ending
            bucket["bleu"].append(report.bleu)
            bucket["bertscore"].append(report.bertscore)

    def mean(vals):
        return sum(vals) / len(vals) if vals else float("nan")

    summary = {
        "record": "summary",
        "starting_bleu": mean(starting["bleu"]),
        "ending_bleu": mean(ending["bleu"]),
        "starting_bertscore": mean(starting["bertscore"]),
        "ending_bertscore": mean(ending["bertscore"]),
        "n_traces": len(trace_list),
    }
    config = RunConfig(
        command="relevancy", backend=descriptor, seed=obj["seed"], jobs=obj["jobs"],
        cache_path=obj["cache"], settings={"strict": strict},
    )
    lines = [_dumps(config.header())] + [_dumps(r) for r in rows] + [_dumps(summary)]
    _write_lines(output, lines)
    click.echo(f"starting_bleu={summary['starting_bleu']:.4f} "
               f"ending_bleu={summary['ending_bleu']:.4f} "
               f"starting_bertscore={summary['starting_bertscore']:.4f} "
               f"ending_bertscore={summary['ending_bertscore']:.4f}", err=True)


def _load_traces(path: str) -> list[GenerationTrace]:
    traces = []
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("record") == "header":
                continue
            traces.append(GenerationTrace.from_dict(record))
    return traces


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON-lines report or trace file.")
@click.option("--field", required=True,
              help="Row key to histogram (e.g. num_sampled, value).")
@click.option("--where", multiple=True,
              help="Filter rows by key=value (repeatable, string match).")
@click.option("--bins", type=int, default=10, show_default=True)
@click.option("--edges", default=None,
              help="Explicit comma-separated bin edges (overrides --bins).")
@click.option("--percentile", type=float, default=None,
              help="Emit the nearest-rank percentile of the field instead "
                   "of a histogram (e.g. 90 for threshold calibration).")
@click.option("--label", default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Also write (bin_low, bin_high, count) rows as CSV.")
@click.pass_obj
@guarded
def report(obj, input_path, field, where, bins, edges, percentile, label, output,
           csv_path):
    """Export plot data for a report field: a histogram, or a nearest-rank
    percentile for calibrating diversity thresholds."""
    filters = []
    for clause in where:
        if "=" not in clause:
            raise ConfigError(f"--where expects key=value, got {clause!r}")
        key, _, expected = clause.partition("=")
        filters.append((key, expected))
    values = []
    with Path(input_path).open(encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("record") == "header" or field not in record:
                continue
            if any(str(record.get(k)) != v for k, v in filters):
                continue
            values.append(float(record[field]))
    if not values:
        raise ConfigError(f"no rows with field {field!r} after filtering")
    config = RunConfig(
        command="report", backend=None, seed=obj["seed"], jobs=obj["jobs"],
        cache_path=obj["cache"],
        settings={"field": field, "where": sorted(where), "bins": bins,
                  "edges": edges, "percentile": percentile},
    )
    if percentile is not None:
        try:
            value = empirical_threshold(values, percentile)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        row = {"record": "percentile", "label": label or field,
               "percentile": percentile, "value": value, "n_values": len(values)}
        _write_lines(output, [_dumps(config.header()), _dumps(row)])
        return
    bin_spec = [float(e) for e in edges.split(",")] if edges else bins
    try:
        histogram = export_histogram(values, bin_spec, label or field)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    _write_lines(output, [_dumps(config.header()), _dumps(histogram.to_dict())])
    if csv_path:
        rows = ["bin_low,bin_high,count"] + [
            f"{lo},{hi},{count}" for lo, hi, count in histogram.to_csv_rows()
        ]
        Path(csv_path).write_text("\n".join(rows) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
