"""Command-line entry point.

Every command resolves its parameters (YAML config overlaid with command
options), runs, and writes ``<out>/<command>.manifest.json`` listing the
parameters, their hash, the root seed and the hashed input/output files.
``behavcal replay <manifest>`` reruns a command from its manifest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
import threading
import uuid
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import click
import yaml

from behavcal import __version__
from behavcal.core import PROFILE_FOR_BIAS, Bias, Profile, ProfileKind, read_benchmarks
from behavcal.seeding import PRNG_NAME, derive_seed

RECORDS_FILE = "records/records.jsonl"
REQUEST_LOG = "records/requests.jsonl"
ESTIMATES_FILE = "estimates.csv"


class ConfigError(click.ClickException):
    exit_code = 2


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def config_hash(params: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form; independent of key order."""
    text = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclasses.dataclass
class RunManifest:
    run_id: str
    command: str
    config_hash: str
    root_seed: int
    params: dict[str, Any]
    started: str
    finished: str
    inputs: list[dict[str, str]]
    outputs: list[dict[str, str]]
    tool_version: str = __version__
    prng: str = PRNG_NAME

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, out: Path) -> Path:
        path = out / f"{self.command}.manifest.json"
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


def manifest_path(out: Path, command: str) -> Path:
    return out / f"{command}.manifest.json"


def _inventory(paths: list[Path], root: Path) -> list[dict[str, str]]:
    out = []
    for p in sorted(set(paths)):
        try:
            name = str(p.relative_to(root))
        except ValueError:
            name = str(p)
        out.append({"path": name, "sha256": file_sha256(p)})
    return out


def execute(command: str, params: dict[str, Any], out: Path, jobs: int) -> RunManifest:
    """Run ``command`` with resolved parameters and write its manifest."""
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {out}: {e}") from e
    started = datetime.now(timezone.utc).isoformat()
    inputs, outputs = COMMANDS[command](params, out, jobs)
    digest = config_hash({"command": command, **params})
    manifest = RunManifest(
        run_id=f"{command}-{digest[:12]}-{uuid.uuid4().hex[:8]}",
        command=command,
        config_hash=digest,
        root_seed=int(params.get("seed", 0)),
        params=params,
        started=started,
        finished=datetime.now(timezone.utc).isoformat(),
        inputs=_inventory([Path(p) for p in inputs], out),
        outputs=_inventory([Path(p) for p in outputs], out),
    )
    manifest.write(out)
    return manifest


def replay(path: str | Path, out: str | Path | None = None, jobs: int = 1) -> RunManifest:
    """Rerun a command from its manifest, optionally into another directory."""
    m = RunManifest.from_json(Path(path).read_text(encoding="utf-8"))
    target = Path(out) if out is not None else Path(path).parent
    return execute(m.command, m.params, target, jobs)


# ---------------------------------------------------------------------------
# Parameter helpers
# ---------------------------------------------------------------------------


def _split(value: str | list | None) -> list[str] | None:
    if value is None:
        return None
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _biases(value) -> list[str]:
    names = _split(value) or ["all"]
    if names == ["all"]:
        return [b.value for b in Bias]
    try:
        return [Bias(n).value for n in names]
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _profiles(value) -> list[str]:
    names = _split(value) or ["all"]
    if names == ["all"]:
        return [k.value for k in ProfileKind]
    try:
        return [ProfileKind(n).value for n in names]
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _strengths(value) -> list[float]:
    vals = _split(value) or ["1.0"]
    try:
        out = [float(v) for v in vals]
    except ValueError as e:
        raise ConfigError(f"bad strength list: {value}") from e
    if any(not 0.0 <= s <= 1.0 for s in out):
        raise ConfigError("strengths must lie in [0, 1]")
    return out


def _section(ctx: click.Context, name: str) -> dict[str, Any]:
    sec = ctx.obj["config"].get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section '{name}' must be a mapping")
    return dict(sec)


def _pick(option, section: dict, key: str, default):
    if option is not None:
        return option
    return section.get(key, default)


def _endpoint_cfg(d: dict[str, Any] | None):
    from behavcal.respondents import LLMEndpointConfig

    if not d:
        raise ConfigError("the llm backend needs an 'endpoint' section (base_url, model_id)")
    try:
        return LLMEndpointConfig(**d)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad endpoint config: {e}") from e


def make_llm_client(cfg):
    """Factory hook; tests replace it to inject a stub transport."""
    from behavcal.respondents import LLMClient

    return LLMClient(cfg)


def _echo(msg: str) -> None:
    click.echo(msg, err=True)


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------


def do_gen_data(p: dict[str, Any], out: Path, jobs: int):
    from behavcal.synthdata import EarningsConfig, PricePathConfig, write_batch

    try:
        price = PricePathConfig(**p["price"])
        earn = EarningsConfig(**p["earnings"])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad synthdata config: {e}") from e
    m = write_batch(out / "data", p["seed"], price, earn, p["n_price_paths"], p["n_earnings_paths"])
    files = [out / "data" / f for f in m.files] + [out / "data" / "batch_manifest.json"]
    return [], files


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _strength_key(s: float) -> int:
    return int(round(s * 1000))


def _cells(p: dict[str, Any]) -> list[tuple[str, str, float]]:
    return [(b, k, s) for b in p["biases"] for k in p["profiles"] for s in p["strengths"]]


def _synthetic_cell(args: tuple[int, str, str, float, int, float]) -> list[str]:
    from behavcal.experiments import build_scenario_set
    from behavcal.respondents import profile_to_groundtruth, respond_synthetic

    seed, bias, kind, strength, n, noise = args
    b = list(Bias).index(Bias(bias))
    k = list(ProfileKind).index(ProfileKind(kind))
    profile = Profile(ProfileKind(kind), strength)
    gt = profile_to_groundtruth(profile, noise)
    scenarios = build_scenario_set(bias, n, derive_seed(seed, "cli.scenarios", b))
    rid = f"{kind}@{strength:g}"
    lines = []
    for j, sc in enumerate(scenarios):
        rs = derive_seed(seed, "cli.run", b, k, _strength_key(strength), j)
        lines.append(respond_synthetic(gt, sc, rs, profile=profile, respondent_id=rid).to_json())
    return lines


def _record_key(d: dict[str, Any]) -> tuple[str, str, float]:
    return (d["scenario"]["id"], d["profile"]["kind"], float(d["profile"]["strength"]))


def _completed_keys(path: Path) -> set[tuple[str, str, float]]:
    done = set()
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            try:
                done.add(_record_key(json.loads(line)))
            except (json.JSONDecodeError, KeyError):
                continue  # torn last line from an interrupted run
    return done


def _truncate_torn_tail(path: Path) -> None:
    if not path.exists():
        return
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])


def do_run(p: dict[str, Any], out: Path, jobs: int):
    records = out / RECORDS_FILE
    records.parent.mkdir(parents=True, exist_ok=True)
    cells = _cells(p)
    if p["backend"] == "synthetic":
        args = [(p["seed"], b, k, s, p["n"], p["choice_noise"]) for b, k, s in cells]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as ex:
                chunks = list(ex.map(_synthetic_cell, args))
        else:
            chunks = [_synthetic_cell(a) for a in args]
        with open(records, "w", encoding="utf-8") as fh:
            for lines in chunks:
                fh.writelines(line + "\n" for line in lines)
        _echo(f"wrote {sum(map(len, chunks))} records to {records}")
        return [], [records]
    return [], _run_llm(p, out, records)


def _run_llm(p: dict[str, Any], out: Path, records: Path) -> list[Path]:
    from behavcal.experiments import build_scenario_set, render_prompt
    from behavcal.respondents import llm_record

    cfg = _endpoint_cfg(p.get("endpoint"))
    _truncate_torn_tail(records)
    done = _completed_keys(records)
    todo = []
    for bias, kind, strength in _cells(p):
        b = list(Bias).index(Bias(bias))
        profile = Profile(ProfileKind(kind), strength)
        for sc in build_scenario_set(bias, p["n"], derive_seed(p["seed"], "cli.scenarios", b)):
            if (sc.id, kind, float(strength)) not in done:
                todo.append((profile, sc))
    total = len(todo) + len(done)
    _echo(f"{len(done)} records present, {len(todo)} to request")
    log_path = out / REQUEST_LOG
    lock = threading.Lock()

    def log(entry: dict) -> None:
        with lock, open(log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    failures = 0
    with make_llm_client(cfg) as client:

        def one(item):
            profile, sc = item
            rid = f"{profile.kind.value}@{profile.strength:g}"
            return llm_record(client, profile, sc, render_prompt(profile, sc), rid, uuid.uuid4().hex, log)

        batch = cfg.max_in_flight
        with ThreadPoolExecutor(batch) as ex:
            for start in range(0, len(todo), batch):
                recs = list(ex.map(one, todo[start : start + batch]))
                with open(records, "a", encoding="utf-8") as fh:
                    fh.writelines(r.to_json() + "\n" for r in recs)
                failures += sum(not r.parsed.ok for r in recs)
                _echo(f"{len(done) + start + len(recs)}/{total} records ({failures} failed or unparsed)")
    outs = [records]
    if log_path.exists():
        outs.append(log_path)
    return outs


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def do_estimate(p: dict[str, Any], out: Path, jobs: int):
    from behavcal.estimators import estimate_groups, write_estimates
    from behavcal.respondents import read_records

    inputs = [Path(x) for x in p["records"]]
    recs = []
    for path in inputs:
        if not path.exists():
            raise ConfigError(f"records file not found: {path}")
        recs.extend(read_records(path))
    results = estimate_groups(recs)
    target = out / ESTIMATES_FILE
    write_estimates(target, results)
    _echo(f"{len(results)} estimates from {len(recs)} records")
    return inputs, [target]


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _sweeps(estimates) -> dict[tuple[Bias, str, str], list]:
    """Strength sweep per (bias, backend, model) for the profile that drives the bias.

    Rational-profile estimates stand in for strength 0 when the sweep lacks it.
    """
    sweeps: dict[tuple[Bias, str, str], list] = {}
    for bias, kind in PROFILE_FOR_BIAS.items():
        groups = {(e.backend, e.model_id) for e in estimates if e.bias is bias}
        for backend, model in sorted(groups):
            rows = [e for e in estimates if e.bias is bias and (e.backend, e.model_id) == (backend, model)]
            sweep = [e for e in rows if e.profile == kind.value]
            if not any(e.strength == 0.0 for e in sweep):
                rat = [e for e in rows if e.profile == ProfileKind.RATIONAL.value]
                if rat:
                    sweep.append(dataclasses.replace(rat[0], strength=0.0))
            if sweep:
                sweeps[(bias, backend, model)] = sorted(sweep, key=lambda e: e.strength)
    return sweeps


def do_validate(p: dict[str, Any], out: Path, jobs: int):
    from behavcal.estimators import read_estimates
    from behavcal.validator import compare_reference_table, format_table, reports_table, reports_to_json, validate_bias

    inputs = [Path(p["estimates"])]
    if not inputs[0].exists():
        raise ConfigError(f"estimates file not found: {inputs[0]}")
    benchmarks = None
    if p.get("benchmarks"):
        inputs.append(Path(p["benchmarks"]))
        benchmarks = read_benchmarks(p["benchmarks"])
    estimates = read_estimates(inputs[0])
    reports, skipped = [], []
    for (bias, backend, model), sweep in _sweeps(estimates).items():
        usable = [e for e in sweep if e.usable]
        if len(usable) < 2:
            skipped.append(f"{bias.value} ({backend}/{model}): fewer than 2 usable strength levels")
            continue
        r = validate_bias(bias, usable, benchmarks, delta=p["delta"])
        r.details["backend"], r.details["model_id"] = backend, model
        reports.append(r)
    outs = [out / "validation.json", out / "validation.txt"]
    outs[0].write_text(reports_to_json(reports) + "\n", encoding="utf-8")
    text = reports_table(reports) if reports else "no strength sweeps to validate\n"
    if skipped:
        text += "\nskipped:\n" + "".join(f"  {s}\n" for s in skipped)
    if p["reference_table"]:
        rows = [
            (c.bias.value, c.baseline, c.calibrated, c.benchmark, c.tier, c.reference_tier,
             "agrees" if c.agrees else "INCONSISTENT")
            for c in compare_reference_table()
        ]
        text += "\nreference table tiers:\n" + format_table(
            rows, ("bias", "baseline", "calibrated", "benchmark", "tier", "reported", "check")
        )
    outs[1].write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    return inputs, outs


# ---------------------------------------------------------------------------
# abm
# ---------------------------------------------------------------------------


def do_abm(p: dict[str, Any], out: Path, jobs: int):
    from behavcal.abm.config import MarketConfig
    from behavcal.abm.model import run_replications
    from behavcal.abm.report import compare, format_comparison, write_acf_csv, write_comparison_csv

    try:
        cfg = MarketConfig.from_dict({**p["market"], "seed": p["seed"]})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad market config: {e}") from e
    d = out / "abm"
    d.mkdir(parents=True, exist_ok=True)
    outs = []
    if p["mode"] == "single":
        s = run_replications(cfg, jobs=jobs)
        summary = {"config": cfg.to_dict(), "mean": s.mean, "se": s.se, "trade_frequency": s.trade_frequency}
        outs += [d / "summary.json", d / "acf.csv"]
        outs[0].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        write_acf_csv(s, outs[1])
        click.echo(json.dumps({"mean": s.mean, "trade_frequency": s.trade_frequency}, indent=2, sort_keys=True))
        return [], outs
    rows = compare(cfg, jobs=jobs)
    text = format_comparison(rows) + "\n"
    outs += [d / "comparison.txt", d / "comparison.csv"]
    outs[0].write_text(text, encoding="utf-8")
    write_comparison_csv(rows, outs[1])
    for r in rows:
        path = d / f"acf_{r.reference.label.replace('=', '_')}.csv"
        write_acf_csv(r.summary, path)
        outs.append(path)
    click.echo(text, nl=False)
    return [], outs


# ---------------------------------------------------------------------------
# power
# ---------------------------------------------------------------------------


def do_power(p: dict[str, Any], out: Path, jobs: int):
    from behavcal.validator import PowerSpec, format_table, power_mc

    rows, csv_rows = [], ["spec,design,n,effect_null,effect_alt,power,mc_se,null_size,reps"]
    for name, fields in sorted(p["specs"].items()):
        try:
            spec = PowerSpec(**{**fields, "reps": p["reps"]})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad power spec '{name}': {e}") from e
        res = power_mc(spec, p["seed"], jobs)
        null = power_mc(dataclasses.replace(spec, effect_alt=spec.effect_null), p["seed"], jobs).power
        rows.append((name, spec.design, spec.n, spec.effect_null, spec.effect_alt, res.power, res.mc_se, null))
        csv_rows.append(
            f"{name},{spec.design.value},{spec.n},{spec.effect_null!r},{spec.effect_alt!r},"
            f"{res.power!r},{res.mc_se!r},{null!r},{spec.reps}"
        )
    text = format_table(rows, ("spec", "design", "n", "null", "alt", "power", "mc_se", "null_size"))
    outs = [out / "power.csv", out / "power.txt"]
    outs[0].write_text("\n".join(csv_rows) + "\n", encoding="utf-8")
    outs[1].write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    return [], outs


def default_power_specs() -> dict[str, dict[str, Any]]:
    from behavcal.validator import DEFAULT_POWER_SPECS

    out = {}
    for name, spec in DEFAULT_POWER_SPECS.items():
        d = dataclasses.asdict(spec)
        d["design"] = spec.design.value
        d.pop("reps")
        out[name] = d
    return out


# ---------------------------------------------------------------------------
# adversarial
# ---------------------------------------------------------------------------


def do_adversarial(p: dict[str, Any], out: Path, jobs: int):
    from behavcal.experiments import Scenario, adversarial_catalog, evaluate_pass, pass_rates, render_adversarial
    from behavcal.respondents import expected_shape, parse, profile_to_groundtruth, respond_synthetic
    from behavcal.validator import format_table

    inputs = [Path(c) for c in p["catalogs"]]
    try:
        catalog = adversarial_catalog(inputs)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"bad adversarial catalog: {e}") from e
    profiles = [Profile(ProfileKind(k), 1.0) for k in p["profiles"]]
    verdicts = []
    log_lines = []
    client = None
    if p["backend"] == "llm":
        client = make_llm_client(_endpoint_cfg(p.get("endpoint")))
    try:
        for pi, profile in enumerate(profiles):
            gt = profile_to_groundtruth(profile)
            for ai, adv in enumerate(catalog):
                paired = adv.predicate.get("kind") == "consistent_accept"
                for r in range(p["repeats"]):
                    if client is None:
                        seeds = [derive_seed(p["seed"], "cli.adversarial", pi, ai, r, i) for i in range(2)]
                        resp = [respond_synthetic(gt, adv.base, seeds[0], profile=profile).parsed]
                        if paired:
                            alt = Scenario(adv.base.id + "-alt", adv.bias, adv.base.payload, adv.base.asset, adv.paired_text)
                            resp.append(respond_synthetic(gt, alt, seeds[1], profile=profile).parsed)
                    else:
                        shape = expected_shape(adv.base)
                        resp = [parse(client.complete(pr).text, shape) for pr in render_adversarial(profile, adv)]
                    v = evaluate_pass(adv, tuple(resp[:2]) if paired else resp[0])
                    verdicts.append((adv.bias, profile.kind.value, v))
                    log_lines.append(json.dumps(
                        {"key": adv.key, "profile": profile.kind.value, "repeat": r,
                         "raw": [x.raw for x in resp[: 2 if paired else 1]],
                         "passed": v.passed, "parse_failed": v.parse_failed},
                        sort_keys=True,
                    ))
    finally:
        if client is not None:
            client.close()
    table = pass_rates(verdicts)
    rows = [(t.bias.value, t.group, t.passed, t.total, t.rate, t.meets_threshold, t.parse_failures) for t in table]
    text = format_table(rows, ("bias", "profile", "passed", "total", "rate", "meets_70pct", "parse_failures"))
    outs = [out / "adversarial.txt", out / "adversarial.csv", out / "adversarial_verdicts.jsonl"]
    outs[0].write_text(text, encoding="utf-8")
    outs[1].write_text(
        "bias,profile,passed,total,rate,meets_threshold,parse_failures\n"
        + "".join(f"{b},{g},{a},{n},{r!r},{m},{f}\n" for b, g, a, n, r, m, f in rows),
        encoding="utf-8",
    )
    outs[2].write_text("".join(line + "\n" for line in log_lines), encoding="utf-8")
    click.echo(text, nl=False)
    return inputs, outs


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

REPORT_SECTIONS = (
    ("validation", "validation.txt"),
    ("abm", "abm/comparison.txt"),
    ("power", "power.txt"),
    ("adversarial", "adversarial.txt"),
)


def do_report(p: dict[str, Any], out: Path, jobs: int):
    src = Path(p["source"])
    inputs, parts = [], []
    for title, rel in REPORT_SECTIONS:
        f = src / rel
        if f.exists():
            inputs.append(f)
            parts.append(f"== {title} ==\n{f.read_text(encoding='utf-8')}")
        else:
            parts.append(f"== {title} ==\n(not run)\n")
    text = "\n".join(parts)
    target = out / "report.txt"
    target.write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    return inputs, [target]


COMMANDS: dict[str, Callable[[dict[str, Any], Path, int], tuple[list, list]]] = {
    "gen-data": do_gen_data,
    "run": do_run,
    "estimate": do_estimate,
    "validate": do_validate,
    "abm": do_abm,
    "power": do_power,
    "adversarial": do_adversarial,
    "report": do_report,
}


# ---------------------------------------------------------------------------
# click surface
# ---------------------------------------------------------------------------


@click.group()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), help="YAML config file.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Root seed (default: config 'seed' or 0).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--jobs", type=click.IntRange(1), default=1, show_default=True)
@click.version_option(__version__)
@click.pass_context
def main(ctx: click.Context, config_file, seed, out_dir, jobs) -> None:
    """Behavioral calibration toolkit."""
    config: dict[str, Any] = {}
    if config_file:
        try:
            config = yaml.safe_load(Path(config_file).read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {config_file}: {e}") from e
        if not isinstance(config, dict):
            raise ConfigError("config root must be a mapping")
    root = seed if seed is not None else int(config.get("seed", 0))
    ctx.obj = {"config": config, "seed": root, "out": Path(out_dir), "jobs": jobs}


def _go(ctx: click.Context, command: str, params: dict[str, Any]) -> None:
    params = {"seed": ctx.obj["seed"], **params}
    m = execute(command, params, ctx.obj["out"], ctx.obj["jobs"])
    _echo(f"manifest: {manifest_path(ctx.obj['out'], command)} ({m.config_hash[:12]})")


@main.command("gen-data")
@click.option("--n-price-paths", type=click.IntRange(1), default=None)
@click.option("--n-earnings-paths", type=click.IntRange(1), default=None)
@click.pass_context
def gen_data_cmd(ctx, n_price_paths, n_earnings_paths):
    """Generate synthetic price and earnings paths."""
    sec = _section(ctx, "synthdata")
    _go(ctx, "gen-data", {
        "price": dict(sec.get("price") or {}),
        "earnings": dict(sec.get("earnings") or {}),
        "n_price_paths": int(_pick(n_price_paths, sec, "n_price_paths", 100)),
        "n_earnings_paths": int(_pick(n_earnings_paths, sec, "n_earnings_paths", 100)),
    })


@main.command("run")
@click.option("--bias", "biases", default=None, help="Comma list of biases or 'all'.")
@click.option("--backend", type=click.Choice(["synthetic", "llm"]), default=None)
@click.option("--profiles", default=None, help="Comma list of profile kinds or 'all'.")
@click.option("--strengths", default=None, help="Comma list, e.g. 0,0.33,0.67,1.0.")
@click.option("--n", type=click.IntRange(1), default=None, help="Scenarios per bias.")
@click.pass_context
def run_cmd(ctx, biases, backend, profiles, strengths, n):
    """Run the profile x strength x scenario factorial."""
    sec = _section(ctx, "run")
    backend = _pick(backend, sec, "backend", "synthetic")
    params = {
        "biases": _biases(_pick(biases, sec, "biases", "all")),
        "profiles": _profiles(_pick(profiles, sec, "profiles", "all")),
        "strengths": _strengths(_pick(strengths, sec, "strengths", "1.0")),
        "n": int(_pick(n, sec, "n", 100)),
        "backend": backend,
        "choice_noise": float(sec.get("choice_noise", 0.10)),
    }
    if backend == "llm":
        params["endpoint"] = dict(sec.get("endpoint") or {})
        _endpoint_cfg(params["endpoint"])
    _go(ctx, "run", params)


@main.command("estimate")
@click.argument("records", nargs=-1, type=click.Path(dir_okay=False))
@click.pass_context
def estimate_cmd(ctx, records):
    """Estimate parameters per (bias, profile, strength, backend, model)."""
    paths = list(records) or [str(ctx.obj["out"] / RECORDS_FILE)]
    _go(ctx, "estimate", {"records": [str(Path(r).resolve()) for r in paths]})


@main.command("validate")
@click.argument("estimates", required=False, type=click.Path(dir_okay=False))
@click.option("--benchmarks", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--reference-table/--no-reference-table", default=True, show_default=True)
@click.pass_context
def validate_cmd(ctx, estimates, benchmarks, reference_table):
    """Criteria C1-C4 and tiers from an estimates CSV."""
    sec = _section(ctx, "validate")
    path = estimates or str(ctx.obj["out"] / ESTIMATES_FILE)
    bench = _pick(benchmarks, sec, "benchmarks", None)
    _go(ctx, "validate", {
        "estimates": str(Path(path).resolve()),
        "benchmarks": str(Path(bench).resolve()) if bench else None,
        "delta": float(sec.get("delta", 0.0)),
        "reference_table": reference_table,
    })


@main.command("abm")
@click.option("--mode", type=click.Choice(["table", "single"]), default="table", show_default=True)
@click.option("--replications", type=click.IntRange(2), default=None)
@click.option("--periods", type=click.IntRange(100), default=None)
@click.pass_context
def abm_cmd(ctx, mode, replications, periods):
    """Momentum table (or one configured market with --mode single)."""
    from behavcal.abm.config import MarketConfig

    sec = _section(ctx, "abm")
    market = dict(sec.get("market") or {})
    market.pop("seed", None)
    if replications is not None:
        market["replications"] = replications
    if periods is not None:
        market["periods"] = periods
    try:
        market = MarketConfig.from_dict({**market, "seed": 0}).to_dict()
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad market config: {e}") from e
    market.pop("seed")
    _go(ctx, "abm", {"market": market, "mode": mode})


@main.command("power")
@click.option("--reps", type=click.IntRange(1000), default=None)
@click.option("--spec", "names", default=None, help="Comma list of spec names (default: all).")
@click.pass_context
def power_cmd(ctx, reps, names):
    """Monte Carlo power and null size for each design."""
    sec = _section(ctx, "power")
    specs = default_power_specs()
    for name, fields in (sec.get("specs") or {}).items():
        specs[name] = {**specs.get(name, {}), **fields}
    wanted = _split(names)
    if wanted:
        missing = set(wanted) - set(specs)
        if missing:
            raise ConfigError(f"unknown power specs: {sorted(missing)}")
        specs = {k: v for k, v in specs.items() if k in wanted}
    _go(ctx, "power", {"specs": specs, "reps": int(_pick(reps, sec, "reps", 10_000))})


@main.command("adversarial")
@click.option("--backend", type=click.Choice(["synthetic", "llm"]), default=None)
@click.option("--profiles", default=None)
@click.option("--repeats", type=click.IntRange(1), default=None)
@click.option("--catalog", "catalogs", multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def adversarial_cmd(ctx, backend, profiles, repeats, catalogs):
    """Adversarial pass rates per bias and profile."""
    sec = _section(ctx, "adversarial")
    backend = _pick(backend, sec, "backend", "synthetic")
    params = {
        "backend": backend,
        "profiles": _profiles(_pick(profiles, sec, "profiles", "all")),
        "repeats": int(_pick(repeats, sec, "repeats", 10)),
        "catalogs": [str(Path(c).resolve()) for c in (list(catalogs) or sec.get("catalogs") or [])],
    }
    if backend == "llm":
        params["endpoint"] = dict(sec.get("endpoint") or _section(ctx, "run").get("endpoint") or {})
        _endpoint_cfg(params["endpoint"])
    _go(ctx, "adversarial", params)


@main.command("report")
@click.option("--source", type=click.Path(file_okay=False), default=None, help="Directory holding earlier outputs.")
@click.pass_context
def report_cmd(ctx, source):
    """Collect the text tables of earlier commands into one report."""
    _go(ctx, "report", {"source": str(Path(source or ctx.obj["out"]).resolve())})


@main.command("replay")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def replay_cmd(ctx, manifest):
    """Rerun a command from its manifest into --out."""
    m = replay(manifest, ctx.obj["out"], ctx.obj["jobs"])
    _echo(f"replayed {m.command} ({m.config_hash[:12]})")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
