"""Command-line front end: classify corpora, rasterize maps, check the
implication matrix, and render scenarios.

Exit codes: 0 success, 1 usage or input error, 2 per-scenario evaluation
errors, 3 implication violation.  Every flag can also be set through an
ENTK_-prefixed environment variable.
"""

import concurrent.futures
import csv
import io
import math
import sys
from pathlib import Path

import click

from . import relations, render, workspace_map
from .definitions import DEFINITION_IDS, evaluate_all
from .environment import (
    DefinitionParams,
    ScenarioError,
    effective_environment,
    load_scenario,
)
from .relations import GenParams

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


@click.group(context_settings=CONTEXT_SETTINGS)
def main():
    """Tether entanglement analysis toolkit."""


def _override_params(params, d_max, delta, beta_mode, safe_base):
    kwargs = {
        "d_max": params.d_max if d_max is None else d_max,
        "delta": params.delta if delta is None else (math.inf if delta in ("inf", "") else float(delta)),
        "beta_mode": params.beta_mode if beta_mode is None else beta_mode,
        "safe_base": params.safe_base if safe_base is None else safe_base,
        "samples_per_unit": params.samples_per_unit,
        "relaxed_base": params.relaxed_base,
    }
    return DefinitionParams(**kwargs)


def _load_corpus(corpus):
    corpus = Path(corpus)
    files = sorted(corpus.glob("*.json"))
    if not files:
        raise click.ClickException(f"no scenario files in {corpus}")
    return files


def _classify_one(path, d_max, delta, beta_mode, safe_base):
    try:
        scenario = load_scenario(path.read_bytes())
        scenario = type(scenario)(
            id=scenario.id if scenario.id != "scenario" else path.stem,
            dimension=scenario.dimension,
            environment=scenario.environment,
            robots=scenario.robots,
            focus=scenario.focus,
            epsilon=scenario.epsilon,
            params=_override_params(scenario.params, d_max, delta, beta_mode, safe_base),
        )
        verdicts = evaluate_all(scenario)
        return path.stem, scenario, {d: v for d, v in verdicts}, None
    except (ScenarioError, ValueError) as exc:
        return path.stem, None, None, str(exc)


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False), envvar="ENTK_CORPUS")
@click.option("--out", required=True, type=click.Path(file_okay=False), envvar="ENTK_OUT")
@click.option("--d-max", type=float, default=None, envvar="ENTK_D_MAX")
@click.option("--delta", type=str, default=None, envvar="ENTK_DELTA")
@click.option("--beta-mode", type=click.Choice(["off", "len-subpath"]), default=None, envvar="ENTK_BETA_MODE")
@click.option("--safe-base", type=click.Choice(["6", "7"]), default=None, envvar="ENTK_SAFE_BASE")
@click.option("--threads", type=int, default=1, envvar="ENTK_THREADS")
def classify(corpus, out, d_max, delta, beta_mode, safe_base, threads):
    """Evaluate every definition on every scenario in a corpus directory."""
    files = _load_corpus(corpus)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "renders").mkdir(exist_ok=True)
    safe_base_i = None if safe_base is None else int(safe_base)
    results = []
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_classify_one, f, d_max, delta, beta_mode, safe_base_i)
                for f in files
            ]
            results = [f.result() for f in futures]
    else:
        results = [_classify_one(f, d_max, delta, beta_mode, safe_base_i) for f in files]
    results.sort(key=lambda r: r[0])
    errors = [(sid, err) for sid, _, _, err in results if err]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario"] + [f"def{d}" for d in DEFINITION_IDS])
    md = ["| scenario | " + " | ".join(f"def{d}" for d in DEFINITION_IDS) + " |"]
    md.append("|---" * (len(DEFINITION_IDS) + 1) + "|")
    for sid, scenario, verdicts, err in results:
        if err:
            writer.writerow([sid] + ["error"] * len(DEFINITION_IDS))
            md.append(f"| {sid} | " + " | ".join(["error"] * len(DEFINITION_IDS)) + " |")
            continue
        states = [verdicts[d].state for d in DEFINITION_IDS]
        writer.writerow([sid] + states)
        md.append(f"| {sid} | " + " | ".join(states) + " |")
        svg = render.scenario_svg(scenario)
        (out / "renders" / f"{sid}.svg").write_text(svg, encoding="utf-8")
    (out / "verdicts.csv").write_text(buf.getvalue(), encoding="utf-8")
    (out / "verdicts.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    for sid, err in errors:
        click.echo(f"error: {sid}: {err}", err=True)
    click.echo(f"classified {len(results) - len(errors)}/{len(results)} scenarios -> {out}")
    if errors:
        sys.exit(2)


@main.command(name="map")
@click.option("--scenario", "scenario_file", required=True, type=click.Path(exists=True, dir_okay=False), envvar="ENTK_SCENARIO")
@click.option("--def", "def_id", required=True, type=int, envvar="ENTK_DEF")
@click.option("--resolution", type=int, default=200, show_default=True, envvar="ENTK_RESOLUTION")
@click.option("--d-max", type=float, default=None, envvar="ENTK_D_MAX")
@click.option("--out", required=True, type=click.Path(file_okay=False), envvar="ENTK_OUT")
def map_cmd(scenario_file, def_id, resolution, d_max, out):
    """Rasterize the reachable workspace of one definition."""
    if def_id not in (1, 2, 4, 6, 7, 8, 9):
        raise click.ClickException(
            f"definition {def_id} has no reachable-workspace map: the "
            "crossing-count definition depends on the other robots' tethers "
            "and the relaxed variants have no point-set characterization"
        )
    scenario = load_scenario(Path(scenario_file).read_bytes())
    eff = effective_environment(scenario)
    env = scenario.environment
    if eff.inflated:
        raise click.ClickException("workspace maps are defined for single-robot scenarios")
    anchor = scenario.focus_tether.anchor
    dm = scenario.params.d_max if d_max is None else d_max
    nemap = workspace_map.map_for_definition(env, anchor, def_id, cells=resolution, d_max=dm)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{scenario.id}-def{def_id}"
    (out / f"{stem}.pgm").write_bytes(workspace_map.to_pgm(nemap))
    (out / f"{stem}.json").write_text(workspace_map.to_json_rle(nemap), encoding="utf-8")
    (out / f"{stem}.svg").write_text(workspace_map.overlay_svg(nemap, env), encoding="utf-8")
    click.echo(f"wrote {stem}.pgm/.json/.svg to {out}")


@main.command()
@click.option("--trials", type=int, default=1000, show_default=True, envvar="ENTK_TRIALS")
@click.option("--seed", type=int, default=relations.DEFAULT_SEED, envvar="ENTK_SEED")
@click.option("--out", required=True, type=click.Path(file_okay=False), envvar="ENTK_OUT")
@click.option("--threads", type=int, default=1, envvar="ENTK_THREADS")
def matrix(trials, seed, out, threads):
    """Run the randomized implication-matrix suite."""
    if trials < 1:
        raise click.ClickException("--trials must be at least 1")
    del threads  # trials are evaluated in deterministic order
    gp = GenParams(seed=seed)
    report = relations.run_matrix(gp, trials)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "matrix.json").write_text(relations.report_to_json(report), encoding="utf-8")
    (out / "matrix.md").write_text(relations.report_to_markdown(report), encoding="utf-8")
    if trials < 100:
        click.echo("note: low trial count, results are low-power", err=True)
    violated = report.violated_pairs
    click.echo(
        f"evaluated {report.generated}/{report.trials} trials; "
        f"{len(violated)} marked pairs violated; "
        f"{len(report.witnessed_unmarked)} unmarked pairs separated"
    )
    if violated:
        for a, b in violated:
            click.echo(f"violated: {a} -> {b}", err=True)
        sys.exit(3)


@main.command(name="render")
@click.option("--scenario", "scenario_file", required=True, type=click.Path(exists=True, dir_okay=False), envvar="ENTK_SCENARIO")
@click.option("--out", required=True, type=click.Path(dir_okay=False), envvar="ENTK_OUT")
def render_cmd(scenario_file, out):
    """Render a scenario to SVG."""
    scenario = load_scenario(Path(scenario_file).read_bytes())
    svg = render.scenario_svg(scenario)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(svg, encoding="utf-8")
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
