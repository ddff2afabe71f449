"""Command-line pipeline: ingest, abstract, estimate, simulate, baseline,
oracle, analyze, plus a seeded synthetic-corpus generator.

Every stage reads and writes plain files in the output directory, so
stages can be re-run independently and chained from shell scripts.  All
errors surface as a diagnostic on stderr and a non-zero exit status.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import abstraction, analysis, estimation, meanfield, oracle, synth
from .config import Settings, parse_year_range
from .corpus import CorpusError, load_corpus
from .hmm import HmmConfig

CLASS_MAP_FILE = "class_map.csv"
MODEL_FILE = "model.json"
TRAJECTORY_FILE = "trajectory.csv"


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def stage(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (CorpusError, ValueError, KeyError, OSError) as exc:
            _fail(str(exc))

    return wrapper


def common_options(func):
    func = click.option(
        "--config", "config_path", type=click.Path(exists=True), default=None,
        help="Key-value config file.",
    )(func)
    func = click.option(
        "--output", "output_dir", type=click.Path(file_okay=False), default="out",
        help="Directory for stage outputs.", show_default=True,
    )(func)
    func = click.option("--seed", type=int, default=None, help="Override the config seed.")(func)
    return func


def _settings(config_path, seed=None, **overrides) -> Settings:
    return Settings.load(config_path, seed=seed, **overrides)


def _outdir(output_dir) -> Path:
    path = Path(output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_log(settings: Settings):
    pubs, authors, affiliations = settings.corpus_paths()
    return load_corpus(
        pubs,
        authors,
        affiliations,
        year_window=(settings.year_min, settings.year_max),
        allow_unlisted_authors=settings.allow_unlisted_authors,
    )


def _load_classes(out: Path) -> abstraction.ClassMap:
    path = out / CLASS_MAP_FILE
    if not path.exists():
        raise ValueError(f"missing {path}; run the abstract stage first")
    return abstraction.ClassMap.from_csv(path)


def _load_model(out: Path) -> estimation.SmoothedModel:
    path = out / MODEL_FILE
    if not path.exists():
        raise ValueError(f"missing {path}; run the estimate stage first")
    return estimation.load_model(path)


@click.group()
def main():
    """Mean-field simulation of coauthorship collaboration dynamics."""


@main.command()
@common_options
@stage
def ingest(config_path, output_dir, seed):
    """Validate the corpus files and write a summary."""
    settings = _settings(config_path, seed)
    out = _outdir(output_dir)
    log = _load_log(settings)
    summary = {
        "authors": len(log.authors),
        "institutions": len(log.affiliations),
        "publications_total": len(log.all_publications),
        "publications_proceedings": len(log.publications),
        "per_year": {str(y): len(log.publications_in(y)) for y in log.years()},
    }
    with open(out / "corpus_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    click.echo(
        f"ingested {summary['publications_proceedings']} proceedings publications, "
        f"{summary['authors']} authors, {summary['institutions']} institutions"
    )


@main.command("abstract")
@common_options
@stage
def abstract_cmd(config_path, output_dir, seed):
    """Merge institutions into classes and write the class map."""
    settings = _settings(config_path, seed)
    out = _outdir(output_dir)
    log = _load_log(settings)
    dist = abstraction.ScientistDistribution.from_log(log)
    classes = abstraction.abstract_classes(
        dist,
        log.affiliations,
        protected_countries=settings.protected,
        metric=settings.dispersion_metric,
    )
    classes.to_csv(out / CLASS_MAP_FILE)
    click.echo(
        f"abstracted {len(dist.counts)} institutions into {classes.n_classes} classes"
    )


@main.command()
@common_options
@click.option("--years", default=None, help="Training year range, e.g. 2006-2008.")
@stage
def estimate(config_path, output_dir, seed, years):
    """Estimate contact and transition tables, smoothed across training years."""
    settings = _settings(config_path, seed, training_years=years)
    out = _outdir(output_dir)
    log = _load_log(settings)
    classes = _load_classes(out)
    bins = abstraction.ParameterBins()
    first, last = settings.training_range
    yearly = []
    for year in range(first, last + 1):
        contact = estimation.compute_contact(log, classes, year)
        kappa = estimation.compute_kappa(log, classes, bins, year)
        yearly.append((contact, kappa))
    config = HmmConfig(
        hidden_states=settings.hidden_states,
        max_iterations=settings.em_max_iterations,
        seed=settings.seed,
        tolerance=settings.em_tolerance,
        epsilon=settings.epsilon,
    )
    model = estimation.estimate_smoothed(yearly, config)
    estimation.save_model(model, out / MODEL_FILE)
    click.echo(
        f"estimated model from {len(yearly)} training years "
        f"({len(model.contact.weights)} contact pairs, {len(model.kappa.entries)} "
        f"transition entries, converged={model.converged})"
    )


def _simulation_years(settings: Settings, years_flag) -> int:
    if years_flag is None:
        return int(settings.simulate_years)
    if "-" in str(years_flag):
        lo, hi = parse_year_range(years_flag)
        return max(hi - lo + 1, 1)
    return max(int(years_flag), 1)


@main.command()
@common_options
@click.option("--years", default=None, help="Year count or range to simulate.")
@stage
def simulate(config_path, output_dir, seed, years):
    """Run the mean-field trajectory and write it as CSV."""
    settings = _settings(config_path, seed)
    out = _outdir(output_dir)
    log = _load_log(settings)
    classes = _load_classes(out)
    model = _load_model(out)
    space = meanfield.enumerate_states(classes)
    initial = estimation.initial_occupancy(log, classes, space)
    trajectory = meanfield.run_trajectory(
        initial,
        model,
        classes,
        _simulation_years(settings, years),
        space=space,
        weeks_per_year=settings.weeks_per_year,
        snapshot_cadence=settings.snapshot_cadence,
        weekly_rule=settings.weekly_rule,
        gate_scale=settings.gate_scale,
        dense_threshold=settings.dense_threshold,
    )
    meanfield.trajectory_to_csv(trajectory, out / TRAJECTORY_FILE)
    if settings.figures:
        from . import plots

        plots.plot_trajectory(trajectory, classes, out / "trajectory.png")
    click.echo(f"simulated {trajectory.snapshots[-1].year} year(s); wrote {TRAJECTORY_FILE}")


@main.command()
@common_options
@click.option("--years", default=None, help="Year count or range to simulate.")
@stage
def baseline(config_path, output_dir, seed, years):
    """Compare the estimated model against the uniform-contact baseline."""
    settings = _settings(config_path, seed)
    out = _outdir(output_dir)
    log = _load_log(settings)
    classes = _load_classes(out)
    model = _load_model(out)
    space = meanfield.enumerate_states(classes)
    initial = estimation.initial_occupancy(log, classes, space)
    uniform_contact = estimation.uniform_baseline(classes, model.contact.total())
    uniform_model = estimation.SmoothedModel(uniform_contact, model.kappa, model.hmm_config)
    n_years = _simulation_years(settings, years)
    kwargs = dict(
        space=space,
        weeks_per_year=settings.weeks_per_year,
        snapshot_cadence="yearly",
        weekly_rule=settings.weekly_rule,
        gate_scale=settings.gate_scale,
        dense_threshold=settings.dense_threshold,
    )
    estimated_run = meanfield.run_trajectory(initial, model, classes, n_years, **kwargs)
    uniform_run = meanfield.run_trajectory(initial, uniform_model, classes, n_years, **kwargs)
    est_report = analysis.class_report(estimated_run.final().values, classes, space)
    uni_report = analysis.class_report(uniform_run.final().values, classes, space)
    rows = analysis.baseline_comparison(est_report, uni_report)
    analysis.write_baseline_diff(out / "baseline_diff.csv", rows)
    if settings.figures:
        from . import plots

        plots.plot_baseline_diff(rows, out / "baseline_diff.png")
    click.echo("wrote baseline_diff.csv")


@main.command("oracle")
@common_options
@click.option("--agents", type=int, default=None, help="Override oracle population size.")
@click.option("--years", default=None, help="Year count or range to simulate.")
@stage
def oracle_cmd(config_path, output_dir, seed, agents, years):
    """Run the per-node stochastic reference simulation."""
    settings = _settings(config_path, seed)
    out = _outdir(output_dir)
    log = _load_log(settings)
    classes = _load_classes(out)
    model = _load_model(out)
    space = meanfield.enumerate_states(classes)
    initial = estimation.initial_occupancy(log, classes, space)
    n_agents = agents if agents is not None else settings.oracle_agents
    population = oracle.AgentPopulation.from_occupancy(space, initial, n_agents, settings.seed)
    run = oracle.simulate_agents(
        population,
        model,
        _simulation_years(settings, years),
        weeks_per_year=settings.weeks_per_year,
        weekly_rule=settings.weekly_rule,
        gate_scale=settings.gate_scale,
        matched=settings.oracle_matched,
    )
    run.to_csv(out / "oracle_trajectory.csv")
    message = f"simulated {n_agents} agents; wrote oracle_trajectory.csv"
    trajectory_path = out / TRAJECTORY_FILE
    if trajectory_path.exists() and settings.snapshot_cadence == "weekly":
        trajectory = meanfield.trajectory_from_csv(trajectory_path, space)
        result = oracle.compare_to_meanfield(run, trajectory)
        with open(out / "oracle_vs_meanfield.csv", "w", encoding="utf-8") as fh:
            fh.write("year,week,l1\n")
            for (year, week), value in zip(result.weeks, result.l1):
                fh.write(f"{year},{week},{float(value)!r}\n")
        message += f"; max weekly L1 vs mean-field = {result.max_l1:.4f}"
    click.echo(message)


@main.command()
@common_options
@click.option(
    "--subset",
    type=click.Choice(["all", "dutch"]),
    default=None,
    help="Class subset for the age report.",
)
@stage
def analyze(config_path, output_dir, seed, subset):
    """Produce the class, age and triad reports from a simulated trajectory."""
    settings = _settings(config_path, seed, subset=subset)
    out = _outdir(output_dir)
    classes = _load_classes(out)
    model = _load_model(out)
    space = meanfield.enumerate_states(classes)
    trajectory_path = out / TRAJECTORY_FILE
    if not trajectory_path.exists():
        raise ValueError(f"missing {trajectory_path}; run the simulate stage first")
    trajectory = meanfield.trajectory_from_csv(trajectory_path, space)
    final = trajectory.final().values

    class_rows = analysis.class_report(final, classes, space)
    analysis.write_class_report(
        out / "class_report.csv", class_rows, footnote=analysis.UNDERCOUNT_FOOTNOTE
    )
    if settings.subset == "dutch":
        chosen = classes.classes_in_country("NL")
        if not chosen:
            raise ValueError("no Dutch classes in the class map")
    else:
        chosen = None
    age_rows = analysis.age_report(final, space, chosen)
    analysis.write_age_report(
        out / "age_report.csv", age_rows, footnote=analysis.UNDERCOUNT_FOOTNOTE
    )
    triads = analysis.triad_report(model.contact, classes.class_ids())
    analysis.write_triad_report(out / "triad_report.csv", triads)
    if settings.figures:
        from . import plots

        plots.plot_class_report(class_rows, out / "class_report.png")
        plots.plot_age_report(age_rows, out / "age_report.png")
        plots.plot_triad_report(triads, out / "triad_report.png")
    click.echo("wrote class_report.csv, age_report.csv, triad_report.csv")


@main.command("synth")
@common_options
@click.option("--authors", "n_authors", type=int, default=120, show_default=True)
@click.option("--institutions", "n_institutions", type=int, default=18, show_default=True)
@click.option("--papers-per-year", type=int, default=60, show_default=True)
@click.option("--years", default="2006-2010", show_default=True, help="Publication year range.")
@stage
def synth_cmd(config_path, output_dir, seed, n_authors, n_institutions, papers_per_year, years):
    """Generate a seeded synthetic corpus and a ready-to-run config."""
    settings = _settings(config_path, seed)
    out = _outdir(output_dir)
    lo, hi = parse_year_range(years)
    publications, authors, affiliations = synth.generate_corpus(
        settings.seed,
        n_authors=n_authors,
        n_institutions=n_institutions,
        years=(lo, hi),
        papers_per_year=papers_per_year,
    )
    paths = synth.write_corpus(out, publications, authors, affiliations)
    config_lines = [
        f"publications = {paths['publications']}",
        f"authors = {paths['authors']}",
        f"affiliations = {paths['affiliations']}",
        f"seed = {settings.seed}",
        f"training_years = {lo}-{max(lo, hi - 2)}",
        "simulate_years = 2",
    ]
    with open(out / "synth.cfg", "w", encoding="utf-8") as fh:
        fh.write("\n".join(config_lines) + "\n")
    click.echo(
        f"wrote synthetic corpus ({len(publications)} publications, "
        f"{len(authors)} authors) and synth.cfg"
    )


if __name__ == "__main__":
    main()
