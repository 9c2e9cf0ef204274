"""Command line interface.

  fedforest run        -- execute an experiment grid, writing results CSVs
  fedforest summarize  -- aggregate a results file into summary tables
  fedforest serve      -- run the coordinator HTTP service
  fedforest client     -- talk to a running coordinator (register/commit/request)
"""

import json
import logging
import os

import click

from .harness import ExperimentConfig, run_grid, summarize as summarize_results


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _ints(text):
    return tuple(int(v) for v in text.split(","))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info logging.")
def main(verbose):
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--dataset", default="ilpd",
              help="ilpd | bcd | hcc-synth | csv:PATH")
@click.option("--sites", default="2,4,6,8,10,16", help="Comma-separated site counts.")
@click.option("--drop", default="0,0.2,0.3,0.4,0.5,0.75",
              help="Comma-separated feature-drop fractions.")
@click.option("--method", default="additive,constant",
              help="Aggregation methods to evaluate.")
@click.option("--repeats", default=20, show_default=True)
@click.option("--trees", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Master seed.")
@click.option("--test-fraction", default=0.3, show_default=True)
@click.option("--pooled-test", is_flag=True,
              help="Evaluate on the pooled test set instead of per-site splits.")
@click.option("--schema", default=None, type=click.Path(exists=True),
              help="JSON column->kind schema (csv: datasets only).")
@click.option("--label", default=None, help="Label column (csv: datasets only).")
@click.option("--jobs", default=None, type=int,
              help="Worker processes (default: all cores).")
@click.option("--out", default="results", show_default=True)
def run(dataset, sites, drop, method, repeats, trees, seed, test_fraction,
        pooled_test, schema, label, jobs, out):
    """Run the experiment grid and write one record per (cell, repeat,
    site, model kind) to OUT/results.csv."""
    config = ExperimentConfig(
        dataset=dataset,
        site_counts=_ints(sites),
        drop_fractions=_floats(drop),
        methods=tuple(method.split(",")),
        repeats=repeats,
        n_trees=trees,
        test_fraction=test_fraction,
        master_seed=seed,
        out_dir=out,
        pooled_test=pooled_test,
        schema_path=schema,
        label_column=label,
        jobs=jobs,
    )
    path = run_grid(config)
    click.echo(f"results written to {path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="Results directory or results.csv file.")
@click.option("--out", default="summary", show_default=True)
@click.option("--seed", default=0, show_default=True,
              help="Seed for bootstrap confidence intervals.")
def summarize(in_path, out, seed):
    """Build per-cell and per-method summary tables from a results file."""
    if os.path.isdir(in_path):
        in_path = os.path.join(in_path, "results.csv")
    summarize_results(in_path, out, seed=seed)
    click.echo(f"summaries written to {out}")


@main.command()
@click.option("--addr", default=None,
              help="HOST:PORT (default $FEDFOREST_ADDR or 127.0.0.1:8000).")
def serve(addr):
    """Run the coordinator HTTP service."""
    from .coordinator import serve as serve_app

    serve_app(addr or os.environ.get("FEDFOREST_ADDR", "127.0.0.1:8000"))


@main.group()
@click.option("--addr", default=None,
              help="Coordinator base address, e.g. http://127.0.0.1:8000.")
@click.pass_context
def client(ctx, addr):
    """Thin client for a running coordinator."""
    addr = addr or "http://" + os.environ.get("FEDFOREST_ADDR", "127.0.0.1:8000")
    if not addr.startswith("http"):
        addr = "http://" + addr
    ctx.obj = addr


@client.command()
@click.argument("site_id")
@click.argument("features")
@click.pass_obj
def register(addr, site_id, features):
    """Register SITE_ID with a comma-separated FEATURES list."""
    from .coordinator import CoordinatorClient

    ack = CoordinatorClient(addr).register(site_id, features.split(","))
    click.echo(json.dumps(ack))


@client.command()
@click.argument("forest_json", type=click.Path(exists=True))
@click.pass_obj
def commit(addr, forest_json):
    """Commit a serialized forest document (JSON file)."""
    from .coordinator import CoordinatorClient
    from .federation import deserialize_forest

    with open(forest_json) as fh:
        forest = deserialize_forest(json.load(fh))
    ack = CoordinatorClient(addr).commit(forest)
    click.echo(json.dumps(ack))


@client.command()
@click.argument("site_id")
@click.option("--method", default="additive", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="-", help="Output file for the forest document.")
@click.pass_obj
def request(addr, site_id, method, seed, out):
    """Request the globally optimized local forest for SITE_ID."""
    from .coordinator import CoordinatorClient
    from .federation import serialize_forest

    forest = CoordinatorClient(addr).request_go_local(site_id, method, seed)
    doc = json.dumps(serialize_forest(forest))
    if out == "-":
        click.echo(doc)
    else:
        with open(out, "w") as fh:
            fh.write(doc + "\n")


if __name__ == "__main__":
    main()
