"""Command-line client for the scoring service.

Every command serializes its arguments into a request against the HTTP
API.  By default the application is served in-process (no network, same
contract); pass ``--server URL`` to talk to a running instance instead,
or use ``hubrank serve`` to start one.
"""

from __future__ import annotations

import asyncio
import json
import os
from pathlib import Path

import click
import httpx


def _post_remote(server: str, path: str, payload: dict) -> httpx.Response:
    with httpx.Client(base_url=server, timeout=None) as client:
        return client.post(path, json=payload)


def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service import create_app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://hubrank.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


class _Context:
    def __init__(self, server: str | None, as_json: bool, precision: int):
        self.server = server
        self.as_json = as_json
        self.precision = precision

    def fmt(self, value: float) -> str:
        return f"{value:.{self.precision}g}"

    def post(self, path: str, payload: dict) -> dict:
        if self.server:
            response = _post_remote(self.server, path, payload)
        else:
            response = _post_in_process(path, payload)
        if response.status_code != 200:
            try:
                doc = response.json()
                detail = doc.get("detail", response.text)
                if isinstance(detail, list):  # pydantic validation errors
                    detail = "; ".join(str(item.get("msg", item)) for item in detail)
                error = doc.get("error", f"HTTP {response.status_code}")
            except ValueError:
                error, detail = f"HTTP {response.status_code}", response.text
            raise click.ClickException(f"{error}: {detail}")
        return response.json()

    def emit(self, doc: dict) -> None:
        click.echo(json.dumps(doc, indent=2))


@click.group()
@click.option("--server", default=None, metavar="URL", help="Remote service URL (default: run in-process).")
@click.option("--json", "as_json", is_flag=True, help="Print raw JSON responses.")
@click.option("--precision", default=6, show_default=True, help="Significant digits for numeric output.")
@click.pass_context
def main(ctx: click.Context, server: str | None, as_json: bool, precision: int) -> None:
    """Score, rank, verify and tune against a model-hub feature store."""
    if precision < 1:
        raise click.ClickException("--precision must be >= 1")
    ctx.obj = _Context(server, as_json, precision)


@main.command()
@click.option("--features", required=True, type=click.Path(), help="PTMF feature file.")
@click.option("--labels", required=True, type=click.Path(), help="Label file (CSV indices or PTMF targets).")
@click.option("--task", "task_kind", type=click.Choice(["classification", "regression"]), default="classification", show_default=True)
@click.option("--num-classes", type=int, default=None, help="Class count override for classification labels.")
@click.option("--backend", type=click.Choice(["naive", "svd_optimized", "fixed_point"]), default="fixed_point", show_default=True)
@click.option("--dump-head", type=click.Path(), default=None, help="Write the predictive head to this path.")
@click.option("--verbose", is_flag=True, help="Also print per-dimension solutions.")
@click.pass_obj
def logme(ctx: _Context, features, labels, task_kind, num_classes, backend, dump_head, verbose) -> None:
    """Score one feature file against task labels."""
    doc = ctx.post(
        "/logme",
        {
            "features_path": os.fspath(Path(features).absolute()),
            "labels_path": os.fspath(Path(labels).absolute()),
            "task_kind": task_kind,
            "num_classes": num_classes,
            "backend": backend,
            "dump_head_path": os.fspath(Path(dump_head).absolute()) if dump_head else None,
        },
    )
    if ctx.as_json:
        ctx.emit(doc)
        return
    if verbose:
        for sol in doc["per_dimension"]:
            click.echo(
                f"dimension {sol['dimension']}: evidence/n={ctx.fmt(sol['normalized_evidence'])} "
                f"alpha={ctx.fmt(sol['alpha'])} beta={ctx.fmt(sol['beta'])} "
                f"iterations={sol['iterations']} converged={sol['converged']}"
            )
        for skip in doc["skipped"]:
            click.echo(f"dimension {skip['dimension']}: skipped ({skip['reason']})")
    click.echo(ctx.fmt(doc["logme"]))


@main.command()
@click.option("--manifest", required=True, type=click.Path(), help="Hub manifest (JSON).")
@click.option("--k", "top_k", default=3, show_default=True, help="How many top models to list.")
@click.option("--backend", type=click.Choice(["naive", "svd_optimized", "fixed_point"]), default="fixed_point", show_default=True)
@click.pass_obj
def rank(ctx: _Context, manifest, top_k, backend) -> None:
    """Score and rank every model declared in a hub manifest."""
    doc = ctx.post(
        "/rank",
        {
            "manifest_path": os.fspath(Path(manifest).absolute()),
            "top_k": top_k,
            "backend": backend,
        },
    )
    if ctx.as_json:
        ctx.emit(doc)
        return
    width = max(len(m["id"]) for m in doc["models"])
    header = f"{'rank':>4}  {'model':<{width}}  {'score':>12}"
    has_truth = any(m.get("truth") is not None for m in doc["models"])
    if has_truth:
        header += f"  {'truth':>10}"
    click.echo(header)
    for m in doc["models"]:
        line = f"{m['rank']:>4}  {m['id']:<{width}}  {ctx.fmt(m['score']):>12}"
        if has_truth:
            truth = m.get("truth")
            line += f"  {ctx.fmt(truth) if truth is not None else '-':>10}"
        click.echo(line)
    if doc["tau_w"] is not None:
        click.echo(f"tau={ctx.fmt(doc['tau'])} tau_w={ctx.fmt(doc['tau_w'])}")
    elif doc["tau_note"]:
        click.echo(f"correlation unavailable: {doc['tau_note']}")
    click.echo("top-{}: {}".format(top_k, ", ".join(doc["top_k"])))


@main.command()
@click.option("--features", required=True, type=click.Path())
@click.option("--labels", required=True, type=click.Path())
@click.option("--task", "task_kind", type=click.Choice(["classification", "regression"]), default="classification", show_default=True)
@click.option("--class", "class_index", default=0, show_default=True, help="Label dimension to sample.")
@click.option("--num-classes", type=int, default=None)
@click.option("--t-range", default="1e-3:1e3", show_default=True, metavar="MIN:MAX")
@click.option("--points", default=200, show_default=True)
@click.pass_obj
def curve(ctx: _Context, features, labels, task_kind, class_index, num_classes, t_range, points) -> None:
    """Emit CSV samples (t, f(t)) of the scalar update map."""
    try:
        lo, hi = (float(part) for part in t_range.split(":"))
    except ValueError:
        raise click.ClickException(f"--t-range must look like 1e-3:1e3, got {t_range!r}")
    doc = ctx.post(
        "/curve",
        {
            "features_path": os.fspath(Path(features).absolute()),
            "labels_path": os.fspath(Path(labels).absolute()),
            "task_kind": task_kind,
            "class_index": class_index,
            "num_classes": num_classes,
            "t_min": lo,
            "t_max": hi,
            "points": points,
        },
    )
    if ctx.as_json:
        ctx.emit(doc)
        return
    click.echo("t,f_t")
    for t, ft in doc["rows"]:
        click.echo(f"{t:.{ctx.precision}g},{ft:.{ctx.precision}g}")


@main.command()
@click.option("--features", required=True, type=click.Path())
@click.option("--labels", required=True, type=click.Path())
@click.option("--task", "task_kind", type=click.Choice(["classification", "regression"]), default="classification", show_default=True)
@click.option("--num-classes", type=int, default=None)
@click.option("--oracle", is_flag=True, help="Also cross-check one dimension against the brute-force grid search.")
@click.option("--class", "class_index", default=0, show_default=True, help="Label dimension for --oracle.")
@click.pass_obj
def verify(ctx: _Context, features, labels, task_kind, num_classes, oracle, class_index) -> None:
    """Report the convergence guarantee for each label dimension."""
    doc = ctx.post(
        "/verify",
        {
            "features_path": os.fspath(Path(features).absolute()),
            "labels_path": os.fspath(Path(labels).absolute()),
            "task_kind": task_kind,
            "num_classes": num_classes,
            "oracle": oracle,
            "class_index": class_index,
        },
    )
    if ctx.as_json:
        ctx.emit(doc)
        return
    click.echo(f"rank={doc['rank']} n={doc['n']}")
    for dim in doc["dimensions"]:
        if dim.get("skipped"):
            click.echo(f"dimension {dim['dimension']}: skipped ({dim['skipped']})")
            continue
        click.echo(
            f"dimension {dim['dimension']}: guaranteed={dim['guaranteed']} "
            f"rank_condition={dim['rank_condition']} "
            f"ordering_statistic={ctx.fmt(dim['ordering_statistic'])} "
            f"slope_at_infinity={ctx.fmt(dim['slope_at_infinity'])}"
        )
    check = doc.get("oracle_check")
    if check:
        click.echo(
            f"oracle check (dimension {check['dimension']}): "
            f"solver evidence/n={ctx.fmt(check['iterative']['normalized_evidence'])} "
            f"grid max={ctx.fmt(check['oracle_normalized_evidence'])} "
            f"difference={ctx.fmt(check['iterative_minus_oracle'])}"
        )


@main.command()
@click.option("--n", default=10000, show_default=True)
@click.option("--d", "dim", default=1024, show_default=True)
@click.option("--c", "num_classes", default=100, show_default=True)
@click.option("--algos", default="naive,svd_optimized,fixed_point", show_default=True, help="Comma-separated backends to time.")
@click.option("--repeats", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_obj
def bench(ctx: _Context, n, dim, num_classes, algos, repeats, seed) -> None:
    """Time the maximization backends on synthetic data."""
    backends = [token.strip() for token in algos.split(",") if token.strip()]
    doc = ctx.post(
        "/bench",
        {
            "n": n,
            "dim": dim,
            "num_classes": num_classes,
            "backends": backends,
            "repeats": repeats,
            "seed": seed,
        },
    )
    if ctx.as_json:
        ctx.emit(doc)
        return
    click.echo(f"n={doc['n']} D={doc['dim']} C={doc['num_classes']} max_disagreement={doc['max_disagreement']:.2e}")
    for t in doc["backends"]:
        click.echo(
            f"{t['backend']:<14} score={ctx.fmt(t['logme'])} "
            f"mean={t['seconds_mean']:.3f}s min={t['seconds_min']:.3f}s max={t['seconds_max']:.3f}s"
        )


@main.command(name="btune-toy")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON experiment config.")
@click.option("--lam", type=float, default=None, help="Override the trade-off weight.")
@click.option("--seed", type=int, default=None, help="Override the seed.")
@click.pass_obj
def btune_toy(ctx: _Context, config_path, lam, seed) -> None:
    """Run the toy multi-teacher tuning experiment; emits the report as JSON."""
    config: dict = {}
    if config_path:
        config = json.loads(Path(config_path).read_text(encoding="utf-8"))
    tune = config.setdefault("tune", {})
    if lam is not None:
        tune["lambda"] = lam
    if seed is not None:
        tune["seed"] = seed
    doc = ctx.post("/btune", {"config": config})
    ctx.emit(doc)


@main.command()
@click.option("--head", required=True, type=click.Path(), help="Stored predictive head (JSON).")
@click.option("--features", required=True, type=click.Path(), help="PTMF query features.")
@click.pass_obj
def predict(ctx: _Context, head, features) -> None:
    """Predictive means and variances of a stored head on query features."""
    doc = ctx.post(
        "/predict",
        {
            "head_path": os.fspath(Path(head).absolute()),
            "features_path": os.fspath(Path(features).absolute()),
        },
    )
    if ctx.as_json:
        ctx.emit(doc)
        return
    dims = doc["dimensions"]
    click.echo("sample," + ",".join(f"mean_{c},var_{c}" for c in dims))
    for i, (means, variances) in enumerate(zip(doc["means"], doc["variances"])):
        cells = []
        for mean, var in zip(means, variances):
            cells.append(ctx.fmt(mean))
            cells.append(ctx.fmt(var))
        click.echo(f"{i}," + ",".join(cells))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8020, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main(prog_name="hubrank")
