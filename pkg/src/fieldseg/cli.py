"""Command-line surface wiring the toolkit into a reproducible workflow.

Configuration comes from a TOML file (``--config`` or the
``FIELDSEG_CONFIG`` environment variable); command-line flags override
file values. Exit codes: 0 ok, 1 usage/config error, 2 data error,
3 invariant violation.
"""

from __future__ import annotations

import datetime
import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import fields as dc_fields
from pathlib import Path

import click
import numpy as np

from . import baseline, metrics, pipeline, synth, tileio
from .errors import DataError, InvariantError, MissingPredictionsError
from .instances import Connectivity
from .raster import GeoTransform, Raster, TileTensor

_KNOWN_KEYS = {
    "inputs", "labels", "workdir", "predictions", "tile_size", "ratios",
    "seed", "threshold", "connectivity", "report_format", "cw",
}
_CW_KEYS = {f.name for f in dc_fields(baseline.CWParams)}


def _load_config(path: str | None) -> dict:
    if path is None:
        path = os.environ.get("FIELDSEG_CONFIG")
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as e:
        raise click.UsageError(f"cannot read config {path}: {e}")
    except tomllib.TOMLDecodeError as e:
        raise click.UsageError(f"bad TOML in {path}: {e}")
    unknown = set(cfg) - _KNOWN_KEYS
    if unknown:
        raise click.UsageError(
            f"unknown config keys: {', '.join(sorted(unknown))}")
    cw_unknown = set(cfg.get("cw", {})) - _CW_KEYS
    if cw_unknown:
        raise click.UsageError(
            f"unknown [cw] config keys: {', '.join(sorted(cw_unknown))}")
    return cfg


def _cw_params(cfg: dict) -> baseline.CWParams:
    return baseline.CWParams(**cfg.get("cw", {}))


def _conn(cfg: dict, flag: str | None) -> Connectivity:
    return Connectivity(flag or cfg.get("connectivity", "four"))


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="TOML config file (or set FIELDSEG_CONFIG).")
@click.pass_context
def cli(ctx, config_path):
    """Field boundary delineation toolkit."""
    ctx.obj = _load_config(config_path)


@cli.command()
@click.option("--stack", "stack_path", required=True, type=click.Path(),
              help='JSON list of {"path": ..., "date": "YYYY-MM-DD"}.')
@click.option("--start", required=True, help="Range start, YYYY-MM-DD.")
@click.option("--end", required=True, help="Range end, YYYY-MM-DD.")
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def composite(ctx, stack_path, start, end, out):
    """Median-composite rasters whose dates fall inside a range."""
    try:
        entries = json.loads(Path(stack_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read stack file {stack_path}: {e}") from e
    stack = []
    for rec in entries:
        r = tileio.read_tile(rec["path"])
        if not isinstance(r, Raster):
            raise DataError(f"{rec['path']} is not a raster record")
        stack.append((r, datetime.date.fromisoformat(rec["date"])))
    rng = pipeline.DateRange(datetime.date.fromisoformat(start),
                             datetime.date.fromisoformat(end))
    tileio.write_tile(pipeline.seasonal_median_composite(stack, rng), out)
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--composites", required=True,
              help="Comma-separated composite raster paths, one per season.")
@click.option("--tile-size", type=int, default=None)
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--prefix", default="tile")
@click.pass_context
def tile(ctx, composites, tile_size, out_dir, prefix):
    """Cut seasonal composites into model-input tiles."""
    size = tile_size or ctx.obj.get("tile_size", 224)
    rasters = []
    for p in composites.split(","):
        r = tileio.read_tile(p.strip())
        if not isinstance(r, Raster):
            raise DataError(f"{p} is not a raster record")
        rasters.append(r)
    tiles = pipeline.tile_grid(rasters, tile_size=size)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, t in enumerate(tiles):
        tileio.write_tile(t, out / f"{prefix}{i:04d}.fbt")
    click.echo(f"wrote {len(tiles)} tiles to {out_dir}")


@cli.command("rasterize-labels")
@click.option("--labels", "labels_path", required=True, type=click.Path(),
              help="GeoJSON-subset polygon file.")
@click.option("--width", type=int, required=True)
@click.option("--height", type=int, required=True)
@click.option("--origin-x", type=float, default=None)
@click.option("--origin-y", type=float, default=None)
@click.option("--pixel-size-x", type=float, default=None)
@click.option("--pixel-size-y", type=float, default=None)
@click.option("--epsg", default="EPSG:4326")
@click.option("--partial", is_flag=True,
              help="Dataset is partially labeled; nolabel covers only "
                   "border and interior pixels.")
@click.option("--out-prefix", required=True, type=click.Path())
def rasterize_labels(labels_path, width, height, origin_x, origin_y,
                     pixel_size_x, pixel_size_y, epsg, partial, out_prefix):
    """Rasterize vector field labels into border/interior/nolabel masks."""
    polys = pipeline.read_polygons(labels_path)
    geo = None
    if origin_x is not None:
        if None in (origin_y, pixel_size_x, pixel_size_y):
            raise click.UsageError("all four geo-transform flags are required")
        geo = GeoTransform(origin_x, origin_y, pixel_size_x, pixel_size_y, epsg)
    border, interior, nolabel = pipeline.labels_to_masks(
        polys, width, height, geo=geo, fully_labeled=not partial)
    tileio.write_tile(border, f"{out_prefix}_border.fbt")
    tileio.write_tile(interior, f"{out_prefix}_interior.fbt")
    tileio.write_tile(nolabel, f"{out_prefix}_nolabel.fbt")
    click.echo(f"wrote {out_prefix}_{{border,interior,nolabel}}.fbt")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--ratios", default=None, help="Comma-separated, e.g. 0.8,0.1,0.1")
@click.pass_context
def split(ctx, manifest_path, out, seed, ratios):
    """Assign deterministic train/val/test tags to a manifest."""
    man = pipeline.read_manifest(manifest_path)
    seed = seed if seed is not None else ctx.obj.get("seed", 0)
    if ratios is None:
        r = tuple(ctx.obj.get("ratios", (0.8, 0.1, 0.1)))
    else:
        r = tuple(float(x) for x in ratios.split(","))
    result = pipeline.random_split(man.entries, ratios=r, seed=seed)
    pipeline.write_manifest(result, out)
    counts = {s: len(result.subset(s)) for s in pipeline.SPLITS}
    click.echo(f"wrote {out}: " +
               " ".join(f"{s}={n}" for s, n in counts.items()))


@cli.command("synth")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--count", type=int, default=1)
@click.option("--seed", type=int, default=None)
@click.option("--size", type=int, default=224)
@click.option("--fields", type=int, default=10)
@click.option("--noise-std", type=float, default=0.0)
@click.option("--gap", type=int, default=2)
@click.option("--region", default="synthetic")
@click.option("--split-tag", default="test",
              type=click.Choice(["train", "val", "test"]))
@click.pass_context
def synth_cmd(ctx, out_dir, count, seed, size, fields, noise_std, gap,
              region, split_tag):
    """Generate synthetic scenes with exact ground truth."""
    base_seed = seed if seed is not None else ctx.obj.get("seed", 0)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count):
        spec = synth.SceneSpec(seed=base_seed + i, width=size, height=size,
                               n_fields=fields, noise_std=noise_std,
                               boundary_gap=gap)
        scene = synth.generate(spec)
        name = f"scene{i:04d}"
        paths = {
            "tile": out / f"{name}_tile.fbt",
            "border": out / f"{name}_border.fbt",
            "interior": out / f"{name}_interior.fbt",
            "nolabel": out / f"{name}_nolabel.fbt",
            "instances": out / f"{name}_instances.fbt",
        }
        tileio.write_tile(scene.tile, paths["tile"])
        tileio.write_tile(scene.border, paths["border"])
        tileio.write_tile(scene.interior, paths["interior"])
        tileio.write_tile(scene.nolabel, paths["nolabel"])
        tileio.write_tile(scene.instance_map, paths["instances"])
        pipeline.write_polygons(scene.polygons, out / f"{name}_polygons.json")
        entries.append(pipeline.ManifestEntry(
            name=name, tile=str(paths["tile"]), border=str(paths["border"]),
            interior=str(paths["interior"]), nolabel=str(paths["nolabel"]),
            instances=str(paths["instances"]), region=region, split=split_tag))
    man = pipeline.DatasetManifest(tuple(entries), seed=base_seed)
    pipeline.write_manifest(man, out / "manifest.jsonl")
    click.echo(f"wrote {count} scene(s) and manifest to {out_dir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--split", "split_tag", default="test")
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
def delineate(ctx, manifest_path, split_tag, out_dir):
    """Run the unsupervised Canny + watershed baseline on a split."""
    man = pipeline.read_manifest(manifest_path)
    params = _cw_params(ctx.obj)
    entries = man.subset(split_tag)
    if not entries:
        raise DataError(f"manifest has no '{split_tag}' entries")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for e in entries:
        t = tileio.read_tile(e.tile)
        if not isinstance(t, TileTensor):
            raise DataError(f"{e.tile} is not a tile record")
        border, instances = baseline.delineate(t, params)
        prob = Raster(border.data.astype(np.float32)[:, :, None], dtype="f32",
                      geo=border.geo)
        tileio.write_tile(prob, out / f"{e.name}_border.fbt")
        tileio.write_tile(instances, out / f"{e.name}_instances.fbt")
    click.echo(f"delineated {len(entries)} tile(s) into {out_dir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--split", "split_tag", default="test")
@click.option("--pred-dir", required=True, type=click.Path())
@click.option("--heads", default="border,interior",
              help="Comma-separated subset of border,interior.")
@click.option("--threshold", "thresh", type=float, default=None)
@click.option("--connectivity", "conn_flag", default=None,
              type=click.Choice(["four", "eight"]))
@click.option("--min-instance-area", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the JSON report here instead of stdout.")
@click.option("--format", "fmt", default=None,
              type=click.Choice(["json", "table"]))
@click.pass_context
def evaluate(ctx, manifest_path, split_tag, pred_dir, heads, thresh,
             conn_flag, min_instance_area, out_path, fmt):
    """Evaluate predictions for a manifest split."""
    man = pipeline.read_manifest(manifest_path)
    head_tuple = tuple(h.strip() for h in heads.split(",") if h.strip())
    for h in head_tuple:
        if h not in metrics.HEADS:
            raise click.UsageError(f"unknown head {h!r}")
    cfg = metrics.EvalConfig(
        threshold=thresh if thresh is not None else ctx.obj.get("threshold", 0.5),
        connectivity=_conn(ctx.obj, conn_flag),
        min_instance_area=min_instance_area,
        heads=head_tuple,
    )
    report = metrics.evaluate(man, split_tag, pred_dir, cfg)
    fmt = fmt or ctx.obj.get("report_format", "json")
    text = report.to_json() if fmt == "json" else metrics.render_table(report)
    if out_path:
        Path(out_path).write_text(report.to_json())
        click.echo(f"wrote {out_path}")
        if fmt == "table":
            click.echo(text)
    else:
        click.echo(text)


@cli.command()
@click.option("--report", "report_path", required=True, type=click.Path())
def report(report_path):
    """Render a stored JSON metrics report as a text table."""
    try:
        doc = json.loads(Path(report_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read report {report_path}: {e}") from e
    heads = {}
    for h, m in doc.get("heads", {}).items():
        heads[h] = None if m is None else metrics.HeadMetrics(
            f1=m["f1"], accuracy=m["accuracy"], miou=m["miou"],
            p_at_iou=m["p_at_iou"], undefined=tuple(m.get("undefined", ())))
    rep = metrics.MetricsReport(heads=heads, n_images=doc.get("n_images", 0),
                                threshold=doc.get("threshold", 0.5),
                                iou_threshold=doc.get("iou_threshold", 0.95))
    click.echo(metrics.render_table(rep))


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as e:
        click.echo(f"usage error: {e.format_message()}", err=True)
        return 1
    except MissingPredictionsError as e:
        click.echo("data error: missing prediction files:", err=True)
        for p in e.missing:
            click.echo(f"  {p}", err=True)
        return 2
    except DataError as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except InvariantError as e:
        click.echo(f"invariant violation: {e}", err=True)
        return 3
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        return 1


if __name__ == "__main__":
    sys.exit(main())
