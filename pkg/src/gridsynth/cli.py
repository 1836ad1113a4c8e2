"""Command-line interface: ``gridsynth run | compare | fixtures synth``."""
from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import pipeline
from .errors import ConfigError, GridSynthError
from .fixtures import bundled_config, synth_town

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger("gridsynth")


def _setup_logging():
    level = os.environ.get("GRIDSYNTH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def _fail(exc: Exception, stage: str, out: Path | None):
    if isinstance(exc, pipeline.StageError):
        payload = exc.to_dict()
    else:
        payload = {"error": {"stage": stage, "type": type(exc).__name__, "message": str(exc)}}
    text = json.dumps(payload, indent=1)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    click.echo(text, err=True)
    sys.exit(2 if isinstance(exc, ConfigError) else 1)


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


@click.group()
@click.version_option(package_name="artifact", prog_name="gridsynth")
def main():
    """Synthesize distribution grid models from open map data."""
    _setup_logging()


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="TOML run configuration.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory (overrides run.out).")
@click.option("--seed", type=int, help="Override run.seed.")
@click.option("--data", multiple=True, type=click.Choice(pipeline.DATA_SOURCES), help="Data source(s) to run.")
@click.option("--transformers", multiple=True, type=click.Choice(pipeline.TRANSFORMER_MODES),
              help="Transformer mode(s) to run.")
@click.option("--cap0", type=int, help="Initial LV cable capacity in kW.")
@click.option("--n", "n_param", type=int, help="IP-CCE schedule parameter N.")
@click.option("--cce", type=click.Choice(["ip", "nb"]), help="Capacity estimation loop.")
@click.option("--exclude-footpaths", is_flag=True, default=None, help="Keep LV cables off footpaths.")
@click.option("--debug-graph", is_flag=True, default=None, help="Also dump the attached street graph as GeoJSON.")
@click.option("--set", "sets", multiple=True, metavar="SECTION.KEY=VALUE", help="Override any config key.")
def run(config_path, out, seed, data, transformers, cap0, n_param, cce, exclude_footpaths, debug_graph, sets):
    """Run the full pipeline for every variant in the config."""
    overrides = {}
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise click.BadParameter(f"expected SECTION.KEY=VALUE, got {item!r}", param_hint="--set")
        overrides[key.strip()] = _parse_value(value.strip())
    flags = {"run.seed": seed, "variant.data": list(data) or None, "variant.transformers": list(transformers) or None,
             "lv.cap0": cap0, "lv.n": n_param, "lv.cce": cce, "lv.exclude_footpaths": exclude_footpaths,
             "run.debug_graph": debug_graph}
    overrides.update({k: v for k, v in flags.items() if v is not None})
    if out is not None:
        overrides["run.out"] = str(out.resolve())
    try:
        cfg = pipeline.load_config(config_path, overrides)
    except (GridSynthError, OSError, tomllib.TOMLDecodeError) as exc:
        _fail(exc, "config", out)
    try:
        results = pipeline.run(cfg)
    except GridSynthError as exc:
        _fail(exc, "config" if isinstance(exc, ConfigError) else "run", cfg.out)
    for (d, t), res in results.items():
        caps = res.model.lv_capacity
        click.echo(f"{d},{t}: {len(res.model.substations)} transformer(s), ring {res.model.ring['length_m']:.0f} m, "
                   f"LV capacity {caps['capacity_kw']} kW -> {res.out_dir}")


@main.command()
@click.argument("models", nargs=-1, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--ref", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Reference model JSON.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("compare"), show_default=True)
@click.option("--bin-width", type=float, default=1.0, show_default=True, help="Loading histogram bin width in %.")
@click.option("--normalized", is_flag=True, help="Compare histogram frequencies instead of counts.")
def compare(models, ref, out, bin_width, normalized):
    """Compare grid models (and optionally a reference) metric by metric."""
    try:
        rep = pipeline.compare(list(models), ref, out, bin_width, normalized)
    except GridSynthError as exc:
        _fail(exc, "compare", out)
    width = max(len(lab) for lab in rep.labels)
    for lab, row in zip(rep.labels, rep.similarity):
        click.echo(f"{lab:<{width}}  " + "  ".join(f"{v:8.3f}" for v in row))


@main.group()
def fixtures():
    """Synthetic test towns."""


@fixtures.command("synth")
@click.option("--buildings", type=int, default=40, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--stations", type=int, default=None, help="Number of known stations (default: one per 35 buildings).")
@click.option("--name", default="town", show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)
def synth(buildings, seed, stations, name, out):
    """Write a synthetic town with side tables and a ready-to-run config."""
    try:
        paths = synth_town(buildings, seed, n_stations=stations).write(out, name)
    except (ValueError, OSError) as exc:
        _fail(exc, "fixtures", out)
    for key, path in paths.items():
        click.echo(f"{key}: {path}")


@fixtures.command("bundled")
def bundled():
    """Print the path of the bundled 40-building town config."""
    click.echo(str(bundled_config()))


if __name__ == "__main__":
    main()
