"""Command-line entry points: detect, gen, ablate.

Exit codes are a stable contract: 0 no shift, 3 shift detected, 1 runtime or
I/O error, 2 configuration violation. Every report embeds the fully resolved
configuration so a run can be reproduced from its own output.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import detector as _det
from .detector import DetectorConfig, PerturbConfig, make_metric, welch_t_test
from .embedio import EmbeddingSet, l2_normalize, load_auto, save_embv1, save_npy
from .errors import ConfigError, InvalidSplit, LabelsRequired, ShiftscopeError
from .sampling import (
    RngSeed,
    apply_class_mixture,
    dirichlet_mixture,
    disjoint_pair_indices,
    domain_split,
    gaussian_clusters,
    subsample_indices,
)
from .topology import RipsConfig, diagrams_to_csv, rips_h0, rips_h1

EXIT_NO_SHIFT = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SHIFT = 3

_CONFIG_ERRORS = (ConfigError, InvalidSplit, LabelsRequired)


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("SHIFTSCOPE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SHIFTSCOPE_SEED must be an integer, got {env!r}")
    return 0


def _set_threads(threads: int | None) -> None:
    if threads is None:
        return
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    try:
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _parse_class_list(text: str) -> list[int]:
    """Accepts forms like '0-4' or '0,2,7' or combinations '0-2,9'."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty class list: {text!r}")
    return out


def _parse_float_list(text: str) -> list[float]:
    vals = [float(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ConfigError(f"empty list: {text!r}")
    return vals


def _parse_int_list(text: str) -> list[int]:
    vals = [int(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ConfigError(f"empty list: {text!r}")
    return vals


def _save_auto(dataset: EmbeddingSet, path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".npy":
        save_npy(dataset, path)
    else:
        save_embv1(dataset, path)


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        click.echo(text)
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _report_csv(fields: dict) -> str:
    buf = io.StringIO()
    flat = {k: v for k, v in fields.items() if not isinstance(v, (dict, list))}
    writer = csv.DictWriter(buf, fieldnames=list(flat))
    writer.writeheader()
    writer.writerow(flat)
    return buf.getvalue().rstrip("\n")


@click.group()
def main() -> None:
    """Distribution-shift detection for embedding datasets."""


@main.command()
@click.argument("reference", type=click.Path())
@click.argument("candidate", type=click.Path())
@click.option("--test", type=click.Choice(["subsample", "perturbation"]), default="subsample")
@click.option("--metric", type=click.Choice(["energy", "local-energy", "swp"]), default="local-energy")
@click.option("--k", type=int, default=5, help="Neighborhood size for the local energy metric.")
@click.option("--subsample-size", type=int, default=1000)
@click.option("--samples", type=int, default=None, help="Subsamples per run (subsample test) or samples per level (perturbation test).")
@click.option("--runs", type=int, default=20)
@click.option("--alpha", type=float, default=0.05)
@click.option("--grid", type=str, default=None, help="Comma-separated ascending noise levels for the perturbation test.")
@click.option("--criterion-k", type=int, default=10)
@click.option("--threshold", type=float, default=0.80)
@click.option("--slices", type=int, default=50)
@click.option("--max-dim", type=int, default=1)
@click.option("--seed", type=int, default=None, help="Falls back to SHIFTSCOPE_SEED, then 0.")
@click.option("--no-normalize", is_flag=True, help="Skip per-row unit normalization of the inputs.")
@click.option("--threads", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Report path (stdout by default).")
@click.option("--format", "fmt", type=click.Choice(["json", "table", "csv"]), default="json")
@click.option("--dump-diagrams", type=click.Path(), default=None, help="Write persistence diagrams of both inputs as CSV (debugging aid).")
def detect(
    reference,
    candidate,
    test,
    metric,
    k,
    subsample_size,
    samples,
    runs,
    alpha,
    grid,
    criterion_k,
    threshold,
    slices,
    max_dim,
    seed,
    no_normalize,
    threads,
    out,
    fmt,
    dump_diagrams,
):
    """Compare CANDIDATE embeddings against REFERENCE embeddings."""
    try:
        _set_threads(threads)
        seed_val = _resolve_seed(seed)
        x = load_auto(reference)
        y = load_auto(candidate)
        if not no_normalize:
            x = l2_normalize(x)
            y = l2_normalize(y)
        rips = RipsConfig(max_dimension=max_dim)
        if dump_diagrams is not None:
            _dump_diagrams(x, y, rips, seed_val, dump_diagrams)
        if test == "subsample":
            cfg = DetectorConfig(
                metric=metric,
                subsample_size=subsample_size,
                samples_per_run=15 if samples is None else samples,
                runs=runs,
                alpha=alpha,
                seed=RngSeed(seed_val),
                k=k,
                slices=slices,
                rips=rips,
            )
            report = _det.subsample_shift_test(x, y, cfg)
        else:
            dcfg = DetectorConfig(
                metric=metric, seed=RngSeed(seed_val), k=k, slices=slices, rips=rips
            )
            pcfg = PerturbConfig(
                grid=_det.default_noise_grid() if grid is None else tuple(_parse_float_list(grid)),
                criterion_k=criterion_k,
                threshold=threshold,
                samples_per_level=3 if samples is None else samples,
                seed=RngSeed(seed_val),
            )
            report = _det.perturbation_shift_test(x, y, dcfg, pcfg)
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ShiftscopeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    if fmt == "json":
        text = json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
    elif fmt == "table":
        text = report.table()
    else:
        text = _report_csv(report.to_json_dict())
    _write_text(text, out)
    sys.exit(EXIT_SHIFT if report.decision else EXIT_NO_SHIFT)


def _dump_diagrams(x: EmbeddingSet, y: EmbeddingSet, rips: RipsConfig, seed: int, path) -> None:
    base = Path(path)
    for tag, ds in (("reference", x), ("candidate", y)):
        diags = [rips_h0(ds)]
        if rips.max_dimension >= 1 and ds.n >= 3:
            diags.append(rips_h1(ds, rips))
        diagrams_to_csv(base.with_name(f"{base.stem}.{tag}{base.suffix or '.csv'}"), diags)


@main.group()
def gen() -> None:
    """Generate synthetic embedding sets and shifted counterparts."""


@gen.command("clusters")
@click.argument("out", type=click.Path())
@click.option("--classes", type=int, default=10)
@click.option("--per-class", type=int, default=700)
@click.option("--dim", type=int, default=128)
@click.option("--sep", type=float, default=6.0)
@click.option("--seed", type=int, default=None)
def gen_clusters(out, classes, per_class, dim, sep, seed):
    """Labeled Gaussian clusters with unit variance and given center separation."""
    try:
        ds = gaussian_clusters(classes, per_class, dim, sep, RngSeed(_resolve_seed(seed)))
        _save_auto(ds, out)
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ShiftscopeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


@gen.command("subpop")
@click.argument("input_path", metavar="INPUT", type=click.Path())
@click.argument("out_ref", type=click.Path())
@click.argument("out_cand", type=click.Path())
@click.option("--classes", "classes_text", type=str, required=True, help="Classes to down-weight, e.g. '0-2,7'.")
@click.option("--fraction", type=float, default=0.10, show_default=True)
@click.option("--seed", type=int, default=None)
def gen_subpop(input_path, out_ref, out_cand, classes_text, fraction, seed):
    """Subpopulation shift: candidate keeps only a fraction of the listed classes."""
    try:
        if not 0.0 < fraction <= 1.0:
            raise ConfigError("--fraction must lie in (0, 1]")
        ds = load_auto(input_path)
        if ds.labels is None:
            raise LabelsRequired("subpop generation needs a labeled input")
        targets = set(_parse_class_list(classes_text))
        num_classes = int(ds.labels.max()) + 1
        fractions = np.ones(num_classes)
        for c in targets:
            if c >= num_classes:
                raise ConfigError(f"class {c} not present in input")
            fractions[c] = fraction
        from .sampling import ClassMixture, stratified_split

        rng = RngSeed(_resolve_seed(seed))
        # reference and candidate come from disjoint halves; shared points
        # would bias nearest-neighbor metrics toward zero distance
        ref, other = stratified_split(ds, rng.child(0))
        cand = apply_class_mixture(other, ClassMixture(fractions), rng.child(1))
        _save_auto(ref, out_ref)
        _save_auto(cand, out_cand)
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ShiftscopeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


@gen.command("domain")
@click.argument("input_path", metavar="INPUT", type=click.Path())
@click.argument("out_ref", type=click.Path())
@click.argument("out_cand", type=click.Path())
@click.option("--classes-a", type=str, required=True, help="Reference-side classes, e.g. '0-4'.")
@click.option("--classes-b", type=str, required=True, help="Candidate-side classes, e.g. '5-9'.")
@click.option("--seed", type=int, default=None)
def gen_domain(input_path, out_ref, out_cand, classes_a, classes_b, seed):
    """Domain shift: split a labeled set into two sets with disjoint classes."""
    try:
        ds = load_auto(input_path)
        a, b = domain_split(ds, _parse_class_list(classes_a), _parse_class_list(classes_b))
        _save_auto(a, out_ref)
        _save_auto(b, out_cand)
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ShiftscopeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


@gen.command("dirichlet")
@click.argument("input_path", metavar="INPUT", type=click.Path())
@click.argument("out_ref", type=click.Path())
@click.argument("out_cand", type=click.Path())
@click.option("--concentration", type=float, default=1.0, show_default=True, help="Symmetric Dirichlet concentration; smaller values give stronger shifts.")
@click.option("--seed", type=int, default=None)
def gen_dirichlet(input_path, out_ref, out_cand, concentration, seed):
    """Label-proportion shift: candidate resampled under Dirichlet class fractions."""
    try:
        ds = load_auto(input_path)
        if ds.labels is None:
            raise LabelsRequired("dirichlet generation needs a labeled input")
        from .sampling import stratified_split

        rng = RngSeed(_resolve_seed(seed))
        num_classes = int(ds.labels.max()) + 1
        ref, other = stratified_split(ds, rng.child(2))
        mix = dirichlet_mixture(num_classes, concentration, rng.child(0))
        cand = apply_class_mixture(other, mix, rng.child(1))
        _save_auto(ref, out_ref)
        _save_auto(cand, out_cand)
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ShiftscopeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)


@main.command()
@click.argument("input_path", metavar="INPUT", type=click.Path())
@click.option("--sample-sizes", type=str, default="25,50,100", show_default=True)
@click.option("--concentrations", type=str, default="0.1,0.2,0.4,0.8,1.6,3.2,6.4,12.8", show_default=True, help="Dirichlet concentrations; each defines one shift magnitude. A zero-shift row is always included.")
@click.option("--reps", type=int, default=100, show_default=True)
@click.option("--samples", type=int, default=15, show_default=True, help="Subsample pairs per repetition.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--metric", type=click.Choice(["energy", "local-energy", "swp"]), default="energy", show_default=True)
@click.option("--k", type=int, default=5)
@click.option("--seed", type=int, default=None)
@click.option("--no-normalize", is_flag=True)
@click.option("--threads", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def ablate(
    input_path,
    sample_sizes,
    concentrations,
    reps,
    samples,
    alpha,
    metric,
    k,
    seed,
    no_normalize,
    threads,
    out,
):
    """Sweep sample size and label-proportion shift magnitude; emit one CSV row
    per (sample_size, magnitude) with the observed positive rate."""
    try:
        _set_threads(threads)
        seed_val = _resolve_seed(seed)
        ds = load_auto(input_path)
        if ds.labels is None:
            raise LabelsRequired("ablation needs a labeled input")
        if not no_normalize:
            ds = l2_normalize(ds)
        rows = ablation_sweep(
            ds,
            sample_sizes=_parse_int_list(sample_sizes),
            concentrations=_parse_float_list(concentrations),
            reps=reps,
            samples=samples,
            alpha=alpha,
            metric_name=metric,
            k=k,
            seed=RngSeed(seed_val),
        )
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ShiftscopeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["sample_size", "label_dist_l2", "positive_rate", "mean_metric"])
    for row in rows:
        writer.writerow([row[0], f"{row[1]:.6f}", f"{row[2]:.4f}", f"{row[3]:.6f}"])
    _write_text(buf.getvalue().rstrip("\n"), out)
    sys.exit(EXIT_NO_SHIFT)


def _label_proportions(labels: np.ndarray, num_classes: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=num_classes).astype(np.float64)
    return counts / counts.sum()


def ablation_sweep(
    ds: EmbeddingSet,
    sample_sizes,
    concentrations,
    reps: int,
    samples: int,
    alpha: float,
    metric_name: str,
    k: int,
    seed: RngSeed,
):
    """For each (sample size, shift magnitude) cell, run `reps` miniature
    subsample tests (one t-test over `samples` metric pairs each) of the
    original set against a Dirichlet-reweighted copy, and record the fraction
    that detect shift. Magnitude index 0 is the unshifted null."""
    if reps < 1 or samples < 2:
        raise ConfigError("reps must be >= 1 and samples >= 2")
    num_classes = int(ds.labels.max()) + 1
    met = make_metric(metric_name, k=k)

    # variant 0 is the null (candidate drawn from the unshifted set itself)
    variants: list[tuple[float, EmbeddingSet]] = [(0.0, ds)]
    base_prop = _label_proportions(ds.labels, num_classes)
    for v, conc in enumerate(concentrations):
        mix = dirichlet_mixture(num_classes, conc, seed.child(0, v))
        cand = apply_class_mixture(ds, mix, seed.child(1, v))
        dist = float(
            np.linalg.norm(_label_proportions(cand.labels, num_classes) - base_prop)
        )
        variants.append((dist, cand))

    rows = []
    for ss in sample_sizes:
        if ds.n < 2 * ss:
            raise ConfigError(f"input too small for sample size {ss}")
        for v, (dist, cand) in enumerate(variants):
            positives = 0
            metric_vals = []
            for rep in range(reps):
                rng = seed.child(2, ss, v, rep)
                d_xx = np.empty(samples)
                d_xy = np.empty(samples)
                for i in range(samples):
                    i1, i2 = disjoint_pair_indices(ds.n, ss, rng.child(0, i))
                    d_xx[i] = met.value(ds.take(i1), ds.take(i2), rng.child(1, i))
                    ix = subsample_indices(ds.n, ss, rng.child(2, i))
                    iy = subsample_indices(cand.n, ss, rng.child(3, i))
                    d_xy[i] = met.value(ds.take(ix), cand.take(iy), rng.child(4, i))
                p = welch_t_test(d_xx, d_xy)
                if p < alpha and d_xy.mean() > d_xx.mean():
                    positives += 1
                metric_vals.append(d_xy.mean())
            rows.append((ss, dist, positives / reps, float(np.mean(metric_vals))))
    return rows


if __name__ == "__main__":
    main()
