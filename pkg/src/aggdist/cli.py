"""Command-line interface.

    aggdist fit       --input dump.csv  --output fits.json
    aggdist predict   --input fits.json --config cfg.json --weights w.json --output pred.json
    aggdist simulate  --input spec.json --config cfg.json --weights w.json --output sim.json --seed 1
    aggdist compare   --input pred.json --observed sim.json --output outdir/
    aggdist optimize  --input fits.json --config cfg.json --weights w.json --output opt.json

Exit codes: 0 ok, 2 unreadable input or bad flags, 3 fit failure,
4 propagation or config error, 5 forward-pass overflow, 6 alignment failure,
7 optimizer domain error.
"""

import argparse
import csv
import itertools
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .distributions import ZeroGammaParams, zero_gamma_moments
from .errors import (
    AggDistError,
    AlignmentError,
    DomainError,
    FitError,
    OptimizerError,
    ParseError,
    PropagationError,
    SimulationOverflowError,
)
from .fitting import (
    ActivationDump,
    DEFAULT_ZERO_THRESHOLD,
    estimate_block_stats,
    fit_filters,
    fit_gaussian,
)
from .klopt import GAMMA_MIN, KLProblem, OptState, ascend
from .propagation import ActivationConfig, GaussianPair, kl_gaussian, predict_block
from .simulator import (
    SyntheticSpec,
    check_activation_range,
    concat_traces,
    forward,
    generate,
    histogram,
    observe,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_FIT = 3
EXIT_PROPAGATION = 4
EXIT_OVERFLOW = 5
EXIT_ALIGNMENT = 6
EXIT_OPTIMIZER = 7

CONFIG_KEYS = {
    "alpha": "alpha",
    "beta": "beta",
    "gamma": "gamma_exp",
    "eps": "eps",
    "activation": "activation",
    "series_order": "series_order",
}
FLAG_KEYS = (
    "input",
    "output",
    "seed",
    "threads",
    "tolerance",
    "sweep",
    "weights",
    "observed",
    "max_iters",
    "zero_threshold",
)
SPEC_SWEEP_KEYS = ("rho_pix", "rho_filt")
CONFIG_SWEEP_KEYS = ("alpha", "beta", "gamma", "eps")
DEFAULT_OPT_TOL = 1e-8
DEFAULT_FIT_TOL = 1e-12
DEFAULT_MAX_ITERS = 200


def _err(message):
    print(f"aggdist: {message}", file=sys.stderr)


# --- shared loaders -----------------------------------------------------------


def load_config(path):
    """Raw config dictionary (activation keys plus optional flag keys)."""
    if path is None:
        return {}
    obj = io.read_json(path)
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    unknown = set(obj) - set(CONFIG_KEYS) - set(FLAG_KEYS)
    if unknown:
        raise ParseError(f"{path}: unknown config keys {sorted(unknown)}")
    return obj


def activation_config(raw, r_pixels):
    """ActivationConfig from a raw config dict; invalid values raise DomainError."""
    kwargs = {CONFIG_KEYS[k]: v for k, v in raw.items() if k in CONFIG_KEYS}
    for key in ("alpha", "beta", "gamma_exp", "eps"):
        if key in kwargs and (isinstance(kwargs[key], bool) or not isinstance(kwargs[key], (int, float))):
            raise DomainError(f"config value {key} must be a number")
    kwargs = {k: (float(v) if k in ("alpha", "beta", "gamma_exp", "eps") else v) for k, v in kwargs.items()}
    return ActivationConfig(r_pixels=int(r_pixels), **kwargs)


def load_weights(path):
    if path is None:
        raise ParseError("a weights file is required (--weights)")
    obj = io.read_json(path)
    if isinstance(obj, dict):
        obj = obj.get("weights")
    try:
        w = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
        raise ParseError(f"{path}: weights must be a non-empty list of finite numbers")
    return w


def plan_groups(classes):
    """Groups of labels and one-vs-all pairings for a set of class names.

    Returns ({group: [labels]}, [(positive_label, positive_group, negative_group)]).
    """
    classes = sorted(classes)
    if len(classes) < 2:
        raise ParseError("one-vs-all pairing needs at least two classes")
    if classes == ["negative", "positive"]:
        return {"positive": ["positive"], "negative": ["negative"]}, [("positive", "positive", "negative")]
    groups, pairs = {}, []
    for c in classes:
        rest = f"not:{c}"
        groups[c] = [c]
        groups[rest] = [o for o in classes if o != c]
        pairs.append((c, c, rest))
    return groups, pairs


def _group_dump(dump, labels):
    return dump.select(np.isin(dump.labels, labels))


# --- fit ----------------------------------------------------------------------


def fit_document(dump, zero_threshold=DEFAULT_ZERO_THRESHOLD):
    groups, pairs = plan_groups(dump.classes())
    out_groups = {}
    for name, labels in groups.items():
        sub = _group_dump(dump, labels)
        try:
            reports = fit_filters(sub, zero_threshold)
        except FitError as exc:
            raise FitError(f"group {name!r}, {exc}") from exc
        out_groups[name] = io.group_to_json(sub.n_images, reports, estimate_block_stats(sub))
    return {
        "format": "aggdist-fit",
        "n_filters": dump.n_filters,
        "n_pixels": dump.n_pixels,
        "groups": out_groups,
        "pairings": [{"positive": p, "positive_group": g, "negative_group": n} for p, g, n in pairs],
    }


def cmd_fit(dump_path, out_path, zero_threshold=DEFAULT_ZERO_THRESHOLD):
    try:
        dump = io.read_dump(dump_path)
        doc = fit_document(dump, zero_threshold)
    except ParseError as exc:
        _err(f"cannot parse dump: {exc}")
        return EXIT_PARSE
    except FitError as exc:
        _err(f"fit failed: {exc}")
        return EXIT_FIT
    io.write_json(out_path, doc)
    return EXIT_OK


# --- predict ------------------------------------------------------------------


def _read_fit(path):
    doc = io.read_json(path)
    try:
        groups = {name: io.group_from_json(g, f"{path}:{name}") for name, g in doc["groups"].items()}
        pairs = [(p["positive"], p["positive_group"], p["negative_group"]) for p in doc["pairings"]]
        r_pixels = int(doc["n_pixels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed fit file: {exc}") from exc
    for _, pos, neg in pairs:
        if pos not in groups or neg not in groups:
            raise ParseError(f"{path}: pairing refers to an unknown group")
    return groups, pairs, r_pixels


def predicted_record(reports, prediction):
    params = [r.params for r in reports]
    return io.layer_record(
        [zero_gamma_moments(p) for p in params],
        prediction.activation,
        prediction.gap,
        prediction.cov_gap,
        prediction.deactivation,
        prediction.cov_deact,
        io.output_moments(prediction.output),
    )


def predict_groups(groups, pairs, cfg, w):
    """Run the analytic chain per group; returns (statistics, predictions)."""
    preds, records = {}, {}
    for name, (reports, stats) in groups.items():
        pred = predict_block([r.params for r in reports], stats, cfg, w)
        preds[name] = pred
        records[name] = predicted_record(reports, pred)
    pairings = []
    for label, pos, neg in pairs:
        kl = kl_gaussian(GaussianPair(preds[pos].output, preds[neg].output))
        pairings.append({"positive": label, "positive_group": pos, "negative_group": neg, "kl": kl})
    return {"groups": records, "pairings": pairings}, preds


def cmd_predict(fit_path, cfg_path, weights_path, out_path):
    try:
        groups, pairs, r_pixels = _read_fit(fit_path)
        raw = load_config(cfg_path)
        w = load_weights(weights_path)
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    try:
        cfg = activation_config(raw, r_pixels)
        stats, _ = predict_groups(groups, pairs, cfg, w)
    except PropagationError as exc:
        _err(f"propagation failed in {exc}")
        return EXIT_PROPAGATION
    except AggDistError as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_PROPAGATION
    io.write_json(out_path, {"format": "aggdist-prediction", "predicted": stats})
    return EXIT_OK


# --- simulate -----------------------------------------------------------------


def read_synthetic_spec(path):
    doc = io.read_json(path)
    try:
        classes = doc["classes"]
        if not isinstance(classes, dict) or not classes:
            raise ValueError("classes must be a non-empty object")
        filters = {
            name: tuple(ZeroGammaParams(float(f["p"]), float(f["a"]), float(f["s"])) for f in flist)
            for name, flist in classes.items()
        }
        counts = {len(v) for v in filters.values()}
        if len(counts) != 1:
            raise ValueError("every class needs the same number of filters")
        base = {
            "rho_pix": float(doc.get("rho_pix", 0.0)),
            "rho_filt": float(doc.get("rho_filt", 0.0)),
            "n_pixels": int(doc["n_pixels"]),
            "n_images": int(doc["n_images"]),
            "seed": doc.get("seed"),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed synthetic spec: {exc}") from exc
    return base, filters


def _histogram_record(x):
    edges, counts = histogram(x)
    return {"edges": edges, "counts": counts}


def _observed_record(obs):
    return io.layer_record(
        obs.conv, obs.activated, obs.gap, obs.cov_gap, obs.deactivated, obs.cov_deact, obs.output
    )


def _histograms(trace):
    record = {}
    for name, key in (("conv", "conv"), ("activated", "activation"), ("gap", "gap"),
                      ("deactivated", "deactivation")):
        data = getattr(trace, name)
        record[key] = [_histogram_record(data[:, k]) for k in range(data.shape[1])]
    record["output"] = _histogram_record(trace.output)
    return record


def simulate_document(base, filters, raw_cfg, w, seed, threads=1):
    r_pixels = base["n_pixels"]
    cfg = activation_config(raw_cfg, r_pixels)
    names = sorted(filters)
    groups, pairs = plan_groups(names)
    n_filters = len(filters[names[0]])
    if w.shape != (n_filters,):
        raise PropagationError("output", DomainError(f"{w.size} weights for {n_filters} filters"))
    for name in names:
        check_activation_range(filters[name], cfg)

    dumps, traces = {}, {}
    for stream, name in enumerate(names):
        spec = SyntheticSpec(filters[name], base["rho_pix"], base["rho_filt"], r_pixels,
                             base["n_images"], seed, name, stream)
        dumps[name] = generate(spec, threads)
        traces[name] = forward(dumps[name], cfg, w)

    observed, predicted, hists, outputs, preds = {}, {}, {}, {}, {}
    for gname, labels in groups.items():
        trace = concat_traces([traces[c] for c in labels])
        dump = ActivationDump(
            np.concatenate([dumps[c].values for c in labels]),
            np.concatenate([dumps[c].labels for c in labels]),
        )
        observed[gname] = _observed_record(observe(trace, with_histograms=False))
        hists[gname] = _histograms(trace)
        outputs[gname] = trace.output
        try:
            reports = fit_filters(dump)
        except FitError as exc:
            raise FitError(f"group {gname!r}, {exc}") from exc
        preds[gname] = predict_block([r.params for r in reports], estimate_block_stats(dump), cfg, w)
        predicted[gname] = predicted_record(reports, preds[gname])

    obs_pairs, pred_pairs = [], []
    for label, pos, neg in pairs:
        head = {"positive": label, "positive_group": pos, "negative_group": neg}
        obs_kl = kl_gaussian(GaussianPair(fit_gaussian(outputs[pos]), fit_gaussian(outputs[neg])))
        pred_kl = kl_gaussian(GaussianPair(preds[pos].output, preds[neg].output))
        obs_pairs.append({**head, "kl": obs_kl})
        pred_pairs.append({**head, "kl": pred_kl})

    return {
        "format": "aggdist-simulation",
        "seed": seed,
        "n_images": base["n_images"],
        "n_filters": n_filters,
        "n_pixels": r_pixels,
        "observed": {"groups": observed, "pairings": obs_pairs},
        "predicted": {"groups": predicted, "pairings": pred_pairs},
        "histograms": hists,
    }


def parse_sweep(items):
    """[(key, [values])] from 'key=v1,v2,...' strings."""
    grid = []
    for item in items or ():
        key, sep, values = str(item).partition("=")
        key = key.strip()
        if not sep or key not in SPEC_SWEEP_KEYS + CONFIG_SWEEP_KEYS:
            raise ParseError(f"bad sweep {item!r}; keys: {', '.join(SPEC_SWEEP_KEYS + CONFIG_SWEEP_KEYS)}")
        try:
            grid.append((key, [float(v) for v in values.split(",") if v.strip()]))
        except ValueError as exc:
            raise ParseError(f"bad sweep value in {item!r}") from exc
        if not grid[-1][1]:
            raise ParseError(f"sweep {key!r} has no values")
    return grid


def cmd_simulate(spec_path, cfg_path, weights_path, out_path, seed=None, threads=1, sweep=None):
    try:
        base, filters = read_synthetic_spec(spec_path)
        raw = load_config(cfg_path)
        w = load_weights(weights_path)
        grid = parse_sweep(sweep)
        if seed is None:
            seed = raw.get("seed", base["seed"])
        if seed is None:
            raise ParseError("simulate needs a seed (--seed, config or spec)")
        if isinstance(seed, bool) or int(seed) != seed or seed < 0:
            raise ParseError(f"seed must be a non-negative integer, got {seed!r}")
        seed = int(seed)
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    try:
        if not grid:
            doc = simulate_document(base, filters, raw, w, seed, threads)
        else:
            runs = []
            keys = [k for k, _ in grid]
            for combo in itertools.product(*(v for _, v in grid)):
                settings = dict(zip(keys, combo))
                run_base = dict(base)
                run_raw = dict(raw)
                for key, value in settings.items():
                    (run_base if key in SPEC_SWEEP_KEYS else run_raw)[key] = value
                runs.append({"settings": settings,
                             "result": simulate_document(run_base, filters, run_raw, w, seed, threads)})
            doc = {"format": "aggdist-sweep", "seed": seed, "runs": runs}
    except SimulationOverflowError as exc:
        _err(f"forward pass overflow: {exc}")
        return EXIT_OVERFLOW
    except FitError as exc:
        _err(f"fit failed: {exc}")
        return EXIT_FIT
    except PropagationError as exc:
        _err(f"propagation failed in {exc}")
        return EXIT_PROPAGATION
    except AggDistError as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_PROPAGATION
    io.write_json(out_path, doc)
    return EXIT_OK


# --- compare ------------------------------------------------------------------


def _section(doc, preferred, fallback, path):
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    for key in (preferred, fallback):
        if key in doc:
            return doc[key]
    raise ParseError(f"{path}: no {preferred!r} statistics found")


def _rel_error(pred, obs):
    if pred == obs:
        return 0.0
    return abs(pred - obs) / abs(obs) if obs != 0 else math.inf


def align_records(pred, obs):
    """Rows of (quantity, key fields, observed, predicted) for matching records."""
    try:
        pg, og = pred["groups"], obs["groups"]
        pp, op = pred["pairings"], obs["pairings"]
    except (KeyError, TypeError) as exc:
        raise AlignmentError(f"missing section: {exc}") from exc
    if sorted(pg) != sorted(og):
        raise AlignmentError(f"group sets differ: {sorted(pg)} vs {sorted(og)}")
    if len(pp) != len(op):
        raise AlignmentError(f"{len(pp)} predicted pairings vs {len(op)} observed")
    rows = {"mean": [], "std": [], "cov": [], "kl": []}
    for gname in sorted(pg):
        p_layers, o_layers = pg[gname], og[gname]
        if sorted(p_layers) != sorted(o_layers):
            raise AlignmentError(f"group {gname!r}: layer sets differ")
        for layer in p_layers:
            pl, ol = p_layers[layer], o_layers[layer]
            for q in ("mean", "std"):
                pv, ov = np.atleast_1d(pl[q]), np.atleast_1d(ol[q])
                if pv.shape != ov.shape:
                    raise AlignmentError(f"{gname}/{layer}/{q}: {pv.size} predicted vs {ov.size} observed")
                for i, (a, b) in enumerate(zip(ov, pv)):
                    rows[q].append((gname, layer, i, float(a), float(b)))
            if "cov" in pl or "cov" in ol:
                pc, oc = np.asarray(pl.get("cov")), np.asarray(ol.get("cov"))
                if pc.shape != oc.shape or pc.ndim != 2:
                    raise AlignmentError(f"{gname}/{layer}/cov: shape mismatch")
                for i, j in zip(*np.triu_indices(pc.shape[0], 1)):
                    rows["cov"].append((gname, layer, int(i), int(j), float(oc[i, j]), float(pc[i, j])))
    obs_by_label = {p["positive"]: p for p in op}
    for p in pp:
        o = obs_by_label.get(p["positive"])
        if o is None:
            raise AlignmentError(f"pairing {p['positive']!r} has no observed record")
        rows["kl"].append((p["positive"], float(o["kl"]), float(p["kl"])))
    return rows


SCATTER_HEADERS = {
    "mean": ("group", "layer", "index", "observed", "predicted"),
    "std": ("group", "layer", "index", "observed", "predicted"),
    "cov": ("group", "layer", "i", "j", "observed", "predicted"),
    "kl": ("pairing", "observed", "predicted"),
}


def _summary(rows):
    errs = np.array([_rel_error(r[-1], r[-2]) for r in rows], dtype=float)
    if errs.size == 0:
        return {"count": 0, "mean_abs_rel_error": None, "median_abs_rel_error": None,
                "max_abs_rel_error": None}
    return {
        "count": int(errs.size),
        "mean_abs_rel_error": float(np.mean(errs)),
        "median_abs_rel_error": float(np.median(errs)),
        "max_abs_rel_error": float(np.max(errs)),
    }


def cmd_compare(pred_path, obs_path, out_path):
    try:
        pred = _section(io.read_json(pred_path), "predicted", "observed", pred_path)
        obs = _section(io.read_json(obs_path), "observed", "predicted", obs_path)
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    try:
        rows = align_records(pred, obs)
    except (AlignmentError, ValueError, TypeError, KeyError) as exc:
        _err(f"records do not align: {exc}")
        return EXIT_ALIGNMENT
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"format": "aggdist-comparison", "quantities": {}}
    for quantity, header in SCATTER_HEADERS.items():
        with open(out / f"scatter_{quantity}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows[quantity]:
                writer.writerow([io.format_float(v) if isinstance(v, float) else v for v in row])
        summary["quantities"][quantity] = _summary(rows[quantity])
    io.write_json(out / "summary.json", summary)
    return EXIT_OK


# --- optimize -----------------------------------------------------------------


def _state_record(kl, gamma, weights):
    return {"kl": kl, "gamma": gamma, "weights": np.asarray(weights)}


def cmd_optimize(fit_path, cfg_path, init_weights_path, out_path,
                 max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_OPT_TOL):
    try:
        groups, pairs, r_pixels = _read_fit(fit_path)
        raw = load_config(cfg_path)
        w = load_weights(init_weights_path)
        if int(max_iters) != max_iters or max_iters < 0:
            raise ParseError("max_iters must be a non-negative integer")
        if not tol > 0:
            raise ParseError("tolerance must be > 0")
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    try:
        cfg = activation_config(raw, r_pixels)
        _, preds = predict_groups(groups, pairs, cfg, w)
    except PropagationError as exc:
        _err(f"propagation failed in {exc}")
        return EXIT_PROPAGATION
    except AggDistError as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_PROPAGATION
    results = []
    try:
        for label, pos, neg in pairs:
            problem = KLProblem.from_predictions(preds[pos], preds[neg])
            start = OptState(w, cfg.gamma_exp)
            final = ascend(start, problem, max_iters=int(max_iters), tol=tol)
            results.append({
                "positive": label,
                "initial": _state_record(final.kl_history[0], start.gamma_exp, start.weights),
                "final": {
                    **_state_record(final.kl_history[-1], final.gamma_exp, final.weights),
                    "iterations": final.iteration,
                },
                "trajectory": list(final.trajectory),
            })
    except (OptimizerError, DomainError) as exc:
        _err(f"optimizer failed: {exc}")
        return EXIT_OPTIMIZER
    doc = {
        "format": "aggdist-optimization",
        "settings": {"max_iters": int(max_iters), "tolerance": float(tol), "gamma_min": GAMMA_MIN},
        "pairings": results,
    }
    io.write_json(out_path, doc)
    return EXIT_OK


# --- entry point --------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="primary input file")
    common.add_argument("--output", help="output file (directory for compare)")
    common.add_argument("--config", help="JSON config: activation parameters and flag defaults")
    common.add_argument("--seed", type=int, help="RNG seed (simulate)")
    common.add_argument("--threads", type=int, help="worker threads for sampling")
    common.add_argument("--tolerance", type=float, help="convergence tolerance on the projected gradient norm (optimize)")
    common.add_argument("--sweep", action="append", metavar="KEY=V1,V2",
                        help="simulate over a grid of rho_pix, rho_filt, alpha, beta, gamma or eps")
    common.add_argument("--weights", help="FC weights JSON")
    common.add_argument("--observed", help="observed statistics JSON (compare)")
    common.add_argument("--max-iters", dest="max_iters", type=int, help="optimizer iteration cap")
    common.add_argument("--zero-threshold", dest="zero_threshold", type=float,
                        help="values at or below count as exact zeros (fit)")

    parser = argparse.ArgumentParser(prog="aggdist", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("fit", "fit ZeroGamma models and pixel moments to an activation dump"),
        ("predict", "predict per-layer statistics and the KL divergence"),
        ("simulate", "run the Monte Carlo oracle and pair it with predictions"),
        ("compare", "scatter data and error summary for predicted vs observed"),
        ("optimize", "gradient ascent on the predicted KL divergence"),
    ):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _resolve(args, raw):
    """Flag values, falling back to config-file entries."""
    values = {}
    for key in FLAG_KEYS:
        flag = getattr(args, key, None)
        values[key] = flag if flag is not None else raw.get(key)
    return values


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        raw = load_config(args.config)
    except ParseError as exc:
        _err(str(exc))
        return EXIT_PARSE
    opts = _resolve(args, raw)
    required = {"compare": ("input", "observed", "output")}.get(args.command, ("input", "output"))
    missing = [k for k in required if opts[k] is None]
    if args.command in ("predict", "simulate", "optimize") and opts["weights"] is None:
        missing.append("weights")
    if missing:
        parser.error(f"{args.command}: missing {', '.join('--' + m.replace('_', '-') for m in missing)}")

    if args.command == "fit":
        threshold = opts["zero_threshold"]
        return cmd_fit(opts["input"], opts["output"],
                       DEFAULT_ZERO_THRESHOLD if threshold is None else threshold)
    if args.command == "predict":
        return cmd_predict(opts["input"], args.config, opts["weights"], opts["output"])
    if args.command == "simulate":
        return cmd_simulate(opts["input"], args.config, opts["weights"], opts["output"],
                            seed=opts["seed"], threads=opts["threads"] or 1, sweep=opts["sweep"])
    if args.command == "compare":
        return cmd_compare(opts["input"], opts["observed"], opts["output"])
    max_iters = opts["max_iters"]
    tol = opts["tolerance"]
    return cmd_optimize(opts["input"], args.config, opts["weights"], opts["output"],
                        DEFAULT_MAX_ITERS if max_iters is None else max_iters,
                        DEFAULT_OPT_TOL if tol is None else tol)


if __name__ == "__main__":
    sys.exit(main())
