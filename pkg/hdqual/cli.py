"""
Command-line tool ``hdqual``.

Commands:

- ``synth``: write synthetic recordings and their manifest
- ``train``: build the dataset, encode, fit and evaluate an HDC model
  (timed and metered), save model and reports
- ``predict``: classify the windows of recordings with a saved model
- ``bench``: HDC vs MLP training and inference time, energy and accuracy
- ``project``: annual fleet energy and savings of two scenarios

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
error. On error a single line ``hdqual: error code=<CODE> exit=<N>:
<message>`` is written to stderr.
"""

import argparse
import json
import logging
import os
import sys
from collections import OrderedDict

import colorama
import numpy as np
import pandas as pd

from . import config
from .baseline import MlpTrainConfig, mlp_fit, mlp_predict
from .errors import (
    DimensionMismatchError,
    HdqualError,
    ModelEncoderMismatchError,
    OutputPathError,
)
from .evaluation import (
    confusion_matrix,
    evaluate,
    evaluate_by_feature,
    metrics_from_confusion,
    summarize_runs,
)
from .hdspace import encode_batch, generate_basis
from .metering import DISCLAIMER, compare, make_power_source, measure
from .model import TrainConfig, fit, load_model, predict_batch, save_model
from .pipeline import (
    ChannelScaler,
    LabeledDataset,
    WindowSpec,
    balance,
    build_dataset,
    gen_synthetic,
    load_recordings,
    select_feature,
    split,
    window,
    write_dataset,
)
from .projection import (
    PARAM_FIELDS,
    energy_per_inference,
    load_scenario,
    savings,
)
from .runconfig import load_run_config, run_seeds, write_run_config

__all__ = ["main", "cmd_synth", "cmd_train", "cmd_predict", "cmd_bench", "cmd_project"]

log = logging.getLogger(__name__)

# flag destination -> configuration key
OVERRIDES = OrderedDict(
    [
        ("seed", "seed"),
        ("output", "output"),
        ("manifest", "data.manifest"),
        ("channels", "data.channels"),
        ("samples", "data.samples"),
        ("parts_per_class", "data.parts_per_class"),
        ("noise", "data.noise"),
        ("feature", "data.feature"),
        ("window", "window.n"),
        ("dim", "encoder.dim"),
        ("mode", "encoder.mode"),
        ("learning_rate", "train.learning_rate"),
        ("epochs", "train.max_epochs"),
        ("patience", "train.patience"),
        ("runs", "train.runs"),
        ("train_fraction", "split.train_fraction"),
        ("power_source", "metering.source"),
        ("watts", "metering.watts"),
        ("trace_file", "metering.trace_file"),
        ("repetitions", "bench.repetitions"),
        ("mlp_epochs", "bench.mlp_epochs"),
    ]
)


def _run_config(args):
    overrides = {key: getattr(args, dest, None) for dest, key in OVERRIDES.items()}
    return load_run_config(args.config, overrides)


def _output_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as err:
        raise OutputPathError("cannot create output directory {}: {}".format(path, err))
    if not os.access(path, os.W_OK):
        raise OutputPathError("output directory {} is not writable".format(path))
    return path


def _write_json(path, data):
    with open(path, "w") as outfile:
        json.dump(data, outfile, indent=2, sort_keys=True)
        outfile.write("\n")
    log.info("wrote %s", path)


def _recordings(cfg):
    data = cfg["data"]
    if data["manifest"]:
        recordings, deviations = load_recordings(data["manifest"])
    else:
        recordings, deviations = _synthetic(cfg)
    if data["feature"]:
        recordings, deviations = select_feature(recordings, deviations, data["feature"])
    return recordings, deviations


def _synthetic(cfg):
    data = cfg["data"]
    return gen_synthetic(
        channels=data["channels"],
        samples=data["samples"],
        noise_sigma=data["noise"],
        seed=cfg["seeds"]["synth"],
        parts_per_class=data["parts_per_class"],
        features=tuple(data["features"]),
        sample_rate=data["sample_rate"],
    )


def prepare_dataset(cfg, seeds=None):
    """
    Recordings -> labelled windows -> balanced -> stratified split ->
    per-channel standardization (train statistics). ``seeds`` replaces
    the balance and split seeds of ``cfg`` (repeated runs).

    Returns
    -------
    (LabeledDataset, LabeledDataset, ChannelScaler or None, list of str)
        train, test, scaler and channel names
    """
    seeds = seeds or cfg["seeds"]
    recordings, deviations = _recordings(cfg)
    ds = build_dataset(recordings, deviations, WindowSpec(cfg["window"]["n"]),
                       ddof=cfg["data"]["ddof"])
    ds = balance(ds, seeds["balance"])
    train, test = split(ds, cfg["split"]["train_fraction"], seeds["split"])

    scaler = None
    if cfg["train"]["normalize"]:
        scaler = ChannelScaler().fit(train)
        train, test = scaler.transform(train), scaler.transform(test)

    log.info("train: %s, test: %s", dict(train.class_counts()), dict(test.class_counts()))
    return train, test, scaler, recordings[0].channel_names


def _encoder(cfg, dim_m, seeds=None):
    enc = cfg["encoder"]
    seeds = seeds or cfg["seeds"]
    return generate_basis(dim_m, enc["dim"], seeds["basis"], mode=enc["mode"],
                          dtype=enc["dtype"])


def _train_config(cfg, seeds=None):
    train = cfg["train"]
    seeds = seeds or cfg["seeds"]
    return TrainConfig(train["learning_rate"], train["max_epochs"], train["patience"],
                       shuffle_seed=seeds["fit"])


def _mlp_config(cfg):
    bench = cfg["bench"]
    return MlpTrainConfig(
        epochs=bench["mlp_epochs"],
        batch_size=bench["mlp_batch_size"],
        learning_rate=bench["mlp_learning_rate"],
        seed=cfg["seeds"]["mlp"],
        hidden_sizes=bench["mlp_hidden"],
        activation=bench["mlp_activation"],
    )


def _power_source(cfg):
    meter = cfg["metering"]
    return make_power_source(meter["source"], meter["watts"], meter["trace_file"] or None,
                             meter["sampling_interval"])


# ============================================================================
# commands
# ============================================================================


def cmd_synth(args):
    """ write synthetic recordings, manifest and run.ini """
    cfg = _run_config(args)
    out_dir = _output_dir(cfg["output"])
    cfg["data"]["manifest"] = ""
    recordings, deviations = _synthetic(cfg)
    manifest = write_dataset(out_dir, recordings, deviations)
    write_run_config(cfg, out_dir)

    ds = build_dataset(recordings, deviations, WindowSpec(cfg["window"]["n"]),
                       ddof=cfg["data"]["ddof"])
    parts = OrderedDict()
    for (part_id, feature_id, _), label in zip(ds.provenance, ds.labels):
        parts[(part_id, feature_id)] = label
    counts = pd.Series(list(parts.values())).value_counts()

    print("wrote {} recordings to {}".format(len(recordings), manifest))
    for label in config.LABELS:
        print("  {:8s} {:3d} parts".format(label, int(counts.get(label, 0))))
    return 0


def cmd_train(args):
    """ encode, fit and evaluate under the power source, save everything """
    cfg = _run_config(args)
    out_dir = _output_dir(cfg["output"])
    write_run_config(cfg, out_dir)

    train, test, scaler, channels = prepare_dataset(cfg)
    enc = _encoder(cfg, train.dim_m)
    src = _power_source(cfg)
    train_cfg = _train_config(cfg)

    def _train():
        hvs = encode_batch(enc, train.samples)
        return fit(list(zip(hvs, train.labels)), train_cfg,
                   encoder_fingerprint=enc.fingerprint)

    model, train_report = measure(_train, src)
    (cm, metrics), infer_report = measure(lambda: evaluate(model, enc, test), src)

    save_model(
        os.path.join(out_dir, "model.hdm"), model, enc,
        normalization=scaler.to_dict() if scaler else None,
        extra=dict(window=cfg["window"]["n"], channels=list(channels)),
    )

    by_feature = evaluate_by_feature(model, enc, test)
    runs = [metrics] + [_repeat_run(cfg, run) for run in range(1, cfg["train"]["runs"])]

    report = metrics.to_dict()
    report["encoder"] = OrderedDict(mode=enc.mode, dim=enc.dim_d, m=enc.dim_m,
                                    seed=enc.seed, dtype=enc.dtype.name)
    report["epoch_log"] = list(model.epoch_log)
    report["seeds"] = dict(cfg["seeds"])
    report["features"] = OrderedDict(
        (feature_id, m.to_dict()) for feature_id, m in by_feature.items()
    )
    report["runs"] = summarize_runs(runs)
    report["runs"]["accuracy_per_run"] = [float(m.accuracy) for m in runs]
    _write_json(os.path.join(out_dir, "metrics.json"), report)

    energy = OrderedDict(
        source=src.describe(),
        train=train_report.to_dict(),
        inference=infer_report.to_dict(),
        energy_per_inference_j=energy_per_inference(infer_report, len(test)),
        disclaimer=DISCLAIMER,
    )
    _write_json(os.path.join(out_dir, "energy.json"), energy)

    metrics.printSummary("HDC ({} encoder, D={})".format(enc.mode, enc.dim_d))
    if len(by_feature) > 1:
        for feature_id, m in by_feature.items():
            print("  {:14s} accuracy {:.4f}  macro F1 {:.4f}".format(
                feature_id, m.accuracy, m.macro_f1))
    if len(runs) > 1:
        acc = report["runs"]["accuracy"]
        print("accuracy over {} runs: {:.4f} +/- {:.4f}".format(
            len(runs), acc["mean"], acc["std"]))
    print("train: {:.3f} s, {:.2f} J   inference: {:.3f} s, {:.2f} J".format(
        train_report.duration, train_report.energy,
        infer_report.duration, infer_report.energy,
    ))

    if args.plot:
        from .utils import plot_confusion

        plot_confusion(cm, os.path.join(out_dir, "confusion.png"))
    return 0


def _repeat_run(cfg, run):
    """ an unmetered retraining with the seeds of repetition ``run`` """
    seeds = run_seeds(cfg["seed"], run)
    train, test, _, _ = prepare_dataset(cfg, seeds)
    enc = _encoder(cfg, train.dim_m, seeds)
    hvs = encode_batch(enc, train.samples)
    model = fit(list(zip(hvs, train.labels)), _train_config(cfg, seeds),
                encoder_fingerprint=enc.fingerprint)
    _, metrics = evaluate(model, enc, test)
    log.info("run %d: accuracy %.4f", run, metrics.accuracy)
    return metrics


def cmd_predict(args):
    """ classify every window of the recordings listed in a manifest """
    model, header = load_model(args.model)
    enc = generate_basis(header["dim_m"], header["dim_d"], header["seed"],
                         mode=header["mode"], dtype=header["dtype"])
    if enc.fingerprint != model.encoder_fingerprint:
        raise ModelEncoderMismatchError(
            "cannot rebuild the encoder of {} from its header".format(args.model)
        )

    recordings, _ = load_recordings(args.manifest)
    channels = header.get("channels") or recordings[0].channel_names
    n = header.get("window") or header["dim_m"] // len(channels)
    if n * len(channels) != header["dim_m"]:
        raise DimensionMismatchError(
            "{} channels x {} samples do not match the model input length {}".format(
                len(channels), n, header["dim_m"]
            )
        )

    samples, provenance = [], []
    for rec in recordings:
        vectors = window(rec.reordered(channels), WindowSpec(n))
        samples.append(vectors)
        provenance += [(rec.part_id, rec.feature_id, k) for k in range(len(vectors))]
    ds = LabeledDataset(np.vstack(samples), [""] * len(provenance), provenance,
                        len(channels))
    if header.get("normalization"):
        ds = ChannelScaler.from_dict(header["normalization"]).transform(ds)

    predicted = predict_batch(model, encode_batch(enc, ds.samples))
    table = pd.DataFrame(provenance, columns=["part_id", "feature_id", "window"])
    table["predicted"] = predicted

    out_dir = _output_dir(args.output)
    path = os.path.join(out_dir, "predictions.csv")
    table.to_csv(path, index=False)

    votes = table.groupby(["part_id", "feature_id"])["predicted"].agg(
        lambda x: x.value_counts().index[0]
    )
    print("{} windows classified, written to {}".format(len(table), path))
    for (part_id, feature_id), label in votes.items():
        print("  {:6s} {:14s} {}".format(part_id, feature_id, label))
    return 0


def cmd_bench(args):
    """ HDC vs MLP: training and inference time, energy and accuracy """
    cfg = _run_config(args)
    out_dir = _output_dir(cfg["output"])
    write_run_config(cfg, out_dir)

    train, test, _, _ = prepare_dataset(cfg)
    enc = _encoder(cfg, train.dim_m)
    src = _power_source(cfg)
    reps = cfg["bench"]["repetitions"]
    train_cfg = _train_config(cfg)
    mlp_cfg = _mlp_config(cfg)

    train_pairs = list(zip(encode_batch(enc, train.samples), train.labels))

    fits = compare(
        [
            ("hdc_fit", lambda: fit(train_pairs, train_cfg,
                                    encoder_fingerprint=enc.fingerprint)),
            ("mlp_fit", lambda: mlp_fit(train, mlp_cfg)),
        ],
        src, reps, reference="mlp_fit",
    )
    hdc_model = fits.results["hdc_fit"]
    mlp_model = fits.results["mlp_fit"]

    infers = compare(
        [
            ("hdc_infer", lambda: predict_batch(hdc_model, encode_batch(enc, test.samples))),
            ("mlp_infer", lambda: mlp_predict(mlp_model, test.samples)),
        ],
        src, reps, reference="mlp_infer",
    )

    accuracy = OrderedDict()
    for name, key in (("hdc", "hdc_infer"), ("mlp", "mlp_infer")):
        metrics = metrics_from_confusion(confusion_matrix(test.labels, infers.results[key]))
        accuracy[name] = metrics

    path = os.path.join(out_dir, "bench.jsonl")
    fits.to_jsonl(path)
    infers.to_jsonl(path, mode="a")
    with open(path, "a") as outfile:
        for name, metrics in accuracy.items():
            record = OrderedDict(
                record="accuracy", model=name, accuracy=metrics.accuracy,
                macro_f1=metrics.macro_f1,
                energy_per_inference_j=float(
                    infers.summary.loc[name + "_infer", "energy_mean_j"]
                ) / len(test),
            )
            outfile.write(json.dumps(record) + "\n")
        outfile.write(json.dumps(OrderedDict(
            record="config", encoder_mode=enc.mode, dim=enc.dim_d,
            mlp_hidden=list(mlp_cfg.hidden_sizes), mlp_epochs=mlp_cfg.epochs,
            source=src.describe(), repetitions=reps, seeds=dict(cfg["seeds"]),
            feature=cfg["data"]["feature"] or None,
        )) + "\n")

    fits.printSummary()
    print()
    infers.printSummary()
    print()
    for name, metrics in accuracy.items():
        print("{:4s} accuracy {:.4f}  macro F1 {:.4f}".format(
            name, metrics.accuracy, metrics.macro_f1))
    print("encoder: {} (D={}); results written to {}".format(enc.mode, enc.dim_d, path))

    if args.plot:
        from .utils import plot_comparison

        plot_comparison(fits, os.path.join(out_dir, "bench_fit.png"))
        plot_comparison(infers, os.path.join(out_dir, "bench_infer.png"))
    return 0


def _default_scenario():
    return os.path.join(os.path.dirname(__file__), "data", "fleet_scenario.json")


def cmd_project(args):
    """ annual energy of two scenarios, savings and CO2 equivalent """
    name, a, b, co2 = load_scenario(args.scenario or _default_scenario())

    shared = {}
    for field, flag in zip(PARAM_FIELDS[1:], ("rate", "part_time", "parts_per_year",
                                              "machines", "processes")):
        value = getattr(args, flag)
        if value is not None:
            shared[field] = value
    a = a.replace(**shared)
    b = b.replace(**shared)
    if args.ei_a is not None:
        a = a.replace(energy_per_inference_j=args.ei_a)
    if args.ei_b is not None:
        b = b.replace(energy_per_inference_j=args.ei_b)
    if args.co2_factor is not None:
        co2 = args.co2_factor

    report = savings(a, b, co2)
    report.printSummary(name)

    if args.output:
        out_dir = _output_dir(args.output)
        data = OrderedDict(name=name, a=a.to_dict(), b=b.to_dict())
        data.update(report.to_dict())
        _write_json(os.path.join(out_dir, "projection.json"), data)
    return 0


# ============================================================================
# argument parsing
# ============================================================================


def _add_run_options(parser, training=True):
    parser.add_argument("-c", "--config", help="run configuration file")
    parser.add_argument("--seed", type=int, help="root seed")
    parser.add_argument("-o", "--output", help="output directory")
    parser.add_argument("--manifest", help="recording manifest (default: synthetic)")
    parser.add_argument("--channels", type=int, help="synthetic channel count")
    parser.add_argument("--samples", type=int, help="synthetic samples per recording")
    parser.add_argument("--parts-per-class", type=int, help="synthetic parts per class")
    parser.add_argument("--noise", type=float, help="synthetic noise sigma")
    parser.add_argument("--window", type=int, help="window length n (samples)")
    if not training:
        return
    parser.add_argument("--feature", help="use only the recordings of this feature id")
    parser.add_argument("--dim", type=int, help="hypervector dimension D")
    parser.add_argument("--mode", choices=("linear", "nonlinear"), help="encoder")
    parser.add_argument("--learning-rate", type=float, help="HDC learning rate")
    parser.add_argument("--epochs", type=int, help="maximum retraining epochs")
    parser.add_argument("--patience", type=int, help="early-stopping patience")
    parser.add_argument("--train-fraction", type=float, help="train split fraction")
    parser.add_argument("--power-source",
                        choices=("constant_power", "trace", "platform_counter"))
    parser.add_argument("--watts", type=float, help="constant power (W)")
    parser.add_argument("--trace-file", help="CSV power trace (time,watts)")
    parser.add_argument("--plot", action="store_true", help="save plots")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hdqual",
        description="Hyperdimensional quality classification of sensor "
        "recordings, with energy metering and fleet projection",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug output")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    synth = sub.add_parser("synth", help="write synthetic recordings")
    _add_run_options(synth, training=False)
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser("train", help="train and evaluate an HDC model")
    _add_run_options(train)
    train.add_argument("--runs", type=int, help="repeated runs (derived seeds) for mean +/- std")
    train.set_defaults(func=cmd_train)

    pred = sub.add_parser("predict", help="classify recordings with a saved model")
    pred.add_argument("--model", required=True, help="model file (model.hdm)")
    pred.add_argument("--manifest", required=True, help="recording manifest")
    pred.add_argument("-o", "--output", default=".", help="output directory")
    pred.set_defaults(func=cmd_predict)

    bench = sub.add_parser("bench", help="compare HDC and MLP time and energy")
    _add_run_options(bench)
    bench.add_argument("--repetitions", type=int, help="measured runs per workload")
    bench.add_argument("--mlp-epochs", type=int, help="MLP training epochs")
    bench.set_defaults(func=cmd_bench)

    proj = sub.add_parser("project", help="annual fleet energy savings")
    proj.add_argument("--scenario", help="scenario JSON (default: shipped example)")
    proj.add_argument("--ei-a", type=float, help="energy per inference of a (J)")
    proj.add_argument("--ei-b", type=float, help="energy per inference of b (J)")
    proj.add_argument("--rate", type=float, help="inference rate (Hz)")
    proj.add_argument("--part-time", type=float, help="fabrication time per part (s)")
    proj.add_argument("--parts-per-year", type=float, help="parts per machine and year")
    proj.add_argument("--machines", type=float, help="number of machines")
    proj.add_argument("--processes", type=float, help="number of processes")
    proj.add_argument("--co2-factor", type=float, help="kg CO2e per kWh")
    proj.add_argument("-o", "--output", help="directory for projection.json")
    proj.set_defaults(func=cmd_project)

    return parser


def _fail(code, exit_code, message):
    message = " ".join(str(message).split())
    sys.stderr.write("hdqual: error code={} exit={}: {}\n".format(code, exit_code, message))
    return exit_code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    colorama.just_fix_windows_console()

    try:
        return args.func(args) or 0
    except HdqualError as err:
        return _fail(err.code, err.exit_code, err)
    except Exception as err:
        log.debug("unexpected error", exc_info=True)
        return _fail("RUNTIME_ERROR", 4, "{}: {}".format(type(err).__name__, err))


if __name__ == "__main__":
    sys.exit(main())
