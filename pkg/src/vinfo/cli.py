"""Command-line surface. One analysis pipeline per invocation.

    vinfo synth            --config run.json [--out DIR]
    vinfo train            --config run.json [--out DIR]
    vinfo pvi              --config run.json [--model PAIR.npz] [--out DIR]
    vinfo vinfo            --config run.json [--model PAIR.npz] [--out DIR]
    vinfo transform-report --config run.json [--transform k1,k2] [--out DIR]
    vinfo artefacts        --config run.json --class LABEL [--min-count N] [--top-k K]
    vinfo slices           --config run.json [--pvi pvi.csv] [--out DIR]
    vinfo gap              --config run.json [--pvi pvi.csv] [--out DIR]
    vinfo correlate        A.csv B.csv [--scalar] [--out DIR]
    vinfo sweep            --config run.json [--fractions 0.1,0.5,1.0] [--repeats R]
    vinfo import-scores    --config run.json [--scores scores.jsonl] [--out DIR]

Every command exits 0 only when no row-level validation error occurred, 1 on
toolkit errors, and 2 on usage errors. Outputs are a function of the config
content alone: identical configs give byte-identical report files.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis, io, synthetic, transforms
from .core import compute_all, summarize_records
from .data import split_dataset
from .errors import ConfigurationError, ValidationError, VinfoError
from .families import load_pair, save_pair, train_pair


def _outdir(cfg: io.RunConfig, args) -> str:
    out = cfg.out_dir(args.out)
    os.makedirs(out, exist_ok=True)
    return out


def _pair_for(cfg: io.RunConfig, args):
    if getattr(args, "model", None):
        return load_pair(args.model), cfg.family(getattr(args, "family", None))
    family = cfg.family(getattr(args, "family", None))
    pair = train_pair(family, cfg.load_split("train"), cfg.load_split("dev"))
    return pair, family


def _summary_json(summary, provenance: dict, labels) -> dict:
    return {
        "v_information_bits": summary.v_information,
        "label_entropy_bits": summary.label_entropy.bits,
        "label_entropy_std_err": summary.label_entropy.std_err,
        "conditional_entropy_bits": summary.conditional_entropy.bits,
        "conditional_entropy_std_err": summary.conditional_entropy.std_err,
        "pvi_std_err": summary.pvi_std_err,
        "n": summary.n,
        "labels": list(labels),
        "provenance": provenance,
    }


def cmd_synth(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    section = cfg.raw.get("synth")
    if not section:
        raise ConfigurationError("config has no 'synth' section")
    out = _outdir(cfg, args)
    kind = section.get("kind", "planted")
    if kind == "planted":
        params = {k: v for k, v in section.items() if k != "kind"}
        params.setdefault("seed", cfg.seed)
        if "filler_len" in params:
            params["filler_len"] = tuple(params["filler_len"])
        spec = synthetic.PlantedSpec(**params)
        train, dev, test, truth = synthetic.generate_planted(spec)
        meta = {"kind": "planted", "spec": spec.to_dict(), "true_info_bits": truth}
    elif kind == "independent":
        whole = synthetic.generate_independent(
            n=section["n"], n_classes=section.get("n_classes", 2),
            seed=section.get("seed", cfg.seed))
        train, dev, test = split_dataset(whole)
        meta = {"kind": "independent", "n": section["n"],
                "n_classes": section.get("n_classes", 2), "true_info_bits": 0.0}
    else:
        raise ConfigurationError(f"unknown synth kind {kind!r}")
    for split, data in (("train", train), ("dev", dev), ("test", test)):
        io.write_dataset(data, os.path.join(out, f"{split}.jsonl"))
    meta["provenance"] = io.provenance_block(cfg.seed)
    io.write_json(meta, os.path.join(out, "synth.json"))
    print(f"wrote {out}/(train|dev|test).jsonl  n={len(train)}/{len(dev)}/{len(test)}")
    return 0


def cmd_train(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    family = cfg.family(args.family)
    pair = train_pair(family, cfg.load_split("train"), cfg.load_split("dev"))
    out = _outdir(cfg, args)
    model_path = os.path.join(out, "pair.npz")
    save_pair(pair, model_path)
    io.write_json({"metadata": pair.metadata,
                   "provenance": io.provenance_block(cfg.seed, family, pair.metadata)},
                  os.path.join(out, "train_report.json"))
    print(f"wrote {model_path} (selected epochs: input={pair.metadata['selected_epoch_input']}, "
          f"null={pair.metadata['selected_epoch_null']})")
    return 0


def _records_and_summary(cfg, args):
    test = cfg.load_split("test")
    if getattr(args, "pvi", None):
        records = io.read_pvi_csv(args.pvi, test.label_space)
        return test, records, summarize_records(records), None
    pair, family = _pair_for(cfg, args)
    records, summary = compute_all(pair, test)
    return test, records, summary, (pair, family)


def cmd_pvi(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    test = cfg.load_split("test")
    pair, family = _pair_for(cfg, args)
    records, summary = compute_all(pair, test)
    out = _outdir(cfg, args)
    io.write_pvi_csv(records, test.label_space, os.path.join(out, "pvi.csv"))
    prov = io.provenance_block(cfg.seed, family, pair.metadata)
    io.write_json(_summary_json(summary, prov, test.label_space.labels),
                  os.path.join(out, "summary.json"))
    print(f"wrote {out}/pvi.csv and summary.json  "
          f"v_information_bits={summary.v_information!r} n={summary.n}")
    return 0


def cmd_vinfo(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    test = cfg.load_split("test")
    pair, family = _pair_for(cfg, args)
    records, summary = compute_all(pair, test)
    out = _outdir(cfg, args)
    prov = io.provenance_block(cfg.seed, family, pair.metadata)
    io.write_json(_summary_json(summary, prov, test.label_space.labels),
                  os.path.join(out, "summary.json"))
    print(f"v_information_bits={summary.v_information!r}")
    return 0


def cmd_transform_report(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    family = cfg.family(args.family)
    kinds = args.transform.split(",") if args.transform else None
    specs = cfg.transforms(kinds)
    train = cfg.load_split("train")
    test = cfg.load_split("test")
    dev = cfg.load_split("dev") if cfg.has_dataset("dev") else None
    report = transforms.attribute_report(specs, family, train, test, dev=dev)
    out = _outdir(cfg, args)
    rows = [{"transform": r.transform,
             "v_information_bits": "" if r.v_information_bits is None else repr(r.v_information_bits),
             "std_err": "" if r.std_err is None else repr(r.std_err),
             "n": "" if r.n is None else r.n,
             "error": r.error or ""}
            for r in report.rows]
    io.write_csv(os.path.join(out, "transform_report.csv"),
                 ("transform", "v_information_bits", "std_err", "n", "error"), rows)
    io.write_json({"note": report.note,
                   "rows": [r.__dict__ for r in report.rows],
                   "provenance": io.provenance_block(cfg.seed, family)},
                  os.path.join(out, "transform_report.json"))
    failures = [r for r in report.rows if r.error]
    print(f"wrote {out}/transform_report.csv ({len(report.rows)} rows, {len(failures)} failed)")
    return 1 if failures else 0


def cmd_artefacts(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    opts = cfg.raw.get("artefacts", {})
    label = args.label or opts.get("class")
    if label is None:
        raise ConfigurationError("artefacts needs --class or an artefacts.class config entry")
    min_count = args.min_count if args.min_count is not None else opts.get("min_count", 20)
    top_k = args.top_k if args.top_k is not None else opts.get("top_k", 10)
    test = cfg.load_split("test")
    pair, family = _pair_for(cfg, args)
    arts = analysis.loo_artefacts(pair.input_model, test, label,
                                  min_count=int(min_count), top_k=int(top_k))
    out = _outdir(cfg, args)
    io.write_csv(os.path.join(out, "artefacts.csv"),
                 ("token", "label", "delta_bits", "count"),
                 [{"token": a.token, "label": a.label,
                   "delta_bits": repr(a.delta_bits), "count": a.count} for a in arts])
    io.write_json({"rows": [a.__dict__ for a in arts],
                   "class": label, "min_count": int(min_count), "top_k": int(top_k),
                   "provenance": io.provenance_block(cfg.seed, family, pair.metadata)},
                  os.path.join(out, "artefacts.json"))
    print(f"wrote {out}/artefacts.csv ({len(arts)} tokens)")
    return 0


def _config_slices(cfg: io.RunConfig, data):
    specs = []
    for d in cfg.raw.get("slices", []):
        kind = d.get("kind")
        if kind == "class":
            specs.append(analysis.slice_by_class(data, d["label"]))
        elif kind == "ids":
            specs.append(analysis.slice_by_ids(d["ids"], d.get("name")))
        elif kind == "overlap_bin":
            a, b = d["fields"]
            specs.append(analysis.slice_by_overlap_bin(a, b, int(d["lo"]), int(d["hi"])))
        elif kind == "scalar_range":
            values = io.read_scalar_csv(cfg._resolve(d["path"]))
            specs.append(analysis.slice_by_scalar_range(values, float(d["lo"]),
                                                        float(d["hi"]), d.get("name")))
        else:
            raise ConfigurationError(f"unknown slice kind {kind!r}")
    if not specs:
        specs = [analysis.slice_by_class(data, name) for name in data.label_space.labels]
    return specs


def _replay_provenance(cfg, args, trained) -> dict:
    prov = io.provenance_block(cfg.seed, trained[1] if trained else None,
                               trained[0].metadata if trained else None)
    if getattr(args, "pvi", None):
        prov["source_pvi"] = os.path.basename(args.pvi)
    return prov


def cmd_slices(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    test, records, _, trained = _records_and_summary(cfg, args)
    report = analysis.slice_mean_pvi(records, test, _config_slices(cfg, test),
                                     min_slice_n=int(cfg.raw.get("min_slice_n", 10)))
    out = _outdir(cfg, args)
    io.write_csv(os.path.join(out, "slices.csv"),
                 ("slice", "n", "mean_pvi_bits", "flagged"),
                 [{"slice": r.slice, "n": r.n, "mean_pvi_bits": repr(r.mean_pvi_bits),
                   "flagged": "true" if r.flagged else "false"} for r in report.rows])
    io.write_json({"note": report.note, "rows": [r.__dict__ for r in report.rows],
                   "provenance": _replay_provenance(cfg, args, trained)},
                  os.path.join(out, "slices.json"))
    print(f"wrote {out}/slices.csv ({len(report.rows)} slices)")
    return 0


def cmd_gap(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    test, records, _, trained = _records_and_summary(cfg, args)
    report = analysis.correct_incorrect_gap(records)
    out = _outdir(cfg, args)
    prov = _replay_provenance(cfg, args, trained)
    io.write_json({**report.__dict__, "provenance": prov}, os.path.join(out, "gap.json"))
    print(f"gap_bits={report.gap_bits!r} (n_correct={report.n_correct}, "
          f"n_incorrect={report.n_incorrect}, p={report.p_value:.3g})")
    return 0


def _pvi_map_from_csv(path: str) -> dict[str, float]:
    import csv as _csv
    out: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        if not reader.fieldnames or "id" not in reader.fieldnames or "pvi_bits" not in reader.fieldnames:
            raise ValidationError(f"{path}: expected columns including id and pvi_bits")
        for row in reader:
            out[row["id"]] = float(row["pvi_bits"])
    return out


def cmd_correlate(args) -> int:
    a = _pvi_map_from_csv(args.a)
    b = io.read_scalar_csv(args.b) if args.scalar else _pvi_map_from_csv(args.b)
    r = analysis.correlation_of_maps(a, b)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        io.write_json({"pearson_r": r, "n": len(a)}, os.path.join(args.out, "correlate.json"))
    print(f"pearson_r={r!r} n={len(a)}")
    return 0


def cmd_sweep(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    section = cfg.raw.get("sweep", {})
    fractions = ([float(x) for x in args.fractions.split(",")]
                 if args.fractions else section.get("fractions"))
    if not fractions:
        raise ConfigurationError("sweep needs --fractions or a sweep.fractions config entry")
    repeats = args.repeats if args.repeats is not None else section.get("repeats", 4)
    family = cfg.family(args.family)
    train = cfg.load_split("train")
    test = cfg.load_split("test")
    dev = cfg.load_split("dev") if cfg.has_dataset("dev") else None
    rows = synthetic.fraction_sweep(family, train, test, fractions, int(repeats), dev=dev)
    out = _outdir(cfg, args)
    io.write_csv(os.path.join(out, "sweep.csv"),
                 ("fraction", "n_train", "mean_bits", "std_bits", "flagged"),
                 [{"fraction": repr(r.fraction), "n_train": r.n_train,
                   "mean_bits": repr(r.mean_bits), "std_bits": repr(r.std_bits),
                   "flagged": "true" if r.flagged else "false"} for r in rows])
    io.write_json({"rows": [r.__dict__ for r in rows],
                   "provenance": io.provenance_block(cfg.seed, family)},
                  os.path.join(out, "sweep.json"))
    print(f"wrote {out}/sweep.csv ({len(rows)} fractions x {repeats} repeats)")
    return 0


def cmd_import_scores(args) -> int:
    cfg = io.load_config(args.config, args.seed)
    path = args.scores or cfg.raw.get("scores")
    if not path:
        raise ConfigurationError("import-scores needs --scores or a scores config entry")
    path = cfg._resolve(path)
    test = cfg.load_split("test")
    scores = io.load_scores(path)
    records, summary = io.import_scores(scores, test)
    out = _outdir(cfg, args)
    io.write_pvi_csv(records, test.label_space, os.path.join(out, "pvi.csv"))
    prov = io.provenance_block(cfg.seed)
    prov["scores_model"] = scores.model
    prov["scores_log_base"] = scores.log_base
    io.write_json(_summary_json(summary, prov, test.label_space.labels),
                  os.path.join(out, "summary.json"))
    print(f"wrote {out}/pvi.csv and summary.json  "
          f"v_information_bits={summary.v_information!r} n={summary.n}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vinfo",
                                     description="Usable-information dataset difficulty toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run configuration JSON")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("synth", help="generate synthetic dataset files")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit the predictor pair and save it")
    common(p)
    p.add_argument("--family", default=None, help="override the family kind")
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (("pvi", cmd_pvi, "per-instance scores plus summary"),
                                 ("vinfo", cmd_vinfo, "dataset-level estimate")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--family", default=None)
        p.add_argument("--model", default=None, help="reuse a saved pair.npz")
        p.set_defaults(func=func)

    p = sub.add_parser("transform-report", help="usable information per input transform")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--transform", default=None, help="comma list of transform kinds")
    p.set_defaults(func=cmd_transform_report)

    p = sub.add_parser("artefacts", help="leave-one-out token artefacts for one class")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--class", dest="label", default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.set_defaults(func=cmd_artefacts)

    p = sub.add_parser("slices", help="mean PVI per configured slice")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--pvi", default=None, help="reuse a PVI CSV instead of training")
    p.set_defaults(func=cmd_slices)

    p = sub.add_parser("gap", help="correct/incorrect mean-PVI gap")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--pvi", default=None)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("correlate", help="Pearson r between two per-id vectors")
    p.add_argument("a", help="PVI CSV")
    p.add_argument("b", help="PVI CSV (or id,value CSV with --scalar)")
    p.add_argument("--scalar", action="store_true", help="treat B as a two-column id,value CSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("sweep", help="training-fraction sweep")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--fractions", default=None, help="comma list, e.g. 0.1,0.5,1.0")
    p.add_argument("--repeats", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("import-scores", help="PVI from externally computed scores")
    common(p)
    p.add_argument("--scores", default=None, help="score file path")
    p.set_defaults(func=cmd_import_scores)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VinfoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
