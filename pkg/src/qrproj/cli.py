"""Command-line front end: ``qrproj --experiment jl --dataset mnist.idx --ks 128,256,512``.

Settings are resolved as defaults < config file < flags.  All results are
computed before anything is written; files then land atomically in the
output directory together with ``manifest.json``, whose ``config`` entry
can be passed back through ``--config`` to rerun the experiment.
"""

import argparse
import json
import math
import os
import platform
import sys
import tempfile
import time

import numpy as np
import yaml

from . import __version__, datasets, entropy_bench, jl_bench, kernels, linalg, projectors, rqc, vqsvd
from .seeding import trial_seed

EXPERIMENTS = ("jl", "entropy", "vqsvd", "diagnostics", "export-projector")

DEFAULTS = {
    "common": {"kinds": ["qrp", "srht", "pca"], "ks": [128, 256, 512], "depth": 150, "trials": 10000,
               "seed": 0, "threads": None, "out": "results"},
    "jl": {"dataset": None, "limit": 1000, "selection": "first", "reconstruction": True,
           "fixed_projector": False, "row_selection": "first", "dump_trials": False},
    "entropy": {"kinds": ["qrp"], "ks": [512], "trials": 100, "N": 1024, "ranks": [10, 50, 100, 400],
                "profiles": ["linear", "exponential"], "decay": 1.0, "complex_basis": False,
                "delta": 0.1, "epsilon": None, "calibration_samples": 2000},
    "vqsvd": {"trials": 1, "N": 64, "rank": 5, "target_rank": 5, "m_qubits": [0], "vqsvd_depth": 12,
              "blocks": 2, "learning_rate": 0.1, "momentum": 0.9, "max_iter": 1500,
              "scheme": "parameter-shift"},
    "diagnostics": {"n": 5, "depths": [2, 50, 150], "k": None, "samples": 20000},
    "export-projector": {"kinds": ["qrp"], "ks": [512], "N": 1024, "dataset": None},
}


class ConfigError(ValueError):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = problems


def _csv_list(text, cast=str):
    return [cast(x.strip()) for x in text.split(",") if x.strip()]


def build_parser():
    ap = argparse.ArgumentParser(prog="qrproj", description="Random projection experiments.")
    ap.add_argument("--experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON or YAML settings file (a manifest.json also works)")
    ap.add_argument("--dataset", help="IDX / CIFAR-100 file, or synthetic:N=..,count=..,rank=..")
    ap.add_argument("--kinds", type=lambda s: _csv_list(s.lower()))
    ap.add_argument("--ks", type=lambda s: _csv_list(s, int))
    ap.add_argument("--depth", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out")
    return ap


def load_config_file(path):
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError([f"config: {path} must hold a mapping"])
    return data.get("config", data)


def resolve(args):
    """Merge defaults, config file and flags into one flat dict for the experiment."""
    file_cfg = load_config_file(args.config) if args.config else {}
    experiment = args.experiment or file_cfg.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError([f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}"])
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[experiment])
    unknown = sorted(set(file_cfg) - set(cfg) - {"experiment"})
    if unknown:
        raise ConfigError([f"{key}: unknown setting for {experiment}" for key in unknown])
    cfg.update({k: v for k, v in file_cfg.items() if k != "experiment"})
    for key in ("dataset", "kinds", "ks", "depth", "trials", "seed", "threads", "out"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    cfg["experiment"] = experiment
    validate(cfg)
    return cfg


def _dataset_spec(text):
    if text.startswith("synthetic:"):
        fields = dict(part.split("=", 1) for part in text[len("synthetic:"):].split(",") if part)
        return "synthetic", {k: int(v) for k, v in fields.items()}
    for prefix in ("mnist:", "cifar100:", "vectors:"):
        if text.startswith(prefix):
            return prefix[:-1], text[len(prefix):]
    return "auto", text


def validate(cfg):
    problems = []
    exp = cfg["experiment"]

    def need(cond, key, msg):
        if not cond:
            problems.append(f"{key}: {msg}")

    need(isinstance(cfg["seed"], int) and cfg["seed"] >= 0, "seed", "must be a non-negative integer")
    need(isinstance(cfg["threads"], int) and cfg["threads"] >= 1, "threads", "must be >= 1")
    need(isinstance(cfg["depth"], int) and cfg["depth"] >= 0, "depth", "must be >= 0")
    need(isinstance(cfg["trials"], int) and cfg["trials"] >= 1, "trials", "must be >= 1")
    ks = cfg["ks"]
    need(isinstance(ks, list) and ks and all(isinstance(k, int) and k >= 1 for k in ks), "ks",
         "must be a non-empty list of positive integers")
    kinds = cfg["kinds"]
    for kind in kinds if isinstance(kinds, list) else [kinds]:
        need(str(kind).lower() in jl_bench.KIND_ALIASES, "kinds", f"unknown kind {kind!r}")
    if exp == "jl":
        need(cfg["trials"] >= 2, "trials", "distortion needs at least 2 trials")
        ds = cfg["dataset"]
        need(ds is not None, "dataset", "required for the jl experiment")
        if ds is not None:
            kind, ref = _dataset_spec(str(ds))
            if kind == "synthetic":
                need({"N", "count", "rank"} <= set(ref), "dataset", "synthetic needs N, count and rank")
            else:
                need(os.path.isfile(ref), "dataset", f"file not found: {ref}")
        need(cfg["selection"] in ("first", "random"), "selection", "must be 'first' or 'random'")
        need(cfg["row_selection"] in ("first", "random"), "row_selection", "must be 'first' or 'random'")
    elif exp == "entropy":
        N = cfg["N"]
        need(isinstance(N, int) and linalg.is_power_of_two(N) and N >= 4, "N", "must be a power of two >= 4")
        need(cfg["trials"] >= 2, "trials", "entropy needs at least 2 trials")
        for r in cfg["ranks"]:
            need(isinstance(r, int) and 1 <= r <= (N if isinstance(N, int) else 0), "ranks", f"rank {r} outside 1..N")
        for p in cfg["profiles"]:
            need(p in entropy_bench.PROFILES, "profiles", f"unknown profile {p!r}")
        for kind in cfg["kinds"]:
            need(str(kind).lower() in ("qrp", "srht", "crp"), "kinds", "entropy uses qrp or srht")
        need(0 < cfg["delta"] <= 0.5, "delta", "must lie in (0, 0.5]")
        if isinstance(ks, list) and isinstance(N, int):
            need(all(k <= N for k in ks), "ks", "every k must be <= N")
    elif exp == "vqsvd":
        N = cfg["N"]
        need(isinstance(N, int) and linalg.is_power_of_two(N) and N >= 8, "N", "must be a power of two >= 8")
        n = N.bit_length() - 1 if isinstance(N, int) else 0
        mq = cfg["m_qubits"]
        need(len(set(mq)) == len(mq) and all(0 <= q < n for q in mq), "m_qubits", f"distinct qubits in 0..{n - 1}")
        need(n - len(mq) >= 2, "m_qubits", "at least two qubits must remain after measurement")
        need(1 <= cfg["target_rank"] <= min(cfg["rank"], N >> len(mq) if isinstance(N, int) else 0),
             "target_rank", "must lie in 1..min(rank, k)")
        need(cfg["scheme"] in vqsvd.SCHEMES, "scheme", f"one of {vqsvd.SCHEMES}")
    elif exp == "diagnostics":
        need(isinstance(cfg["n"], int) and 2 <= cfg["n"] <= 12, "n", "must lie in 2..12")
        need(cfg["samples"] >= 100, "samples", "at least 100")
    elif exp == "export-projector":
        N = cfg["N"]
        need(isinstance(N, int) and linalg.is_power_of_two(N) and N <= 1 << 14, "N", "power of two <= 16384")
        if "pca" in [str(k).lower() for k in kinds]:
            need(cfg["dataset"] is not None, "dataset", "PCA export needs a dataset")
        if isinstance(ks, list) and isinstance(N, int):
            need(all(k <= N for k in ks), "ks", "every k must be <= N")
    if problems:
        raise ConfigError(problems)


def load_dataset(text, cfg):
    kind, ref = _dataset_spec(str(text))
    if kind == "synthetic":
        return datasets.synthesize_dataset(ref["N"], ref["count"], ref["rank"], trial_seed(cfg["seed"], 0, 99))
    if kind == "vectors":
        with open(ref, "rb") as fh:
            return datasets.read_vectors(fh, ref)
    if kind == "auto":
        with open(ref, "rb") as fh:
            head = fh.read(4)
        kind = "mnist" if int.from_bytes(head, "big") == datasets.IDX_IMAGE_MAGIC else "cifar100"
    loader = datasets.load_mnist if kind == "mnist" else datasets.load_cifar100
    return loader(ref, cfg.get("limit"), cfg.get("selection", "first"), cfg["seed"])


def _lines(header, rows):
    return header + "\n" + "".join(r + "\n" for r in rows)


def run_jl(cfg):
    ds = load_dataset(cfg["dataset"], cfg)
    dist, recon, trials_dump = [], [], []
    for kind in cfg["kinds"]:
        ks = [k for k in cfg["ks"] if jl_bench.canonical_kind(kind) != "PCA" or k <= min(ds.count, ds.dim)]
        rep = jl_bench.run_distortion(ds, kind, ks, cfg["trials"], cfg["seed"], depth=cfg["depth"],
                                      row_selection=cfg["row_selection"], fixed_projector=cfg["fixed_projector"],
                                      threads=cfg["threads"])
        dist.append(rep)
        if cfg["dump_trials"]:
            trials_dump.extend(rep.trial_rows())
        if cfg["reconstruction"]:
            recon.append(jl_bench.run_reconstruction(ds, kind, ks, cfg["seed"], depth=cfg["depth"],
                                                     row_selection=cfg["row_selection"], threads=cfg["threads"]))
    files = {"jl_distortion.csv": _lines(jl_bench.CSV_HEADER, [r for rep in dist for r in rep.csv_rows()])}
    if recon:
        files["jl_reconstruction.csv"] = _lines(jl_bench.CSV_HEADER, [r for rep in recon for r in rep.csv_rows()])
    if trials_dump:
        files["jl_trials.csv"] = _lines(jl_bench.TRIAL_CSV_HEADER, trials_dump)
    extra = {"dataset_count": ds.count, "dataset_dim": ds.dim,
             "degenerate_pairs": {rep.kind: rep.degenerate for rep in dist}}
    return files, extra


def run_entropy(cfg):
    reports, files, eps_used = [], {}, {}
    for kind in cfg["kinds"]:
        for k in cfg["ks"]:
            eps = cfg["epsilon"]
            if eps is None:
                eps = entropy_bench.calibrate_epsilon(cfg["N"], k, kind, cfg["delta"], cfg["calibration_samples"],
                                                      trial_seed(cfg["seed"], k, 13), depth=cfg["depth"],
                                                      threads=cfg["threads"])
            eps_used[f"{kind}:{k}"] = eps
            for profile in cfg["profiles"]:
                for r in cfg["ranks"]:
                    spec = entropy_bench.LowRankDensitySpec(cfg["N"], r, profile, cfg["decay"],
                                                            complex_basis=cfg["complex_basis"])
                    rep = entropy_bench.run_entropy(spec, kind, k, cfg["trials"], cfg["seed"], depth=cfg["depth"],
                                                    eps=eps, delta=cfg["delta"], threads=cfg["threads"])
                    reports.append(rep)
                    name = f"entropy_sv_{profile}_r{r}_k{k}_{rep.kind.lower()}.csv"
                    files[name] = _lines(entropy_bench.SV_CSV_HEADER, rep.sv_rows())
    files["entropy.csv"] = _lines(entropy_bench.ENTROPY_CSV_HEADER, [r.csv_row() for r in reports])
    extra = {"epsilon": eps_used, "clamped_singular_values": sum(r.clamped for r in reports),
             "envelope_rate": {f"{r.profile}:{r.rank}:{r.k}": r.envelope_rate for r in reports}}
    return files, extra


def run_vqsvd(cfg):
    data = vqsvd.DataMatrixSpec(cfg["N"], cfg["rank"], cfg["seed"])
    config = vqsvd.VqsvdConfig(rank=cfg["target_rank"], depth=cfg["vqsvd_depth"], blocks=cfg["blocks"],
                               learning_rate=cfg["learning_rate"], momentum=cfg["momentum"],
                               max_iter=cfg["max_iter"], scheme=cfg["scheme"], seed=cfg["seed"])
    res = vqsvd.pipeline_demo(data, cfg["m_qubits"], config, proj_depth=cfg["depth"])
    files = {"vqsvd_trace.csv": _lines(vqsvd.TRACE_CSV_HEADER, res.trace.trace_rows()),
             "vqsvd_summary.csv": res.header + "\n" + _lines(vqsvd.SUMMARY_CSV_HEADER, res.summary_rows())}
    extra = {"iterations": res.trace.iterations, "converged": res.trace.converged,
             "projected_sigma": res.projected_sigma.tolist()}
    return files, extra


DIAG_HEADER = "n,depth,k,samples,quantity,value,stderr,haar_value,haar_stderr,exact"


def run_diagnostics(cfg):
    n = cfg["n"]
    N = 1 << n
    k = cfg["k"] or N // 2
    v = linalg.gaussian_vector(N, trial_seed(cfg["seed"], 0, 31))
    samples = cfg["samples"]
    haar = rqc.AnsatzSpec(n, 0, trial_seed(cfg["seed"], 0, 32))
    h_y = rqc.rotated_vectors(haar, v, samples, "haar")
    rows = []

    def stats(y):
        nsq = (N / k) * np.sum(np.abs(y[:, :k]) ** 2, axis=1)
        return {"mean_norm_sq": rqc.mean_estimate(nsq), "var_norm_sq": rqc.variance_estimate(nsq),
                "fourth_moment": rqc.mean_estimate(np.sum(np.abs(y) ** 4, axis=1))}

    exact = {"mean_norm_sq": 1.0, "var_norm_sq": rqc.haar_projected_variance(N, k),
             "fourth_moment": rqc.haar_fourth_moment(N)}
    h = stats(h_y)
    for depth in cfg["depths"]:
        spec = rqc.AnsatzSpec(n, depth, trial_seed(cfg["seed"], depth, 33))
        c = stats(rqc.rotated_vectors(spec, v, samples))
        for q in ("mean_norm_sq", "var_norm_sq", "fourth_moment"):
            rows.append(f"{n},{depth},{k},{samples},{q},{c[q].value:.10g},{c[q].standard_error:.10g},"
                        f"{h[q].value:.10g},{h[q].standard_error:.10g},{exact[q]:.10g}")
    return {"diagnostics.csv": _lines(DIAG_HEADER, rows)}, {"k": k}


def run_export(cfg):
    files, extra = {}, {}
    N = cfg["N"]
    for kind in cfg["kinds"]:
        kind = jl_bench.canonical_kind(kind)
        for k in cfg["ks"]:
            seed = trial_seed(cfg["seed"], k, 41)
            if kind == "SRHT":
                p = projectors.build_srht(N, k, seed)
            elif kind == "QRP":
                spec = rqc.AnsatzSpec(N.bit_length() - 1, cfg["depth"], seed)
                p = projectors.build_qrp(spec, k)
                files[f"circuit_{kind.lower()}_k{k}.txt"] = rqc.circuit_to_text(rqc.build_rqc(spec), spec.depth,
                                                                                  spec.seed)
            else:
                p = projectors.build_pca(load_dataset(cfg["dataset"], cfg).vectors, k)
            with tempfile.TemporaryFile() as fh:
                projectors.write_projector(p, fh)
                fh.seek(0)
                files[f"projector_{kind.lower()}_k{k}.bin"] = fh.read()
            extra[f"{kind}:{k}"] = {"seed": seed, "fingerprint": p.fingerprint}
    return files, extra


RUNNERS = {"jl": run_jl, "entropy": run_entropy, "vqsvd": run_vqsvd, "diagnostics": run_diagnostics,
           "export-projector": run_export}


def _atomic_write(path, payload):
    mode = "wb" if isinstance(payload, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-")
    with os.fdopen(fd, mode) as fh:
        fh.write(payload)
    os.replace(tmp, path)


def run(cfg, argv=None):
    """Execute a resolved config; returns the manifest dict."""
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError([f"out: directory {out} is not writable"])
    t0 = time.time()
    files, extra = RUNNERS[cfg["experiment"]](cfg)
    manifest = {
        "config": cfg,
        "resolved": extra,
        "outputs": sorted(files),
        "versions": {"qrproj": __version__, "numpy": np.__version__, "python": platform.python_version(),
                     "backend": kernels.BACKEND},
        "wall_time_s": round(time.time() - t0, 3),
        "argv": list(argv) if argv is not None else None,
    }
    for name, payload in files.items():
        _atomic_write(os.path.join(out, name), payload)
    _atomic_write(os.path.join(out, "manifest.json"), json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _fail(kind, message, fields=None, code=1):
    err = {"error": kind, "message": message}
    if fields:
        err["fields"] = fields
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except ConfigError as e:
        return _fail("config", str(e), e.problems, code=2)
    except (OSError, yaml.YAMLError) as e:
        return _fail("config", str(e), code=2)
    try:
        manifest = run(cfg, argv)
    except ConfigError as e:
        return _fail("config", str(e), e.problems, code=2)
    except (OSError, ValueError, ArithmeticError, MemoryError) as e:
        return _fail(type(e).__name__, str(e))
    print(f"wrote {', '.join(manifest['outputs'])} and manifest.json to {cfg['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
