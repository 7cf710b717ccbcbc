"""Command-line front end.

Subcommands: fit, simulate, select, robust, infer, segment, kernels.  Every
subcommand accepts --config pointing at a JSON file whose keys mirror the
flag names; explicit flags override config values, and unknown config keys
are rejected.  Exit codes: 0 success, 2 input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .density import (
    DISCRETE_KERNELS,
    continuous_kde,
    empirical_pmf,
    epanechnikov_bandwidth,
    ise,
    kernel_moments,
    smoothed_pmf,
    _kernel_row,
)
from .divergence import divergence
from .engine import FitConfig, fit, matched_pi_update
from .inference import (
    coord_names,
    sandwich_cov,
    score_and_fisher,
    wilks_stat,
)
from .mixtures import (
    FAMILIES,
    MixtureSpec,
    canonicalize,
    family_param_names,
    is_count_family,
    sample,
)
from .robustness import ContaminationSpec, bias_curve, contaminate, _flat_names
from .segmentation import (
    default_display_values,
    read_pgm,
    render_labels,
    segment,
    write_pgm,
)
from .selection import SelectionConfig, split_select_estimate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (FloatingPointError, np.linalg.LinAlgError, RuntimeError, ArithmeticError)


class InputError(Exception):
    pass


class NumericError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def theta_to_obj(theta: MixtureSpec) -> dict:
    return {
        "family": theta.family,
        "weights": [float(w) for w in theta.weights],
        "params": [[float(v) for v in row] for row in theta.params],
    }


def theta_from_obj(obj) -> MixtureSpec:
    if not isinstance(obj, dict):
        raise InputError("mixture spec must be a JSON object with family/weights/params")
    try:
        return MixtureSpec(
            str(obj["family"]),
            np.asarray(obj["weights"], dtype=float),
            np.asarray(obj["params"], dtype=float),
        )
    except KeyError as exc:
        raise InputError(f"mixture spec missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad mixture spec: {exc}") from None


def _load_theta_file(path) -> MixtureSpec:
    try:
        with open(path) as fh:
            return theta_from_obj(json.load(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _read_column(path) -> np.ndarray:
    """One numeric column, CSV or whitespace separated, header row optional."""
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    vals = []
    for i, ln in enumerate(lines):
        if not ln:
            continue
        tok = ln.split(",")[0].split()[0]
        try:
            vals.append(float(tok))
        except ValueError:
            if i == 0 and not vals:
                continue  # header row
            raise InputError(f"{path}:{i + 1}: not a number: {tok!r}") from None
    if not vals:
        raise InputError(f"{path}: no observations found")
    return np.asarray(vals, dtype=float)


def _fnum(x) -> str:
    """Full-precision decimal so written values read back exactly."""
    return repr(float(x))


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows) -> None:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else _fnum(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_methods(text) -> list[tuple[str, str]]:
    """'hd' or 'hd:hmix_squared', comma separated; bare names take the matched mode."""
    entries = text if isinstance(text, (list, tuple)) else str(text).split(",")
    out = []
    for entry in entries:
        entry = entry.strip()
        if not entry:
            continue
        div_label, _, pi = entry.partition(":")
        out.append((div_label, pi or matched_pi_update(div_label)))
    if not out:
        raise InputError("no methods given")
    return out


def _build_fit_config(cfg, div_label, pi_update=None) -> FitConfig:
    try:
        div = divergence(div_label)
        return FitConfig(
            divergence=div,
            pi_update=pi_update or cfg.get("pi_update") or matched_pi_update(div),
            max_iters=int(cfg["max_iters"]),
            tol=float(cfg["tol"]),
            optimizer=cfg["optimizer"],
            optimizer_iters=int(cfg["optimizer_iters"]),
            seed=int(cfg["seed"]),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

_FIT_TUNING = {
    "div": dict(type=str, help="divergence label (kl, kl_calibrated, hd, ned, vned, ...)"),
    "pi_update": dict(type=str, help="weight update mode; default matches the divergence"),
    "max_iters": dict(type=int, help="sweep budget"),
    "tol": dict(type=float, help="surrogate-change stopping tolerance"),
    "optimizer": dict(type=str, help="component optimizer (auto/golden_section/nelder_mead)"),
    "optimizer_iters": dict(type=int, help="iterations per component optimization"),
    "seed": dict(type=int, help="RNG seed"),
}

_COMMANDS: dict[str, dict] = {
    "fit": {
        "positional": ("data", "observations CSV (one column, header optional)"),
        "options": {
            "family": dict(type=str), "K": dict(type=int, help="number of components"),
            "kernel": dict(type=str, help="target estimate: empirical or a smoothing kernel"),
            "c": dict(type=float, help="kernel bandwidth"),
            "a": dict(type=int, help="triangular kernel arm"),
            "init": dict(type=str), "theta0": dict(type=str, help="JSON start point"),
            "out": dict(type=str), **_FIT_TUNING,
        },
        "defaults": {
            "family": "poisson", "K": None, "kernel": "empirical", "c": 0.1, "a": None,
            "init": "kmeans", "theta0": None, "out": "fit_result.json", "div": "kl",
            "pi_update": None, "max_iters": 500, "tol": 1e-8, "optimizer": "auto",
            "optimizer_iters": 200, "seed": 0,
        },
    },
    "simulate": {
        "positional": None,
        "options": {
            "truth": dict(type=str, help="JSON file with family/weights/params"),
            "n": dict(type=int), "reps": dict(type=int),
            "methods": dict(type=str, help="comma list, e.g. kl,hd:hmix_squared"),
            "eps": dict(type=float, help="contamination fraction"),
            "value": dict(type=float, help="contamination point mass location"),
            "outdir": dict(type=str), **_FIT_TUNING,
        },
        "defaults": {
            "truth": None, "n": 200, "reps": 200, "methods": "kl", "eps": 0.0,
            "value": 50.0, "outdir": ".", "div": "kl", "pi_update": None,
            "max_iters": 500, "tol": 1e-8, "optimizer": "auto", "optimizer_iters": 200,
            "seed": 0,
        },
    },
    "select": {
        "positional": ("data", "observations CSV"),
        "options": {
            "family": dict(type=str), "k_max": dict(type=int), "splits": dict(type=int),
            "split_ratio": dict(type=float), "restarts": dict(type=int),
            "penalty": dict(type=str), "out": dict(type=str), **_FIT_TUNING,
        },
        "defaults": {
            "family": "poisson", "k_max": 3, "splits": 5, "split_ratio": 0.5,
            "restarts": 3, "penalty": "bic_half_log", "out": "select_report.json",
            "div": "kl", "pi_update": None, "max_iters": 500, "tol": 1e-8,
            "optimizer": "auto", "optimizer_iters": 200, "seed": 0,
        },
    },
    "robust": {
        "positional": None,
        "options": {
            "truth": dict(type=str), "n": dict(type=int), "reps": dict(type=int),
            "methods": dict(type=str),
            "eps": dict(type=str, help="comma-separated contamination grid"),
            "value": dict(type=float), "out": dict(type=str), **_FIT_TUNING,
        },
        "defaults": {
            "truth": None, "n": 500, "reps": 20, "methods": "kl,hd,vned",
            "eps": "0,0.05,0.1,0.15,0.2,0.3", "value": 50.0, "out": "bias_table.csv",
            "div": "kl", "pi_update": None, "max_iters": 200, "tol": 1e-8,
            "optimizer": "auto", "optimizer_iters": 150, "seed": 0,
        },
    },
    "infer": {
        "positional": ("data", "observations CSV"),
        "options": {
            "family": dict(type=str), "K": dict(type=int),
            "wilks": dict(action="store_true", help="report the deviance statistic"),
            "theta_ref": dict(type=str, help="JSON reference point for the deviance"),
            "out": dict(type=str), **_FIT_TUNING,
        },
        "defaults": {
            "family": "poisson", "K": None, "wilks": False, "theta_ref": None,
            "out": "infer_report.json", "div": "kl", "pi_update": None,
            "max_iters": 2000, "tol": 1e-12, "optimizer": "auto",
            "optimizer_iters": 200, "seed": 0,
        },
    },
    "segment": {
        "positional": ("image", "input PGM (P2 or P5)"),
        "options": {
            "K": dict(type=int), "eps": dict(type=float, help="contamination fraction"),
            "contam_mean": dict(type=float, help="clipped-Poisson contamination mean"),
            "display": dict(type=str, help="comma list of class display intensities"),
            "out": dict(type=str, help="re-colored PGM path"),
            "labels_out": dict(type=str, help="label id grid (text)"),
            "report": dict(type=str, help="estimate report JSON"), **_FIT_TUNING,
        },
        "defaults": {
            "K": 3, "eps": 0.0, "contam_mean": 250.0, "display": None,
            "out": "segmented.pgm", "labels_out": "labels.txt",
            "report": "segment_report.json", "div": "hd", "pi_update": None,
            "max_iters": 500, "tol": 1e-8, "optimizer": "auto",
            "optimizer_iters": 200, "seed": 0,
        },
    },
    "kernels": {
        "positional": None,
        "options": {
            "kernel": dict(type=str, help="comma list of kernels to probe"),
            "c": dict(type=str, help="comma-separated bandwidth grid"),
            "center": dict(type=int), "a": dict(type=int),
            "data": dict(type=str, help="optional observations CSV for ISE"),
            "truth": dict(type=str, help="JSON truth (required with data)"),
            "out": dict(type=str),
        },
        "defaults": {
            "kernel": "poisson", "c": "0.2,0.1,0.05", "center": 5, "a": None,
            "data": None, "truth": None, "out": "kernels.csv",
        },
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmmix",
        description="divergence-minimization fitting for finite mixtures",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="JSON config; flags override its values")
        if spec["positional"] is not None:
            arg, helptext = spec["positional"]
            p.add_argument(arg, nargs="?", default=argparse.SUPPRESS, help=helptext)
        for opt, kwargs in spec["options"].items():
            flag = "--" + opt.replace("_", "-")
            if opt == "K":
                flag = "--K"
            p.add_argument(flag, dest=opt, default=argparse.SUPPRESS, **kwargs)
    return parser


def _merge_config(command: str, ns: argparse.Namespace) -> dict:
    spec = _COMMANDS[command]
    merged = dict(spec["defaults"])
    if spec["positional"] is not None:
        merged.setdefault(spec["positional"][0], None)
    allowed = set(merged)

    if ns.config is not None:
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {ns.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config {ns.config} is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise InputError("config root must be a JSON object")
        unknown = sorted(set(file_cfg) - allowed)
        if unknown:
            raise InputError(f"unknown config fields for {command}: {', '.join(unknown)}")
        merged.update(file_cfg)

    for key, val in vars(ns).items():
        if key in ("command", "config"):
            continue
        merged[key] = val
    return merged


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _require(cfg, key, hint):
    if cfg.get(key) is None:
        raise InputError(f"missing required value {key!r} ({hint})")
    return cfg[key]


def _target_estimate(data, family, cfg):
    kernel = cfg["kernel"]
    if not is_count_family(family):
        return continuous_kde(data, bandwidth=epanechnikov_bandwidth(data))
    if kernel == "empirical":
        return empirical_pmf(data)
    try:
        return smoothed_pmf(data, kernel, float(cfg["c"]), cfg["a"])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_fit(cfg) -> int:
    path = _require(cfg, "data", "observations CSV")
    k = _require(cfg, "K", "number of components")
    data = _read_column(path)
    if cfg["family"] not in FAMILIES:
        raise InputError(f"unknown family {cfg['family']!r}")
    fitcfg = _build_fit_config(cfg, cfg["div"])
    if cfg["theta0"] is not None:
        theta0 = _load_theta_file(cfg["theta0"])
        fitcfg = dataclasses.replace(fitcfg, init="user", theta0=theta0)
    elif cfg["init"] != "kmeans":
        raise InputError("init='user' requires --theta0")
    target = _target_estimate(data, cfg["family"], cfg)

    try:
        res = fit(target, cfg["family"], int(k), fitcfg)
    except _NUMERIC_ERRORS as exc:
        raise NumericError(str(exc)) from None
    except ValueError as exc:
        raise InputError(str(exc)) from None

    _write_json(cfg["out"], {
        "command": "fit",
        "family": cfg["family"],
        "divergence": fitcfg.divergence.label,
        "pi_update": fitcfg.pi_update,
        "n": int(data.size),
        "estimate": theta_to_obj(res.theta_hat),
        "converged": bool(res.converged),
        "iters": int(res.iters),
        "objective_trace": [float(v) for v in res.objective_trace],
        "q_trace": [float(v) for v in res.q_trace],
    })
    print(f"fit: wrote {cfg['out']} (converged={res.converged}, iters={res.iters})")
    return EXIT_OK


def cmd_simulate(cfg) -> int:
    truth = _load_theta_file(_require(cfg, "truth", "JSON truth spec"))
    methods = _parse_methods(cfg["methods"])
    n, reps, seed = int(cfg["n"]), int(cfg["reps"]), int(cfg["seed"])
    eps, value = float(cfg["eps"]), float(cfg["value"])
    outdir = cfg["outdir"].rstrip("/")

    if reps == 1:
        rng = np.random.default_rng((seed, 0))
        data = sample(truth, n, rng)
        if eps > 0.0:
            data = contaminate(data, ContaminationSpec(epsilon=eps, value=value, seed=seed))
        out = f"{outdir}/dataset.csv"
        _write_csv(out, ["y"], [[v] for v in data])
        print(f"simulate: wrote {out} (single dataset, no summary)")
        return EXIT_OK

    names = _flat_names(truth.family, truth.n_components)
    per_rep_rows = []
    summary_rows = []
    for div_label, pi in methods:
        fitcfg = _build_fit_config(cfg, div_label, pi)
        estimates = []
        for rep in range(reps):
            rng = np.random.default_rng((seed, rep))
            data = sample(truth, n, rng)
            if eps > 0.0:
                data = contaminate(
                    data, ContaminationSpec(epsilon=eps, value=value, seed=(seed, rep, 1))
                )
            try:
                est = canonicalize(fit(data, truth.family, truth.n_components, fitcfg).theta_hat)
            except _NUMERIC_ERRORS:
                continue
            flat = est.flat()
            estimates.append(flat)
            per_rep_rows.append([f"{div_label}:{pi}", float(rep)] + [float(v) for v in flat])
        if not estimates:
            raise NumericError(f"all {reps} replications failed for {div_label}")
        arr = np.asarray(estimates)
        summary_rows.append([f"{div_label}:{pi}", "ave"] + list(arr.mean(axis=0)))
        summary_rows.append([f"{div_label}:{pi}", "std"] + list(arr.std(axis=0, ddof=1)))

    est_path = f"{outdir}/estimates.csv"
    sum_path = f"{outdir}/summary.csv"
    _write_csv(est_path, ["method", "rep"] + names, per_rep_rows)
    _write_csv(sum_path, ["method", "statistic"] + names, summary_rows)
    print(f"simulate: wrote {est_path} and {sum_path} ({reps} reps)")
    return EXIT_OK


def cmd_select(cfg) -> int:
    path = _require(cfg, "data", "observations CSV")
    data = _read_column(path)
    if cfg["family"] not in FAMILIES:
        raise InputError(f"unknown family {cfg['family']!r}")
    penalty = cfg["penalty"]
    try:
        penalty = float(penalty)
    except (TypeError, ValueError):
        pass  # keep the rule name
    try:
        sel_cfg = SelectionConfig(
            k_max=int(cfg["k_max"]), penalty=penalty, splits=int(cfg["splits"]),
            split_ratio=float(cfg["split_ratio"]), seed=int(cfg["seed"]),
            restarts=int(cfg["restarts"]),
            fit_config=_build_fit_config(cfg, cfg["div"]),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        res = split_select_estimate(data, cfg["family"], sel_cfg)
    except _NUMERIC_ERRORS as exc:
        raise NumericError(str(exc)) from None

    _write_json(cfg["out"], {
        "command": "select",
        "family": cfg["family"],
        "k_hat": int(res.k_hat),
        "per_split_k": [int(v) for v in res.per_split_k],
        "estimate": theta_to_obj(res.final_estimate),
        "gdic_table": [
            {str(k): [float(x) for x in row] for k, row in table.items()}
            for table in res.gdic_table
        ],
    })
    print(f"select: wrote {cfg['out']} (k_hat={res.k_hat}, votes={list(res.per_split_k)})")
    return EXIT_OK


def cmd_robust(cfg) -> int:
    truth = _load_theta_file(_require(cfg, "truth", "JSON truth spec"))
    methods = _parse_methods(cfg["methods"])
    eps_grid = _parse_floats(cfg["eps"])
    fitcfg = _build_fit_config(cfg, methods[0][0])
    try:
        rows = bias_curve(
            truth, truth.family, methods, eps_grid, n=int(cfg["n"]),
            reps=int(cfg["reps"]), seed=int(cfg["seed"]), fit_config=fitcfg,
            value=float(cfg["value"]),
        )
    except _NUMERIC_ERRORS as exc:
        raise NumericError(str(exc)) from None
    _write_csv(
        cfg["out"],
        ["method", "eps", "parameter", "mean", "sd", "n_converged"],
        [[r["method"], r["eps"], r["parameter"], r["mean"], r["sd"], float(r["n_converged"])]
         for r in rows],
    )
    print(f"robust: wrote {cfg['out']} ({len(rows)} rows)")
    return EXIT_OK


def cmd_infer(cfg) -> int:
    path = _require(cfg, "data", "observations CSV")
    k = _require(cfg, "K", "number of components")
    data = _read_column(path)
    if cfg["family"] not in FAMILIES:
        raise InputError(f"unknown family {cfg['family']!r}")
    fitcfg = _build_fit_config(cfg, cfg["div"])
    theta_ref = _load_theta_file(cfg["theta_ref"]) if cfg["theta_ref"] else None
    if cfg["wilks"] and theta_ref is None:
        raise InputError("--wilks needs --theta-ref")

    try:
        res = fit(data, cfg["family"], int(k), fitcfg)
        theta = res.theta_hat
        _, fisher = score_and_fisher(theta, cfg["family"])
        g_n = (empirical_pmf(data) if is_count_family(cfg["family"])
               else continuous_kde(data, bandwidth=epanechnikov_bandwidth(data)))
        sandwich = sandwich_cov(theta, g_n, cfg["family"], fitcfg.divergence)
        wilks = None
        if cfg["wilks"]:
            wilks = wilks_stat(theta_ref, theta, g_n, cfg["family"],
                               fitcfg.divergence, data.size)
    except _NUMERIC_ERRORS as exc:
        raise NumericError(str(exc)) from None
    except ValueError as exc:
        raise NumericError(str(exc)) from None

    _write_json(cfg["out"], {
        "command": "infer",
        "family": cfg["family"],
        "divergence": fitcfg.divergence.label,
        "n": int(data.size),
        "estimate": theta_to_obj(theta),
        "converged": bool(res.converged),
        "coord_names": coord_names(theta),
        "fisher": [[float(v) for v in row] for row in fisher],
        "sandwich": [[float(v) for v in row] for row in sandwich],
        "wilks_stat": (None if wilks is None else float(wilks)),
    })
    print(f"infer: wrote {cfg['out']}")
    return EXIT_OK


def cmd_segment(cfg) -> int:
    path = _require(cfg, "image", "input PGM")
    try:
        img = read_pgm(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    k = int(cfg["K"])
    fitcfg = _build_fit_config(cfg, cfg["div"])
    contamination = None
    if float(cfg["eps"]) > 0.0:
        contamination = ContaminationSpec(
            epsilon=float(cfg["eps"]), mechanism="density",
            contaminant=MixtureSpec(
                "poisson", np.array([1.0]), np.array([[float(cfg["contam_mean"])]])
            ),
            seed=int(cfg["seed"]),
        )
    display = None
    if cfg["display"] is not None:
        display = [int(v) for v in _parse_floats(cfg["display"])]
        if len(display) != k:
            raise InputError(f"--display needs exactly {k} values")

    try:
        labels, theta = segment(img, k, div=cfg["div"], fit_config=fitcfg,
                                contamination=contamination)
    except _NUMERIC_ERRORS as exc:
        raise NumericError(str(exc)) from None
    except ValueError as exc:
        raise NumericError(str(exc)) from None

    write_pgm(cfg["out"], render_labels(labels, display), binary=False)
    np.savetxt(cfg["labels_out"], labels.as_grid(), fmt="%d")
    _write_json(cfg["report"], {
        "command": "segment",
        "n_classes": k,
        "divergence": fitcfg.divergence.label,
        "estimate": theta_to_obj(theta),
        "display_values": [int(v) for v in
                           (display if display is not None else default_display_values(k))],
        "class_counts": [int(v) for v in np.bincount(labels.labels, minlength=k + 1)[1:]],
    })
    print(f"segment: wrote {cfg['out']}, {cfg['labels_out']}, {cfg['report']}")
    return EXIT_OK


def cmd_kernels(cfg) -> int:
    kernels = [k.strip() for k in str(cfg["kernel"]).split(",") if k.strip()]
    for kern in kernels:
        if kern not in DISCRETE_KERNELS:
            raise InputError(f"unknown kernel {kern!r}; expected one of {DISCRETE_KERNELS}")
    c_grid = _parse_floats(cfg["c"])
    a = cfg["a"]

    if cfg["data"] is not None:
        if cfg["truth"] is None:
            raise InputError("ISE mode needs --truth alongside --data")
        data = _read_column(cfg["data"])
        truth = _load_theta_file(cfg["truth"])
        rows = []
        try:
            for kern in kernels:
                for c in c_grid:
                    est = smoothed_pmf(data, kern, c, a)
                    rows.append([kern, c, ise(est, truth)])
                    if kern == "empirical":
                        break  # bandwidth-free
        except _NUMERIC_ERRORS as exc:
            raise NumericError(str(exc)) from None
        except ValueError as exc:
            raise InputError(str(exc)) from None
        _write_csv(cfg["out"], ["kernel", "c", "ise"], rows)
        print(f"kernels: wrote {cfg['out']} ({len(rows)} ISE rows)")
        return EXIT_OK

    center = int(cfg["center"])
    rows = []
    try:
        for kern in kernels:
            for c in c_grid:
                _, masses = _kernel_row(kern, center, c, a)
                mean, var = kernel_moments(kern, center, c, a)
                rows.append([kern, c, float(center), float(masses.sum()), mean, var])
                if kern == "empirical":
                    break
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write_csv(cfg["out"], ["kernel", "c", "center", "mass_sum", "mean", "variance"], rows)
    print(f"kernels: wrote {cfg['out']} ({len(rows)} diagnostic rows)")
    return EXIT_OK


_RUNNERS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "select": cmd_select,
    "robust": cmd_robust,
    "infer": cmd_infer,
    "segment": cmd_segment,
    "kernels": cmd_kernels,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which matches the input-error code
        return int(exc.code or 0)
    try:
        cfg = _merge_config(ns.command, ns)
        return _RUNNERS[ns.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
