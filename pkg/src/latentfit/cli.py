"""Command-line front end: describe, efa, reliability, cfa, sem, simulate.

Errors go to stderr as one line starting with a machine-readable code:
E_PARSE and E_IDENT and E_DATA exit 2, E_CONV exits 3.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import data as data_mod
from .adequacy import bartlett, kmo
from .efa import (assign_factors, communality_screen, extract_pc, factor_count,
                  rotate_varimax)
from .fit import compute_indices
from .linalg import LinAlgError, sym_matrix
from .model import (CONSTANT, INTERCEPT, ModelSyntaxError, PathSpec, SemModel,
                    identify, load_model)
from .reliability import cr_ave, cronbach_alpha, discriminant, drop_one_screen
from .sem import SemError, baseline_model, fit_ml, format_path_tests, path_tests, population_theta, simulate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONV = 3
DEFAULT_TAU = 0.75
SEED_ENV = "LATENTFIT_SEED"
REPORT_KEYS = ("bartlett", "kmo", "factor_count", "loadings", "assignment", "reliability", "fit", "params")


class CliError(Exception):
    def __init__(self, code, message, exit_code=EXIT_INPUT):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


# ---------------------------------------------------------------- formatting

def _num(x):
    """Round to 6 significant digits for stable JSON; non-finite becomes null."""
    if x is None or isinstance(x, (bool, np.bool_)):
        return None if x is None else bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    v = float(f"{x:.6g}")
    return 0.0 if v == 0 else v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, str):
        return obj
    return _num(obj)


def dump_json(report):
    return json.dumps(_clean(report), indent=2, ensure_ascii=True) + "\n"


def _report(command, **parts):
    out = {"command": command}
    for key in REPORT_KEYS:
        out[key] = parts.pop(key, None)
    out.update(parts)
    return out


def _fmt(x, spec="8.4f"):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "NA".rjust(int(spec.split(".")[0]) if spec[0].isdigit() else 0)
    return format(x, spec)


# -------------------------------------------------------------------- inputs

def _load_dataset(cfg):
    try:
        d = data_mod.load_csv(cfg.input)
    except FileNotFoundError:
        raise CliError("E_PARSE", f"cannot open {cfg.input}") from None
    except data_mod.DataError as exc:
        raise CliError("E_PARSE", f"{cfg.input}: {exc}") from None
    if cfg.impute:
        try:
            d = data_mod.impute(d, cfg.impute)
        except data_mod.DataError as exc:
            raise CliError("E_DATA", str(exc)) from None
    return d


def _read_matrix(path):
    try:
        return data_mod.read_matrix_csv(path)
    except FileNotFoundError:
        raise CliError("E_PARSE", f"cannot open {path}") from None
    except (data_mod.DataError, LinAlgError) as exc:
        raise CliError("E_PARSE", str(exc)) from None


def _need_complete(d):
    if d.has_missing:
        cols = [nm for nm, c in zip(d.names, d.missing_mask.sum(axis=0)) if c]
        raise CliError("E_DATA", f"missing values in {', '.join(cols)}; pass --impute mean|median|listwise")


def _correlation_input(cfg):
    """Returns (names, R, n, dataset or None)."""
    sources = [s for s in (cfg.input, cfg.correlation_in, cfg.covariance_in) if s]
    if len(sources) != 1:
        raise CliError("E_PARSE", "give exactly one of --input, --correlation-in, --covariance-in")
    if cfg.input:
        d = _load_dataset(cfg)
        _need_complete(d)
        try:
            return d.names, data_mod.correlation(d, cfg.method), d.n, d
        except data_mod.DataError as exc:
            raise CliError("E_DATA", str(exc)) from None
    names, m = _read_matrix(cfg.correlation_in or cfg.covariance_in)
    if cfg.covariance_in:
        sd = np.sqrt(np.diag(m))
        if np.any(sd <= 0):
            raise CliError("E_DATA", "covariance matrix has a non-positive variance")
        m = sym_matrix(np.asarray(m) / np.outer(sd, sd))
    elif not np.allclose(np.diag(m), 1.0, atol=1e-8):
        raise CliError("E_DATA", "correlation matrix must have a unit diagonal")
    return names, m, cfg.n, None


def _covariance_input(cfg, meanstructure):
    """Returns (names, S, means or None, n)."""
    sources = [s for s in (cfg.input, cfg.covariance_in) if s]
    if cfg.correlation_in:
        sources.append(cfg.correlation_in)
    if len(sources) != 1:
        raise CliError("E_PARSE", "give exactly one of --input, --covariance-in, --correlation-in")
    if cfg.input:
        d = _load_dataset(cfg)
        _need_complete(d)
        s = np.asarray(data_mod.covariance(d))
        if meanstructure:
            # ML moments pair with the n multiplier
            s = s * (d.n - 1) / d.n
        return d.names, s, d.rows.mean(axis=0), d.n
    if meanstructure:
        raise CliError("E_DATA", "a mean structure needs raw data (--input), not a matrix")
    if cfg.n is None:
        raise CliError("E_DATA", "--n is required with a matrix input")
    names, m = _read_matrix(cfg.covariance_in or cfg.correlation_in)
    return names, np.asarray(m), None, cfg.n


def _load_sem_model(cfg, default_format, observed=None):
    if not cfg.model:
        raise CliError("E_PARSE", "--model is required")
    fmt = cfg.model_format or default_format
    try:
        m = load_model(cfg.model, fmt, std_lv=cfg.std_lv, meanstructure=cfg.meanstructure,
                       observed=observed if fmt == "ram" else None)
    except FileNotFoundError:
        raise CliError("E_PARSE", f"cannot open {cfg.model}") from None
    except ModelSyntaxError as exc:
        raise CliError("E_PARSE", f"{cfg.model}: {exc}") from None
    if fmt == "ram" and cfg.meanstructure and not m.meanstructure:
        extra = tuple(PathSpec(INTERCEPT, CONSTANT, x, label=f"M_{x}") for x in m.observed)
        m = SemModel(m.observed, m.latents, m.params + extra, True)
    ident = identify(m)
    if not ident.identified:
        raise CliError("E_IDENT", "model not identified: " + "; ".join(ident.violations))
    return m


# --------------------------------------------------------------- report parts

def _adequacy_parts(names, r, n):
    parts = {}
    try:
        if n is not None:
            b = bartlett(r, n)
            parts["bartlett"] = {"chisq": b.chisq, "df": b.df, "p": b.p_value, "n": b.n}
        k = kmo(r)
    except (ValueError, LinAlgError) as exc:
        raise CliError("E_DATA", str(exc)) from None
    parts["kmo"] = {"overall": k.overall, "label": k.label,
                    "msa": {nm: v for nm, v in zip(names, k.per_item)},
                    "weak_items": k.weak_items(names)}
    return parts


def _parse_criteria(text, tau):
    out = []
    for item in (text or "kaiser").split(","):
        item = item.strip()
        if item == "kaiser":
            out.append(("kaiser", None))
        elif item.startswith("variance"):
            _, _, val = item.partition(":")
            try:
                out.append(("variance", float(val) if val else tau))
            except ValueError:
                raise CliError("E_PARSE", f"bad criterion {item!r}") from None
        else:
            raise CliError("E_PARSE", f"unknown criterion {item!r}; use kaiser or variance[:tau]")
    return out


def _factor_parts(names, r, cfg):
    fc = factor_count(r)
    criteria = _parse_criteria(cfg.criteria, cfg.tau)
    counts = {}
    for kind, tau in criteria:
        if kind == "kaiser":
            counts["kaiser"] = fc.kaiser_count
        else:
            counts[f"variance:{tau:g}"] = fc.count_for_threshold(tau)
    notices = []
    if len(set(counts.values())) > 1:
        notices.append("NOTICE criteria disagree: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    k = cfg.k if cfg.k is not None else next(iter(counts.values()))
    if not 1 <= k <= len(names):
        raise CliError("E_DATA", f"--k must be between 1 and {len(names)}")
    part = {
        "eigenvalues": fc.eigenvalues,
        "cumulative_proportion": fc.cumulative_proportion,
        "kaiser_count": fc.kaiser_count,
        "criteria": counts,
        "k": k,
    }
    return fc, k, part, notices


def _loading_part(lm):
    return {
        "rotation": lm.rotation,
        "names": list(lm.names),
        "matrix": lm.loadings,
        "h2": lm.h2,
        "u2": lm.u2,
        "ss_loadings": lm.ss_loadings,
        "proportion_var": lm.proportion_var,
        "cumulative_var": lm.cumulative_var,
        "rmsr": lm.rmsr,
    }


def _efa_core(names, r, cfg):
    fc, k, fc_part, notices = _factor_parts(names, r, cfg)
    unrot = extract_pc(r, k, names)
    lm = unrot
    if cfg.rotate == "varimax" and k >= 2:
        lm = rotate_varimax(unrot)
    elif cfg.rotate == "varimax":
        notices.append("NOTICE k < 2: rotation skipped")
    assign = assign_factors(lm)
    loadings = _loading_part(lm)
    if lm is not unrot:
        loadings["unrotated"] = _loading_part(unrot)
    assignment = {
        "groups": {f"PC{j + 1}": members for j, members in assign.groups().items()},
        "factor": {nm: int(f) + 1 for nm, f in zip(names, assign.factor)},
        "ambiguous": [nm for nm, a in zip(names, assign.ambiguous) if a],
        "low_communality": communality_screen(lm),
    }
    return fc, lm, unrot, assign, fc_part, loadings, assignment, notices


def _validity_part(r, lm, assign):
    try:
        cv = cr_ave(lm, assign)
    except ValueError as exc:
        return {"error": str(exc)}, None, None
    out = {
        "cr": cv.cr, "ave": cv.ave, "convergent": cv.convergent_ok,
    }
    dm = None
    if lm.k >= 2:
        dm = discriminant(r, lm, cv)
        out["discriminant"] = {"matrix": dm.matrix, "verdicts": dm.verdicts}
    return out, cv, dm


def _write_scree(cfg, fc):
    if not cfg.out:
        return None
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "scree.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("component,eigenvalue\n")
        for i, v in fc.scree_series:
            fh.write(f"{i},{v:.10g}\n")
    return path


# ----------------------------------------------------------------- text views

def _text_loadings(lm, title):
    k = lm.k
    head = f"{'':<8}" + "".join(f"{f'PC{j + 1}':>8}" for j in range(k)) + f"{'h2':>8}{'u2':>8}"
    lines = [title, head]
    for nm, row, h, u in zip(lm.names, lm.loadings, lm.h2, lm.u2):
        lines.append(f"{nm:<8}" + "".join(f"{v:8.2f}" for v in row) + f"{h:8.2f}{u:8.3f}")
    lines.append("")
    for label, vals in (("SS loadings", lm.ss_loadings), ("Proportion Var", lm.proportion_var),
                        ("Cumulative Var", lm.cumulative_var)):
        lines.append(f"{label:<16}" + "".join(f"{v:8.2f}" for v in vals))
    lines.append(f"RMSR {lm.rmsr:.4f}")
    return "\n".join(lines)


def _text_adequacy(parts):
    lines = []
    b = parts.get("bartlett")
    if b:
        lines.append(f"Bartlett sphericity: chisq {b['chisq']:.4f}  df {b['df']}  p {b['p']:.4g}  (n {b['n']})")
    k = parts["kmo"]
    lines.append(f"KMO overall MSA {k['overall']:.4f} ({k['label']})")
    lines.append("MSA for each item:")
    lines.append("  " + "  ".join(f"{nm} {v:.2f}" for nm, v in k["msa"].items()))
    if k["weak_items"]:
        lines.append("Items with MSA < 0.5: " + ", ".join(k["weak_items"]))
    return "\n".join(lines)


def _text_validity(v):
    if "error" in v:
        return f"Construct validity: {v['error']}"
    lines = ["Construct validity", f"{'':<6}{'CR':>10}{'AVE':>10}  convergent"]
    for j, (c, a, ok) in enumerate(zip(v["cr"], v["ave"], v["convergent"])):
        lines.append(f"PC{j + 1:<4}{c:10.4f}{a:10.4f}  {'yes' if ok else 'no'}")
    if "discriminant" in v:
        lines.append("Discriminant validity (sqrt(AVE) on the diagonal)")
        for row, ok in zip(v["discriminant"]["matrix"], v["discriminant"]["verdicts"]):
            lines.append("  " + "".join(f"{x:10.6f}" for x in row) + f"  {'pass' if ok else 'fail'}")
    return "\n".join(lines)


def _text_fit(fit):
    v = fit["verdicts"]
    lines = [
        f"Model chisq {fit['chisq']:.3f}  df {fit['df']}  p {_fmt(fit['p'], '.4g')}",
        f"Baseline chisq {fit['baseline_chisq']:.3f}  df {fit['baseline_df']}",
        f"{'index':<16}{'value':>10}  verdict",
    ]
    for key, name in (("chisq_df", "chisq/df"), ("nfi", "NFI"), ("cfi", "CFI"), ("rfi", "RFI"),
                      ("tli", "TLI"), ("rmsea", "RMSEA"), ("srmr", "SRMR")):
        lines.append(f"{name:<16}{_fmt(fit[key], '10.4f')}  {v.get(key) or ''}".rstrip())
    close = v.get("rmsea_close_fit")
    lines.append(f"P-value RMSEA <= 0.05 {_fmt(fit['rmsea_close_p'], '.4f')}  "
                 f"{'' if close is None else ('close fit' if close else 'not close')}".rstrip())
    return "\n".join(lines)


# ------------------------------------------------------------------ commands

def cmd_describe(cfg):
    if not cfg.input:
        raise CliError("E_PARSE", "describe needs --input")
    d = _load_dataset(cfg)
    summ = data_mod.summarize(d)
    rows = [{"name": s.name, "min": s.min, "q1": s.q1, "median": s.median, "mean": s.mean,
             "q3": s.q3, "max": s.max, "missing": s.missing_count} for s in summ]
    report = _report("describe", n=d.n, variables=rows)
    lines = [f"{d.n} rows, {d.p} variables",
             f"{'':<10}{'Min.':>9}{'1st Qu.':>9}{'Median':>9}{'Mean':>9}{'3rd Qu.':>9}{'Max.':>9}{'NAs':>6}"]
    for s in summ:
        lines.append(f"{s.name:<10}{s.min:9.3f}{s.q1:9.3f}{s.median:9.3f}{s.mean:9.3f}"
                     f"{s.q3:9.3f}{s.max:9.3f}{s.missing_count:6d}")
    total = sum(s.missing_count for s in summ)
    lines.append(f"missing cells: {total}")
    return report, "\n".join(lines), [], EXIT_OK


def cmd_efa(cfg):
    names, r, n, _ = _correlation_input(cfg)
    adequacy = _adequacy_parts(names, r, n)
    try:
        fc, lm, unrot, assign, fc_part, loadings, assignment, notices = _efa_core(names, r, cfg)
    except LinAlgError as exc:
        raise CliError("E_CONV", str(exc), EXIT_CONV) from None
    validity, _, _ = _validity_part(r, lm, assign)
    scree = _write_scree(cfg, fc)
    report = _report("efa", n=n, bartlett=adequacy.get("bartlett"), kmo=adequacy["kmo"],
                     factor_count=fc_part, loadings=loadings, assignment=assignment,
                     reliability=validity)
    text = [_text_adequacy(adequacy), "",
            "Eigenvalues: " + " ".join(f"{v:.4f}" for v in fc.eigenvalues),
            f"Kaiser count (eigenvalue > 1): {fc.kaiser_count}",
            "Criteria: " + ", ".join(f"{k}={v}" for k, v in fc_part["criteria"].items()),
            f"Retained components: {fc_part['k']}", ""]
    if lm is not unrot:
        text += [_text_loadings(unrot, "Unrotated loadings"), ""]
    text += [_text_loadings(lm, f"Loadings (rotation: {lm.rotation})"), ""]
    for g, members in assignment["groups"].items():
        text.append(f"{g}: {', '.join(members)}")
    if assignment["ambiguous"]:
        text.append("Ambiguous (top two loadings within 0.05): " + ", ".join(assignment["ambiguous"]))
    if assignment["low_communality"]:
        text.append("Communality <= 0.3: " + ", ".join(assignment["low_communality"]))
    text += ["", _text_validity(validity)]
    if scree:
        text.append(f"scree series written to {scree}")
    return report, "\n".join(text), notices, EXIT_OK


def cmd_reliability(cfg):
    if not cfg.input:
        raise CliError("E_PARSE", "reliability needs raw data (--input)")
    names, r, n, d = _correlation_input(cfg)
    fc, lm, unrot, assign, fc_part, loadings, assignment, notices = _efa_core(names, r, cfg)
    validity, _, _ = _validity_part(r, lm, assign)
    if cfg.model:
        m = _load_sem_model(cfg, "measurement")
        groups = {}
        for lat in m.latents:
            groups[lat] = [ps.head for ps in m.params
                           if ps.tail == lat and ps.head in m.observed and ps.kind == "->"]
    else:
        groups = assignment["groups"]
    alphas = {}
    text = []
    for g, items in groups.items():
        missing = [x for x in items if x not in d.names]
        if missing:
            raise CliError("E_DATA", f"{g}: items not in the data: {', '.join(missing)}")
        if len(items) < 2:
            alphas[g] = {"items": items, "error": "needs at least two items"}
            text.append(f"{g}: single item, alpha undefined")
            continue
        rep = cronbach_alpha(d, items)
        entry = rep.to_dict()
        entry["drop_raises_alpha"] = drop_one_screen(rep) if len(items) > 2 else None
        alphas[g] = entry
        text.append(f"{g}: raw_alpha {rep.raw_alpha:.4f}  std.alpha {rep.std_alpha:.4f}  "
                    f"average_r {rep.average_r:.4f}  ({rep.label})")
        text.append(f"  {'item':<8}{'alpha if dropped':>18}{'r.drop':>10}")
        for it in rep.items:
            aid = "NA" if it.alpha_if_dropped is None else f"{it.alpha_if_dropped:.4f}"
            text.append(f"  {it.name:<8}{aid:>18}{it.r_drop:10.4f}")
        if entry["drop_raises_alpha"]:
            text.append("  dropping raises alpha: " + ", ".join(entry["drop_raises_alpha"]))
    validity["alpha"] = alphas
    report = _report("reliability", n=n, factor_count=fc_part, loadings=loadings,
                     assignment=assignment, reliability=validity)
    text += ["", _text_validity(validity)]
    return report, "\n".join(text), notices, EXIT_OK


def _fit_model(cfg, default_format):
    m = _load_sem_model(cfg, default_format)
    names, s, means, n = _covariance_input(cfg, m.meanstructure)
    if (cfg.model_format or default_format) == "ram":
        # data columns settle which names are observed (regressions among observed)
        m = _load_sem_model(cfg, default_format, observed=names)
    try:
        fit = fit_ml(m, s, n, means=means, names=names)
        base = fit_ml(baseline_model(m), s, n, means=means, names=names, compute_se=False)
    except SemError as exc:
        raise CliError("E_DATA", str(exc)) from None
    except (LinAlgError, ValueError) as exc:
        raise CliError("E_DATA", str(exc)) from None
    summary = compute_indices(fit.chisq, fit.df, base.chisq, base.df, n, srmr=fit.srmr())
    fitd = {
        "chisq": fit.chisq, "df": fit.df, "p": summary.p_value,
        "nfi": summary.nfi, "cfi": summary.cfi, "rfi": summary.rfi, "tli": summary.tli,
        "rmsea": summary.rmsea, "rmsea_close_p": summary.rmsea_close_p,
        "verdicts": summary.verdicts,
        "chisq_df": summary.chisq_df_ratio, "srmr": summary.srmr,
        "baseline_chisq": base.chisq, "baseline_df": base.df,
        "free_parameters": m.n_free, "moments": m.moments,
        "converged": fit.converged, "iterations": fit.iterations, "grad_max": fit.grad_max,
    }
    text = [
        f"{'converged' if fit.converged else 'NOT converged'} after {fit.iterations} iterations",
        f"free parameters {m.n_free}",
        f"observations {n}",
        f"df {fit.df}",
        "",
        _text_fit(fitd),
        "",
        fit.param_table.to_text(),
    ]
    for msg in fit.diagnostics:
        text.append(f"diagnostic: {msg}")
    return m, n, fit, fitd, text


def cmd_cfa(cfg):
    m, n, fit, fitd, text = _fit_model(cfg, "measurement")
    report = _report("cfa", n=n, fit=fitd, params=fit.param_table.to_list(), diagnostics=fit.diagnostics)
    return report, "\n".join(text), [], EXIT_OK if fit.converged else EXIT_CONV


def cmd_sem(cfg):
    m, n, fit, fitd, text = _fit_model(cfg, "ram")
    verdicts = path_tests(fit.param_table, cfg.alpha)
    paths = [{"label": v.label, "from": v.source, "to": v.target, "estimate": v.estimate,
              "z": v.z, "p": v.p, "significant": v.significant, "borderline": v.borderline}
             for v in verdicts]
    report = _report("sem", n=n, fit=fitd, params=fit.param_table.to_list(), paths=paths,
                     alpha=cfg.alpha, diagnostics=fit.diagnostics)
    if verdicts:
        text += ["", f"Path tests (alpha {cfg.alpha:g})", format_path_tests(verdicts, cfg.alpha)]
    return report, "\n".join(text), [], EXIT_OK if fit.converged else EXIT_CONV


def cmd_simulate(cfg):
    m = _load_sem_model(cfg, "ram")
    if cfg.n is None or cfg.n < 2:
        raise CliError("E_DATA", "simulate needs --n >= 2")
    seed = os.environ.get(SEED_ENV)
    try:
        seed = None if seed is None else int(seed)
    except ValueError:
        raise CliError("E_PARSE", f"{SEED_ENV} must be an integer") from None
    rng = np.random.default_rng(seed)
    try:
        d = simulate(m, population_theta(m), cfg.n, rng)
    except (SemError, np.linalg.LinAlgError, ValueError) as exc:
        raise CliError("E_DATA", f"population moments unusable: {exc}") from None
    lines = [",".join(d.names)]
    lines += [",".join(f"{v:.6f}" for v in row) for row in d.rows]
    text = "\n".join(lines)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "simulated.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        return None, f"{cfg.n} rows written to {path}", [], EXIT_OK
    return None, text, [], EXIT_OK


COMMANDS = {
    "describe": cmd_describe,
    "efa": cmd_efa,
    "reliability": cmd_reliability,
    "cfa": cmd_cfa,
    "sem": cmd_sem,
    "simulate": cmd_simulate,
}


def build_parser():
    p = argparse.ArgumentParser(prog="latentfit", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", help="raw data CSV (header row of variable names)")
    p.add_argument("--correlation-in", help="labelled correlation matrix CSV")
    p.add_argument("--covariance-in", help="labelled covariance matrix CSV")
    p.add_argument("--n", type=int, help="sample size for matrix input")
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.add_argument("--impute", choices=("mean", "median", "listwise"))
    p.add_argument("--k", type=int, help="number of components (default: first criterion)")
    p.add_argument("--criteria", default="kaiser", help="comma list of kaiser, variance[:tau]")
    p.add_argument("--rotate", choices=("varimax", "none"), default="varimax")
    p.add_argument("--model", help="model file")
    p.add_argument("--model-format", choices=("ram", "measurement"))
    p.add_argument("--std-lv", action="store_true", help="scale latents by unit variance")
    p.add_argument("--meanstructure", action="store_true")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="variance-explained threshold")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level for path tests")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="directory for side outputs (scree CSV, simulated data)")
    return p


def run(argv=None):
    """Run a command; returns (exit code, stdout text, stderr lines)."""
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_INPUT), "", []
    if cfg.k is not None and cfg.k < 1:
        return EXIT_INPUT, "", ["E_PARSE --k must be >= 1"]
    try:
        report, text, notices, code = COMMANDS[cfg.command](cfg)
    except CliError as exc:
        return exc.exit_code, "", [f"{exc.code} {exc}"]
    if cfg.format == "json" and report is not None:
        out = dump_json(report)
    else:
        out = text + "\n"
    errs = list(notices)
    if code == EXIT_CONV:
        errs.append("E_CONV optimizer did not converge; estimates are the best point found")
    return code, out, errs


def main(argv=None):
    code, out, errs = run(argv)
    sys.stdout.write(out)
    for line in errs:
        sys.stderr.write(line.replace("\n", " ") + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
