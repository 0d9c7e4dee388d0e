"""``strata-wave`` command line: laminar | solve | continue | analyze | lemmas."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import inequalities as ineq
from .config import load_config
from .errors import ConfigError, StrataWaveError
from .persistence import config_hash, load_field, save_field, write_csv, write_json
from .regularity import regularity_report, usable_modes, verify_derivative_equation
from .strip_problem import StripGrid, WaveParameters
from .wave_solver import continuation_run, solve_laminar

log = logging.getLogger("strata_wave")


def build_params(config) -> WaveParameters:
    spec = dict(config["params"])
    spec["wavelength"] = config["grid"]["wavelength"]
    try:
        return WaveParameters.from_dict(spec)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"invalid parameters: {err}") from None


def build_grid(config) -> StripGrid:
    g = config["grid"]
    try:
        return StripGrid(g["n_q"], g["n_p"], g["wavelength"], config["params"]["p0"])
    except ValueError as err:
        raise ConfigError(f"invalid grid: {err}") from None


def _clean(x):
    """JSON-safe copy: NaN/inf become None, numpy scalars become Python numbers."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _out_dir(config) -> Path:
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_laminar(config) -> Dict[str, Any]:
    params = build_params(config)
    grid = build_grid(config)
    tag = config_hash(config)
    kappa = config["solver"].get("kappa0", params.d / -params.p0)
    prof = solve_laminar(params, kappa, p_nodes=grid.p)
    out = _out_dir(config)
    write_csv(out / "laminar_profile.csv", ["p", "H", "dH"],
              zip(prof.p, prof.H, prof.dH), comment=f"config_hash={tag}")
    save_field(out / "laminar.field", prof.field(grid),
               {"Q": prof.Q, "amplitude": 0.0, "config_hash": tag})
    summary = {"config_hash": tag, "kappa": prof.kappa, "Q": prof.Q,
               "H_surface": float(prof.H[-1]), "dH_surface": float(prof.dH[-1])}
    write_json(out / "laminar_summary.json", _clean(summary))
    return summary


def _branch(config):
    params = build_params(config)
    grid = build_grid(config)
    s = config["solver"]
    return continuation_run(params, s["amplitude_targets"], grid, kappa0=s.get("kappa0"),
                            tol=s["tol"], max_iter=s["max_iter"],
                            find_bifurcation=s.get("find_bifurcation", True))


_ROW_KEYS = ["amplitude", "Q", "residual", "min_hp", "max_hp", "steps"]


def cmd_solve(config) -> Dict[str, Any]:
    """Continue to the last amplitude target and keep only the final state."""
    tag = config_hash(config)
    state = _branch(config)[-1]
    out = _out_dir(config)
    row = state.summary_row()
    save_field(out / "state.field", state.h,
               {"Q": state.Q, "amplitude": state.amplitude, "config_hash": tag})
    write_csv(out / "summary.csv", _ROW_KEYS, [[row[k] for k in _ROW_KEYS]],
              comment=f"config_hash={tag}")
    summary = {"config_hash": tag, "state": row, "residual_history": state.residual_history}
    write_json(out / "summary.json", _clean(summary))
    return summary


def cmd_continue(config) -> Dict[str, Any]:
    tag = config_hash(config)
    branch = _branch(config)
    out = _out_dir(config)
    rows = []
    for i, st in enumerate(branch):
        save_field(out / f"branch_{i:03d}.field", st.h,
                   {"Q": st.Q, "amplitude": st.amplitude, "config_hash": tag, "index": i})
        rows.append(st.summary_row())
    write_csv(out / "branch.csv", _ROW_KEYS, [[r[k] for k in _ROW_KEYS] for r in rows],
              comment=f"config_hash={tag}")
    summary = {"config_hash": tag, "length": len(rows), "branch": rows}
    write_json(out / "branch_summary.json", _clean(summary))
    return summary


def cmd_analyze(config, state_file) -> Dict[str, Any]:
    tag = config_hash(config)
    h, meta = load_field(state_file)
    params = build_params(config)
    if "Q" in meta:
        params = params.replace(Q=float(meta["Q"]))
    dg = config["diagnostics"]
    grid = h.grid
    budget = [(a1, n - a1) for n in range(2, dg["order_budget"] + 1) for a1 in range(n + 1)]
    report = regularity_report(h, m_max=dg["m_max"], mu=dg["mu"], order_budget=budget, s=dg["s"],
                               noise_floor=dg["noise_floor"])
    out = _out_dir(config)
    for j in range(grid.n_p - 1, 0, -1):
        ks, c = usable_modes(h.values[:, j])
        if ks.size:
            write_csv(out / f"decay_p{j:03d}.csv", ["k", "log_abs_c"], zip(ks, np.log(c)),
                      comment=f"config_hash={tag} p={grid.p[j]!r}")
    checks = {}
    for m in range(1, 5):
        try:
            c = verify_derivative_equation(h, m, params)
            checks[str(m)] = {"interior": c.interior, "surface": c.surface, "bed": c.bed}
        except StrataWaveError as err:
            checks[str(m)] = {"error": str(err)}
    result = {"config_hash": tag, "state": str(state_file), "report": report.to_dict(),
              "derivative_equation": checks}
    write_json(out / "report.json", _clean(result))
    return result


def lemma_table(ranges) -> List[Dict[str, Any]]:
    """One verdict row per swept index of every inequality named in ``ranges``."""
    rows = []
    if "lemma_sums" in ranges:
        for alpha, checks in ineq.lemma_sum_sweep(ranges["lemma_sums"].get("max_order", 60)):
            rows.append({"inequality": "lemma_sums", "index": list(alpha),
                         "ok": all(c.ok for c in checks),
                         "worst_margin": min(c.margin for c in checks)})
    if "binomial" in ranges:
        for n in range(ranges["binomial"].get("max_order", 30) + 1):
            for alpha in ineq.multi_indices(n):
                rows.append({"inequality": "binomial_dominance", "index": list(alpha), "ok": True,
                             "worst_margin": float(ineq.binomial_dominance_margin(alpha))})
    if "kernel_sum" in ranges:
        spec = ranges["kernel_sum"]
        for k in spec.get("k", [2, 3]):
            for m in range(2, spec.get("m_max", 200) + 1):
                c = ineq.verify_kernel_sum(m, k)
                rows.append({"inequality": f"kernel_sum_k{k}", "index": [m], "ok": c.ok,
                             "worst_margin": c.margin})
    if "superadditivity" in ranges:
        spec = ranges["superadditivity"]
        for s in spec.get("s", [1.0, 1.5, 2.0]):
            for total in range(spec.get("max_total", 60) + 1):
                margin = min(ineq.factorial_superadditivity_margin(m, total - m, s)
                             for m in range(total + 1))
                rows.append({"inequality": "factorial_superadditivity", "index": [total, s],
                             "ok": True, "worst_margin": margin})
    return rows


def cmd_lemmas(config) -> Dict[str, Any]:
    tag = config_hash(config)
    rows = lemma_table(config["lemmas"])
    result = {"config_hash": tag, "all_ok": all(r["ok"] for r in rows), "rows": rows}
    write_json(_out_dir(config) / "lemmas.json", _clean(result))
    return result


COMMANDS = ("laminar", "solve", "continue", "analyze", "lemmas")


def make_parser():
    ap = argparse.ArgumentParser(prog="strata-wave", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--state", help="field file to analyze")
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="override a config key, e.g. solver.tol=1e-9")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        overrides = list(args.overrides)
        if args.out:
            overrides.append(f"output_dir={args.out}")
        config = load_config(args.config, overrides)
        if args.command == "analyze":
            if not args.state:
                raise ConfigError("analyze needs --state <field file>")
            cmd_analyze(config, args.state)
        else:
            {"laminar": cmd_laminar, "solve": cmd_solve, "continue": cmd_continue,
             "lemmas": cmd_lemmas}[args.command](config)
    except StrataWaveError as err:
        print(f"strata-wave: {type(err).__name__}: {err}", file=sys.stderr)
        return err.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
