"""Command-line front end: ``padelab {table,ray,windows,overconv}``.

Exit codes: 0 success, 2 configuration error, 3 capability error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import gmpy2
from gmpy2 import mpfr

from . import __version__
from .config import RunConfig, load_config
from .convergence import (
    envelope_constant,
    grid_errors,
    make_grid,
    omega_disks,
    overconvergence_scan,
    pole_proximity,
)
from .errors import CapabilityError, PadeLabError, ParameterError
from .hp import precision, to_mpc, to_mpfr
from .pade import (
    EXACT,
    A_coefficient,
    block_scan,
    compute_entries,
    difference_identity_residual,
    normalize_denominator,
    order_of_contact,
    tail_series_check,
)
from .reports import Formatter, Manifest, write_csv, write_json
from .sequences import (
    DecayProfile,
    Window,
    classify_gap_cases,
    classify_ratio_cases,
    decay_profile,
    detect_coeff_gaps,
    detect_decay_windows,
    detect_stationary_runs,
    psi,
    decay_bound_check,
    psi_window_search,
)
from .series import resolve_radius

log = logging.getLogger("padelab")


class Run:
    """Shared state of one command: config, output directory, manifest, formatting."""

    def __init__(self, command: str, cfg: RunConfig, args):
        self.command = command
        self.cfg = cfg
        self.prec = args.precision or cfg.numerics["precision"]
        self.threads = args.threads or cfg.numerics["threads"]
        self.out = Path(args.out or cfg.output["dir"])
        self.figures = cfg.output["figures"] and not args.no_figures
        self.out.mkdir(parents=True, exist_ok=True)
        self.fmt = Formatter(self.prec)
        echo = cfg.echo()
        echo["numerics"]["precision"] = self.prec
        echo["numerics"]["threads"] = self.threads
        echo["output"]["dir"] = str(self.out)
        self.manifest = Manifest(self.out, command, echo, __version__, {"config_file": cfg.source})
        self.f = cfg.make_function()

    @property
    def meta_lines(self) -> dict:
        fn = self.cfg.function
        return {
            "tool": f"padelab {__version__}",
            "command": self.command,
            "function": f"{fn['kind']} {self.fmt.data(fn['params'])}",
            "precision_bits": self.prec,
            "float_format": f"scientific, {self.fmt.digits} significant digits, round to nearest",
        }

    def csv(self, name, header, rows, extra_meta=None):
        meta = {**self.meta_lines, **(extra_meta or {})}
        return self.manifest.add(write_csv(self.out / name, header, rows, meta, self.fmt))

    def json(self, name, doc):
        return self.manifest.add(write_json(self.out / name, doc, self.fmt))

    def plot(self, name, rows, title, x, y, yscale="linear", reference=None):
        """Plot-data CSV (x, y, series) and, unless disabled, its rendered figure."""
        meta = {"title": title, "x": x, "y": y, "yscale": yscale,
                "columns": f"x = {x}; y = {y}; series = curve label"}
        if reference is not None:
            meta["reference"] = self.fmt.real(reference)
        path = self.csv(f"{name}.plot.csv", ["x", "y", "series"], rows, meta)
        if self.figures:
            from .plotting import render_plot_csv

            self.manifest.add(render_plot_csv(path))
        return path

    def radius(self):
        """R(f) for normalization: configured, declared, or estimated (with provenance)."""
        fn = self.cfg.function
        if fn["R"] is not None:
            return to_mpfr(fn["R"]), "config"
        return resolve_radius(self.f, N=fn["estimate_N"], prec=self.prec)

    def decay_radius(self, schedule, R, src):
        """Baseline radius for decay profiles: R(f), or R_m on a row when R(f) is infinite."""
        if gmpy2.is_finite(R) or schedule.growth != "constant":
            return R, src
        return resolve_radius(self.f, m=schedule.values[-1], N=self.cfg.function["estimate_N"], prec=self.prec)

    def ray_entries(self, normalize=True, extra: int = 0):
        schedule = self.cfg.make_schedule(self.cfg.schedule["horizon"] + extra)
        entries = compute_entries(self.f, schedule.cells(), self.threads)
        R, src = self.radius()
        if normalize:
            for e in entries:
                normalize_denominator(e, R, src, self.prec)
        return schedule, entries, R, src


# -- commands -----------------------------------------------------------------


def cmd_table(run: Run) -> int:
    n_max, m_max = run.cfg.table["n_max"], run.cfg.table["m_max"]
    with run.manifest.phase("pade-table"):
        cells = [(n, m) for n in range(n_max) for m in range(m_max)]
        entries = compute_entries(run.f, cells, run.threads)
    with run.manifest.phase("blocks"):
        blocks = block_scan(run.f, n_max, m_max, entries=entries)
    anchor = {}
    for b in blocks:
        for c in b.members:
            anchor[c] = b.anchor
    with run.manifest.phase("write"):
        rows = [(e.n, e.m, e.degP, e.mu, e.defect, e.a_lead, "%d:%d" % anchor[(e.n, e.m)],
                 " ".join(e.P.to_strings()) or "0", " ".join(e.Q.to_strings()))
                for e in entries]
        run.csv("table.csv", ["n", "m", "degP", "degQ", "tau", "a_lead", "block_anchor", "P", "Q"], rows,
                {"rectangle": f"0 <= n < {n_max}, 0 <= m < {m_max}",
                 "P, Q": "coefficients lowest degree first, exact rationals"})
        run.json("blocks.json", {
            "n_max": n_max, "m_max": m_max,
            "blocks": [{"anchor": list(b.anchor), "extent": b.extent, "truncated": b.truncated,
                        "members": len(b.members), "P": b.P.to_strings(), "Q": b.Q.to_strings()}
                       for b in blocks],
        })
    return 0


def cmd_ray(run: Run) -> int:
    cfg = run.cfg
    with run.manifest.phase("entries"):
        schedule, entries, R, src = run.ray_entries(extra=1)
    H = cfg.schedule["horizon"]
    probes = [to_mpc(z) for z in cfg.ray["probes"]]
    with run.manifest.phase("profile"):
        profile = decay_profile(entries[: H + 1], run.f, R, src, cfg.numerics["contact_cap"], prec=run.prec)
    rows, A_roots, a_plot, A_plot = [], {}, [], []
    checked = skipped = 0
    worst_ratio = mpfr(0)
    with run.manifest.phase("identities"), precision(run.prec):
        half = mpfr(2) ** (-(run.prec // 2))
        for n in range(H + 1):
            e, nxt = entries[n], entries[n + 1]
            A = A_coefficient(e, nxt)
            A_root = abs(A) ** (mpfr(1) / n) if n and A != 0 else (mpfr(0) if n else None)
            contact = order_of_contact(run.f, e, cfg.numerics["contact_cap"])
            res = bound = None
            ok = None
            if nxt.defect == 0:
                res, bound = mpfr(0), mpfr(0)
                for z in probes:
                    r = abs(difference_identity_residual(e, nxt, A, z))
                    b = half * (1 + abs(z)) ** (e.n + e.m + 1)
                    res, bound = max(res, r), max(bound, b)
                    worst_ratio = max(worst_ratio, r / b)
                ok = bool(res <= bound)
                checked += 1
            else:
                skipped += 1
            A_roots[n] = A_root
            rows.append((n, e.m, e.defect, e.degP, e.mu, profile.values[n] if profile.has_data(n) else None,
                         profile.flags[n],
                         A_root, "inf" if contact == EXACT else contact, res, bound, ok))
            if n:
                a_plot.append((n, profile.values[n], "|a_n|^(1/n)"))
                A_plot.append((n, A_root, "|A_n|^(1/n)"))
        run.csv("ray.csv", ["n", "m_n", "tau_n", "degP", "degQ", "a_root", "a_flag", "A_root",
                            "contact", "identity_residual", "identity_bound", "identity_ok"], rows,
                {"schedule": f"{schedule.rule} {run.fmt.data(schedule.params)} growth {schedule.growth}",
                 "probes": " ".join(run.fmt.value(z) for z in probes),
                 "R_f": f"{run.fmt.real(R)} ({src})",
                 "a_root": "|[z^n] P_n|^(1/n); a_flag marks skip/block/exact/zero/ok",
                 "identity": "max over probes; skipped (empty) when tau_{n+1} > 0"})
        lo = H // 2
        tail_A = [A_roots[n] for n in range(max(lo, 1), H + 1) if A_roots[n] is not None]
        tail_a = [profile.values[n] for n in range(max(lo, 1), H + 1) if profile.has_data(n)]
        summary = {
            "horizon": H,
            "R_f": R, "R_f_source": src,
            "trailing_window": [lo, H],
            "A_root_trailing_max": max(tail_A) if tail_A else None,
            "a_root_trailing_max": max(tail_a) if tail_a else None,
            "identity": {"checked": checked, "skipped_positive_defect": skipped,
                         "worst_residual_over_bound": worst_ratio},
        }
        if schedule.growth == "constant":
            Rm, srcm = resolve_radius(run.f, m=schedule.values[-1], N=cfg.function["estimate_N"], prec=run.prec)
            summary["R_m"] = Rm
            summary["R_m_source"] = srcm
            summary["inverse_R_m"] = 1 / Rm if Rm != 0 else None
        summary["inverse_R_f"] = 1 / R if R != 0 else None
        if cfg.ray["tail_n"] is not None and cfg.ray["tail_z"] is not None:
            with run.manifest.phase("tail-series"):
                t = tail_series_check(run.f, schedule, cfg.ray["tail_n"], cfg.ray["tail_terms"],
                                      to_mpc(cfg.ray["tail_z"]), cfg.ray["tail_eps"], R_f=R,
                                      prec=run.prec, threads=run.threads)
                summary["tail_series"] = {"n": t.n, "terms": t.n_terms, "z": t.z, "error": t.error,
                                          "partial_sum": t.partial_sum, "gap": t.gap,
                                          "geometric_tail": t.tail_bound, "R_rate": t.R_rate,
                                          "R_rate_source": t.R_source, "direct_terms": t.direct_terms}
        run.json("ray_summary.json", summary)
    run.plot("ray_a_root", a_plot, "nominal top coefficient", "n", "|a_n|^(1/n)",
             reference=1 / R if R != 0 and gmpy2.is_finite(R) else None)
    run.plot("ray_A_root", A_plot, "difference coefficient", "n", "|A_n|^(1/n)",
             reference=summary.get("inverse_R_m"))
    return 0


def cmd_windows(run: Run) -> int:
    cfg = run.cfg
    det, win = cfg.detectors, cfg.windows
    H = cfg.schedule["horizon"]
    doc: dict = {"horizon": H}
    with run.manifest.phase("entries"):
        schedule, entries, R, src = run.ray_entries(normalize=False)
    with run.manifest.phase("profile"):
        if win["synthetic_values"] is not None:
            base = win["synthetic_baseline"] if win["synthetic_baseline"] is not None else 1
            with precision(run.prec):
                profile = DecayProfile.synthetic([to_mpfr(v) for v in win["synthetic_values"]],
                                                 to_mpfr(base), "config override")
            doc["profile"] = "synthetic (config override)"
        else:
            R_base, src_base = run.decay_radius(schedule, R, src)
            profile = decay_profile(entries, run.f, R_base, src_base, cfg.numerics["contact_cap"], prec=run.prec)
            doc["profile"] = "computed"
        doc["baseline"] = profile.baseline
        doc["baseline_source"] = profile.baseline_source
    with run.manifest.phase("detectors"), precision(run.prec):
        zero_tol, gap = float(det["zero_tol"]), float(det["min_ratio_gap"])
        kinds: dict[str, list[Window]] = {}
        if H >= 4 and doc["profile"] == "computed":
            gaps = detect_coeff_gaps(run.f, H)
            kinds["coeff-gap"] = gaps
            doc["gap_cases"] = classify_gap_cases(run.f, gaps, zero_tol=zero_tol, min_ratio_gap=gap,
                                                  prec=run.prec)
        if gmpy2.is_finite(profile.baseline) and profile.baseline > 0:
            decay = detect_decay_windows(profile, float(det["margin"]), gap, det["merge_gap"])
        else:
            decay = []
            doc["decay_status"] = "baseline 1/R is zero; no decay windows"
        kinds["decay"] = decay
        ratios = classify_ratio_cases(decay, zero_tol, gap)
        ratios["liminf_ratio_positive"] = bool(ratios.get("liminf_ratio") not in (None, "0"))
        ratios["decay_limsup"] = max((w.stats["max_value"] for w in decay), default=None)
        ratios["inverse_R_f"] = profile.baseline
        doc["decay_ratios"] = ratios
        if doc["profile"] == "computed":
            stat = detect_stationary_runs(entries, schedule)
            kinds["stationary"] = stat
            doc["stationary_cases"] = classify_ratio_cases(stat, zero_tol, gap)
        doc["windows"] = {k: [w.as_dict() for w in ws] for k, ws in kinds.items()}
        spans = {k: [(w.n_lo, w.n_hi) for w in ws] for k, ws in kinds.items()}
        names = sorted(spans)
        doc["coincide"] = {f"{a}|{b}": spans[a] == spans[b] for i, a in enumerate(names) for b in names[i + 1:]}
        lam = sorted({n for w in decay for n in w.indices()})
        m_row = win["m"] if win["m"] is not None else schedule.values[-1]
        if doc["profile"] == "computed":
            Rm, srcm = resolve_radius(run.f, m=m_row, N=cfg.function["estimate_N"], prec=run.prec)
        else:
            Rm, srcm = 1 / profile.baseline, "synthetic baseline"
        doc["decay_bound"] = {**decay_bound_check(profile, lam, R, Rm), "R_f": R, "R_m": Rm,
                               "R_m_source": srcm, "subsequence": "indices of decay windows"}
    with run.manifest.phase("psi-windows"), precision(run.prec):
        anchors = win["anchors"] if win["anchors"] is not None else [w.n_hi for w in decay]
        C1, C4 = float(win["C1"]), float(win["C4"])
        tau = float(win["tau"]) if win["tau"] is not None else None
        found, status = psi_window_search(profile, anchors, C1, C4, m_row, tau, Rm) if anchors else (
            [], {"status": "no anchors found"})
        doc["psi_windows"] = {**status, "C1": C1, "C4": C4, "m": m_row,
                              "windows": [{"n_k": p.n_k, "l_k": p.l_k, "verified": p.verified,
                                           "unverified_indices": p.unverified_indices, "skipped": p.skipped,
                                           "sensitivity": p.sensitivity} for p in found]}
        rows = []
        tau_used = status.get("tau")
        for p in found:
            mid = psi(p.n_k, (p.l_k + 1) // 2, C1, C4, m_row, tau_used) if p.l_k else None
            rows.append((p.n_k, p.l_k, p.psi0, mid, p.psi_at_l, p.verified, p.skipped or "",
                         p.sensitivity.get("x10"), p.sensitivity.get("x0.1")))
        run.csv("psi.csv", ["n_k", "l_k", "psi_0", "psi_mid", "psi_l", "verified", "skipped",
                            "l_k_C_x10", "l_k_C_x0.1"], rows,
                {"psi": "(C4 x + C1)/(n_k - x) + 2 m x log(n_k)/(n_k - x) - tau n_k/(n_k - x)",
                 "threshold": "l_k is the largest integer with psi < -tau/2 on (0, l_k]",
                 "tau": run.fmt.value(tau_used), "C1": C1, "C4": C4, "m": m_row})
    doc["status"] = "ok" if anchors else "no anchors found; nothing to search"
    run.json("windows.json", doc)
    return 0


def _scan_windows(run: Run, choice, entries, schedule, profile):
    cfg = run.cfg
    if isinstance(choice, list):
        return [Window(lo, hi, "explicit") for lo, hi in choice]
    if choice == "coeff-gap":
        return detect_coeff_gaps(run.f, schedule.horizon)
    if choice == "stationary":
        return detect_stationary_runs(entries, schedule)
    det = cfg.detectors
    return detect_decay_windows(profile, float(det["margin"]), float(det["min_ratio_gap"]), det["merge_gap"])


def cmd_overconv(run: Run) -> int:
    cfg = run.cfg
    oc = cfg.overconv
    if not run.f.has_reference:
        raise CapabilityError(f"{run.f.name}: overconv needs a reference evaluator")
    with run.manifest.phase("entries"):
        schedule, entries, R, src = run.ray_entries()
    with run.manifest.phase("exclusion"):
        excl = omega_disks(entries, oc["eps"])
        cap = Fraction(oc["eps"]) * Fraction(str(math.pi**2 / 18)) * Fraction(1001, 1000)
    grids = cfg.grids or [{"name": "disk", "shape": "disk", "center": (0, 0),
                           "radius": Fraction(1, 2) if not gmpy2.is_finite(R) else
                           Fraction(str(float(R) / 2)), "n_r": 64, "n_theta": 64,
                           "jitter": Fraction(0)}]
    reports = []
    with run.manifest.phase("grids"), precision(run.prec):
        for i, g in enumerate(grids):
            geo = _grid_geometry(g, cfg.output["seed"] + i)
            K = make_grid(g["shape"], **geo)
            rep = grid_errors(run.f, entries, K, excl, tolerance=float(oc["tolerance"]),
                              prec=run.prec, threads=run.threads)
            reports.append((g["name"], rep))
    ns = reports[0][1].ns if reports else []
    run.csv("convergence.csv", ["n", "m_n"] + [f"sup_error_{name}" for name, _ in reports],
            [(n, schedule.values[n], *[rep.sup_errors[k] for _, rep in reports]) for k, n in enumerate(ns)],
            {"eps": str(oc["eps"]), "exclusion": f"union over 1 <= n <= {excl.horizon} (truncated)"})
    rates = {
        "R_f": R, "R_f_source": src,
        "sigma": {"eps": oc["eps"], "sigma_bound": excl.sigma_bound, "disks": len(excl.disks),
                  "below_eps": excl.sigma_bound < Fraction(oc["eps"]),
                  "below_eps_pi2_over_18": excl.sigma_bound <= cap,
                  "diameter_sum_matches": excl.diameter_sum() == excl.sigma_bound},
        "grids": [{"name": name, "shape": rep.shape, "retained": rep.retained, "skipped": rep.skipped,
                   "fitted_rate": rep.fitted_rate, "theory_rate": rep.theory_rate, "R": rep.R,
                   "R_source": rep.R_source, "max_modulus": rep.max_modulus, "tolerance": oc["tolerance"],
                   "verdict": rep.verdict, "residual": rep.residual} for name, rep in reports],
    }
    poles = oc["true_poles"]
    if poles is None:
        poles = [p for p, k in run.f.meta.poles for _ in range(k)]
    if poles:
        with run.manifest.phase("poles"), precision(run.prec):
            pd = pole_proximity([e for e in entries if e.n >= 1], [to_mpc(p) for p in poles])
            rates["pole_proximity"] = {"poles": [to_mpc(p) for p in poles],
                                       "per_n": [{"n": p.n, "distance": p.distance, "deficit": p.deficit}
                                                 for p in pd]}
            if oc["pole_rate"] is not None:
                rates["pole_proximity"]["rate"] = oc["pole_rate"]
                rates["pole_proximity"]["envelope_constant"] = envelope_constant(
                    [p.n for p in pd], [p.distance for p in pd], to_mpfr(oc["pole_rate"]))
            run.plot("pole_distance", [(p.n, p.distance, "max matched distance") for p in pd],
                     "free pole distance", "n", "distance", "log")
    run.json("rates.json", rates)
    for name, rep in reports:
        run.plot(f"convergence_{name}", [(n, e, name) for n, e in zip(rep.ns, rep.sup_errors) if n >= 1],
                 f"sup error on {name}", "n", "sup |f - pi_n|", "log")
    z0 = oc["z0"]
    if z0 is None and run.f.meta.regular_points:
        z0 = run.f.meta.regular_points[0]
    if z0 is None:
        run.json("overconv.json", {"status": "no regular boundary point declared or configured"})
        return 0
    with run.manifest.phase("overconvergence"), precision(run.prec):
        R_base, src_base = run.decay_radius(schedule, R, src)
        profile = decay_profile(entries, run.f, R_base, src_base, cfg.numerics["contact_cap"], prec=run.prec)
        windows = _scan_windows(run, oc["windows"], entries, schedule, profile)
        if not windows:
            run.json("overconv.json", {"status": "no windows detected", "window_source": oc["windows"]})
            return 0
        scan = overconvergence_scan(run.f, entries, windows, to_mpc(z0), oc["radii"], excl, R,
                                    oc["threshold"], oc["n_r"], oc["n_theta"], run.prec, run.threads)
    run.json("overconv.json", {
        "status": "ok", "z0": scan.z0, "R_f": scan.R_f, "R_f_source": scan.R_source,
        "window_source": oc["windows"] if isinstance(oc["windows"], str) else "explicit",
        "decay_baseline": profile.baseline, "decay_baseline_source": profile.baseline_source,
        "windows": [w.as_dict() for w in windows],
        "threshold": scan.threshold,
        "largest_working_radius": scan.largest_working_radius,
        "failure_radii": scan.failure_radii,
        "alpha": scan.alpha, "phi_delta0": scan.phi_delta0,
        "radii": [{"radius": v.radius, "subsequence": v.subsequence, "errors": v.errors,
                   "retained": v.retained, "skipped": v.skipped, "strictly_decreasing": v.decreasing,
                   "terminal_error": v.terminal_error, "success": v.success} for v in scan.verdicts],
    })
    rows = [(n, err, f"r={r}") for r, v in zip(oc["radii"], scan.verdicts)
            for n, err in zip(v.subsequence, v.errors)]
    run.plot("overconv", rows, "window-end subsequence near z0", "n_k'", "sup error", "log")
    return 0


def _grid_geometry(g: dict, seed: int) -> dict:
    shape = g["shape"]
    c = g["center"]
    if shape == "disk":
        geo = {"center": c, "radius": g["radius"], "n_r": g["n_r"], "n_theta": g["n_theta"]}
        if g["jitter"]:
            geo.update(jitter=float(g["jitter"]), seed=seed)
        return geo
    if shape in ("annulus", "annular-sector"):
        geo = {"center": c, "r_in": g["r_in"], "r_out": g["r_out"], "n_r": g["n_r"], "n_theta": g["n_theta"]}
        if shape == "annular-sector":
            geo.update(theta0=g["theta0"], theta1=g["theta1"])
        return geo
    return {"x0": g["x0"], "x1": g["x1"], "y0": g["y0"], "y1": g["y1"], "nx": g["nx"], "ny": g["ny"]}


COMMANDS = {"table": cmd_table, "ray": cmd_ray, "windows": cmd_windows, "overconv": cmd_overconv}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--precision", type=int, default=argparse.SUPPRESS, help="working precision in bits")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--no-figures", action="store_true", default=argparse.SUPPRESS,
                        help="write plot data only, skip PNG rendering")
    parser = argparse.ArgumentParser(prog="padelab", parents=[common],
                                     description="Exact Padé tables, ray sequences and overconvergence experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"table": "Padé table rectangle and block structure",
             "ray": "entries, A_n and identity residuals along a ray schedule",
             "windows": "gap, decay and stationary windows; psi-window search",
             "overconv": "error grids, fitted rates and overconvergence scan"}
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, default in (("config", None), ("out", None), ("precision", None), ("threads", None),
                         ("verbose", False), ("no_figures", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.config is None:
        parser.error("--config is required")
    run = None
    try:
        cfg = load_config(args.config)
        if args.precision is not None and args.precision < 64:
            raise ParameterError("--precision must be at least 64 bits")
        if args.threads is not None and args.threads < 1:
            raise ParameterError("--threads must be at least 1")
        run = Run(args.command, cfg, args)
        log.info("running %s with %s into %s", args.command, cfg.source, run.out)
        with precision(run.prec):
            code = COMMANDS[args.command](run)
        run.manifest.finalize("ok", code)
        return code
    except PadeLabError as exc:
        print(f"padelab: error: {exc}", file=sys.stderr)
        if run is not None:
            run.manifest.finalize("error", exc.exit_code, str(exc))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
