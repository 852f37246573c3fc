"""Command-line driver: ``qmpemba {relax,qme,spectra,krylov,theory} --config C --out D``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Every CSV and JSON output carries the SHA-256 of the resolved configuration.
JSON layouts are documented in ``schemas/outputs.schema.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __doc__ as _pkg_doc
from .asymmetry import (AsymmetryCurve, asymmetry_curve, detect_mpemba, fit_gaussian_decay)
from .basis import Geometry, format_spins, popcount
from .config import ConfigError, RunConfig, load, parse_angle
from .dynamics import EvolutionEngine, ensemble_reduced
from .errors import InvalidDensityError, NumericalError, ParameterError
from .krylov import suppression_study
from .model import ModelParams
from .spectra import default_bin_width, gap_histogram, gap_variance, sector_energy_variance
from .states import qos_initial_state, qtb_initial_state
from .theory import dephased_bath, per_m_timescale, predict_offdiagonal, transition_matrix

log = logging.getLogger("qmpemba")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_csv(path: Path, cfg: RunConfig, command: str, columns, rows) -> Path:
    """UTF-8 CSV with ``#`` header comments and 17-significant-digit floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# qmpemba {command}\n")
        fh.write(f"# config_sha256={cfg.sha256}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path: Path, cfg: RunConfig, schema: str, payload: dict) -> Path:
    doc = {"schema": schema, "config_sha256": cfg.sha256, **_clean(payload)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return path


def _slug(theta: float) -> str:
    return f"{theta:.4f}"


def _svg(path: Path, series, xlabel: str, ylabel: str, logy: bool = False) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path.name)
        return
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, x, y in series:
        ax.plot(x, y, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _relax_curve(engine, cfg: RunConfig, theta_s: float, theta_b: float) -> AsymmetryCurve:
    times = cfg.times
    rhos = ensemble_reduced(engine, theta_s, theta_b, cfg.ensemble, times, n_jobs=cfg.n_jobs)
    label = {"theta_s": theta_s, "theta_b": theta_b, **cfg.doc["ensemble"]}
    return asymmetry_curve(rhos, times, label)


def cmd_relax(cfg: RunConfig, out: Path) -> list[Path]:
    engine = EvolutionEngine(cfg.params, cfg.geometry, cfg.n_jobs)
    files, summary, series = [], [], []
    for ts, tb in cfg.theta_pairs:
        curve = _relax_curve(engine, cfg, ts, tb)
        stem = f"relax_{_slug(ts)}_{_slug(tb)}"
        files.append(write_csv(out / f"{stem}.csv", cfg, "relax", ["t", "delta_s"],
                               zip(curve.times, curve.clamped())))
        fit = fit_gaussian_decay(curve, cfg.fit_floor)
        entry = {"theta_s": ts, "theta_b": tb, "delta_s0": float(curve.values[0]), **fit.to_dict()}
        files.append(write_json(out / f"{stem}_fit.json", cfg, "fit_summary", entry))
        summary.append(entry)
        series.append((f"θs={ts:.3f}, θb={tb:.3f}", curve.times, curve.clamped()))
        log.info("relax θs=%.4f θb=%.4f t0=%s", ts, tb, fit.t0)
    files.append(write_json(out / "relax_summary.json", cfg, "relax_summary",
                            {"fit_floor": cfg.fit_floor, "runs": summary}))
    if cfg.doc["output"]["emit_svg"]:
        _svg(out / "relax.svg", series, "t", "ΔS")
    return files


def cmd_qme(cfg: RunConfig, out: Path) -> list[Path]:
    engine = EvolutionEngine(cfg.params, cfg.geometry, cfg.n_jobs)
    a, b = cfg.qme_pair
    ca = _relax_curve(engine, cfg, a.theta_s, a.theta_b)
    cb = _relax_curve(engine, cfg, b.theta_s, b.theta_b)
    verdict = detect_mpemba(ca, cb)
    files = [write_csv(out / "qme_curves.csv", cfg, "qme", ["t", f"delta_s_{a.label}", f"delta_s_{b.label}"],
                       zip(ca.times, ca.clamped(), cb.clamped()))]
    configs = [{"label": c.label, "theta_s": c.theta_s, "theta_b": c.theta_b, "delta_s0": float(cv.values[0])}
               for c, cv in ((a, ca), (b, cb))]
    payload = {"configs": configs, **verdict.to_dict()}
    if verdict.initially_larger is not None:
        payload["initially_larger_label"] = (a, b)[verdict.initially_larger - 1].label
    else:
        payload["initially_larger_label"] = None
    files.append(write_json(out / "qme_verdict.json", cfg, "qme_verdict", payload))
    if cfg.doc["output"]["emit_svg"]:
        _svg(out / "qme.svg", [(a.label, ca.times, ca.clamped()), (b.label, cb.times, cb.clamped())], "t", "ΔS")
    return files


def cmd_spectra(cfg: RunConfig, out: Path) -> list[Path]:
    g = cfg.geometry
    engine = EvolutionEngine(cfg.params, g, cfg.n_jobs)
    spectra = engine.spectra
    L = cfg.params.L
    files = [write_csv(out / "sector_variance.csv", cfg, "spectra", ["n_up", "charge", "dimension", "variance"],
                       ((n, 2 * n - L, sp.dimension, sector_energy_variance(sp)) for n, sp in sorted(spectra.items())))]
    ket, bra = cfg.element("spectra")
    q_ket, q_bra = int(popcount(ket)), int(popcount(bra))
    ms = cfg.doc["spectra"]["bath_sectors"]
    if ms is None:
        ms = [m for m in range(g.L_b + 1) if q_ket + m <= L and q_bra + m <= L]
    bins = cfg.doc["analysis"]["delta_omega_bins"]
    norm = cfg.doc["spectra"]["normalization"]
    entries, series = [], []
    for m in ms:
        if m > g.L_b:
            raise ConfigError(f"spectra.bath_sectors entry {m} exceeds L_b={g.L_b}")
        a, b = spectra[q_bra + m], spectra[q_ket + m]
        # rows of the transition matrix run over the ket sector
        weights = np.abs(transition_matrix(spectra, g, ket, bra, m).T) ** 2
        hist = gap_histogram(a, b, default_bin_width(a, b, bins), weights, normalization=norm)
        files.append(write_csv(out / f"gap_hist_m{m}.csv", cfg, "spectra",
                               ["omega", "count", "n_tilde", "m_avg", "nm_product"],
                               zip(hist.centers, hist.counts, hist.n_tilde, hist.m_avg, hist.nm_product)))
        entries.append({"m": m, "sector_a": q_bra + m, "sector_b": q_ket + m, "dim_a": hist.dim_a,
                        "dim_b": hist.dim_b, "dim_m": hist.dim_m, "delta_omega": hist.delta_omega,
                        "gap_variance": gap_variance(a, b)})
        series.append((f"m={m}", hist.centers, hist.n_tilde))
    files.append(write_json(out / "spectra_summary.json", cfg, "spectra_summary", {
        "element": {"ket": format_spins(ket, g.L_s), "bra": format_spins(bra, g.L_s)},
        "normalization": norm, "bins": bins, "histograms": entries}))
    if cfg.doc["output"]["emit_svg"]:
        _svg(out / "gap_density.svg", series, "ω", "Ñ(ω)")
    return files


def cmd_krylov(cfg: RunConfig, out: Path) -> list[Path]:
    k = cfg.doc["krylov"]
    params = ModelParams(k["L"], cfg.params.J, cfg.params.h)
    g = Geometry(k["L"], tuple(k["qos_sites"]))
    times = np.linspace(0.0, float(k["t_max"]), int(k["n_points"]))
    study = suppression_study(params, g, tuple(k["qprimes"]), times, max_depth=k["max_depth"])
    files, rows, series = [], [], []
    for qp, e in sorted(study.items()):
        ch = e.chain
        bcol = np.concatenate([[0.0], ch.b])
        files.append(write_csv(out / f"krylov_chain_q{qp}.csv", cfg, "krylov", ["n", "a_n", "b_n", "re_c", "im_c"],
                               ((n, ch.a[n], bcol[n], ch.overlaps[n].real, ch.overlaps[n].imag)
                                for n in range(ch.depth))))
        rows += [(t, d.real, d.imag, kr.real, kr.imag, qp) for t, d, kr in zip(times, e.direct, e.krylov)]
        series.append((f"q'={qp}", times, np.abs(e.direct)))
    files.append(write_csv(out / "krylov_correlation.csv", cfg, "krylov",
                           ["t", "re_direct", "im_direct", "re_krylov", "im_krylov", "qprime"], rows))
    report = {"L": k["L"], "qos_sites": k["qos_sites"], "entries": [e.to_dict() for _, e in sorted(study.items())],
              "max_reconstruction_error": max(float(np.abs(e.direct - e.krylov).max()) for e in study.values())}
    files.append(write_json(out / "krylov_report.json", cfg, "krylov_report", report))
    if cfg.doc["output"]["emit_svg"]:
        _svg(out / "krylov.svg", series, "t", "|C(t)|")
    return files


def cmd_theory(cfg: RunConfig, out: Path) -> list[Path]:
    g = cfg.geometry
    th = cfg.doc["theory"]
    a1, a2 = cfg.element("theory")
    ts, tb = parse_angle(th["theta_s"]), parse_angle(th["theta_b"])
    engine = EvolutionEngine(cfg.params, g, cfg.n_jobs)
    times = cfg.times
    qos = qos_initial_state(ts, g.L_s)
    bath = dephased_bath(qtb_initial_state(tb, g.L_b))
    pred = predict_offdiagonal(engine.spectra, g, qos, bath, (a1, a2), times, th["truncation_tol"])
    rows = [(t, m, c.real, c.imag, abs(c)) for m, curve in sorted(pred.per_m.items()) for t, c in zip(times, curve)]
    files = [write_csv(out / "theory_per_m.csv", cfg, "theory", ["t", "m", "re", "im", "abs"], rows)]
    total = pred.total
    summary = {"element": [format_spins(a1, g.L_s), format_spins(a2, g.L_s)], "theta_s": ts, "theta_b": tb,
               "q1": int(popcount(a1)), "q2": int(popcount(a2)), "L": g.L,
               "occupations": {str(m): p for m, p in sorted(bath.occupations.items())},
               "per_m_t0": {str(m): t0 for m, t0 in per_m_timescale(pred, cfg.fit_floor).items()},
               "truncated_weight": {str(m): w for m, w in pred.truncated_weight.items()},
               "max_abs_deviation": None}
    series = [("theory", times, np.abs(total))]
    if th["simulate"]:
        rhos = ensemble_reduced(engine, ts, tb, cfg.ensemble, times, n_jobs=cfg.n_jobs)
        sim = rhos[:, a1, a2]
        files.append(write_csv(out / "theory_vs_sim.csv", cfg, "theory",
                               ["t", "re_theory", "im_theory", "re_sim", "im_sim", "abs_diff"],
                               zip(times, total.real, total.imag, sim.real, sim.imag, np.abs(total - sim))))
        summary["max_abs_deviation"] = float(np.abs(total - sim).max())
        series.append(("simulation", times, np.abs(sim)))
    files.append(write_json(out / "theory_summary.json", cfg, "theory_summary", summary))
    if cfg.doc["output"]["emit_svg"]:
        _svg(out / "theory.svg", series, "t", "|ρ_S element|")
    return files


COMMANDS = {"relax": cmd_relax, "qme": cmd_qme, "spectra": cmd_spectra, "krylov": cmd_krylov, "theory": cmd_theory}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmpemba", description=_pkg_doc)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"relax": "entanglement-asymmetry relaxation curves and Gaussian fits",
             "qme": "Mpemba crossover verdict for two labeled configurations",
             "spectra": "sector energy variances and gap histograms",
             "krylov": "Lanczos chains, correlation reconstruction and q' suppression",
             "theory": "per-m spectral prediction of a QOS element versus simulation"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides output.directory)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config)
        out = Path(args.out) if args.out else cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](cfg, out)
    except (NumericalError, InvalidDensityError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qmpemba: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ParameterError) as exc:
        print(f"qmpemba: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qmpemba: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
