"""Command-line pipeline: config ingestion, band sweeps, persistence.

Subcommands
-----------
band         certified eigenvalue series along a Brillouin path, CSV + JSON
compare      series vs oracle conformance table with PASS/FAIL rows
certify      closed-form / computed certificate table along the path
np-spectrum  resonance spectrum at each path point
limit        infinite-contrast limit spectrum at each path point
oracle       finite-contrast plane-wave eigenvalues along the path

Configuration is TOML (see `default_config` for the schema); command
line flags override single values.  All CSV output uses 17 significant
digits and fixed row ordering, so identical configs produce
byte-identical files regardless of worker count.  Plot scripts emitted
next to the CSVs are self-contained; the core never imports a plotting
library.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .certificates import Certificate, build_certificate, truncation_bound
from .geometry import ConfigurationError, Inclusion, InclusionSet
from .lattice_green import GreenEvaluator, QuasiMomentum
from .limit_spectrum import disk_dirichlet, limit_spectrum
from .np_spectrum import assemble, resonance_spectrum
from .oracle import PlaneWaveBasis, beta_of_z_oracle, bloch_solve
from .series_engine import (
    build_chain,
    build_series_model,
    coefficients_contour,
    coefficients_layer_rs,
    evaluate_series,
)


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    return {
        "crystal": {
            "disks": [{"center": [0.5, 0.5], "radius": 0.3}],
            "buffer_radius": None,
            "contrast": 1.0e4,
        },
        "path": {
            "vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]],
            "samples_per_leg": 8,
        },
        "series": {"order": 3, "branches": 1},
        "resolution": {
            "nodes": 128,
            "oracle_cutoff": 16,
            "fourier_cutoff": 64,
            "dirichlet_n_max": 6,
            "dirichlet_k_max": 4,
        },
        "output": {"directory": "out", "oracle": False, "plots": True},
    }


RESOLUTION_PRESETS = {
    "low": {"nodes": 64, "oracle_cutoff": 8, "fourier_cutoff": 32},
    "default": {},
    "high": {"nodes": 192, "oracle_cutoff": 32, "fourier_cutoff": 96},
}


def _merge_checked(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError("unknown config key %r" % (path + key,))
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge_checked(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def load_config(path: str | None) -> dict:
    cfg = default_config()
    if path is not None:
        with open(path, "rb") as fh:
            user = tomllib.load(fh)
        cfg = _merge_checked(cfg, user)
    return cfg


def inclusion_set_from_config(cfg: dict) -> InclusionSet:
    disks = cfg["crystal"]["disks"]
    if not disks:
        raise ConfigError("crystal.disks must not be empty")
    incs = tuple(
        Inclusion("disk", center=tuple(d["center"]), radius=float(d["radius"]))
        for d in disks
    )
    return InclusionSet(incs, buffer_outer_radius=cfg["crystal"]["buffer_radius"])


def brillouin_path(cfg: dict) -> list:
    """Path samples as QuasiMomentum; vertices are multiples of pi."""
    verts = [np.pi * np.asarray(v, dtype=float) for v in cfg["path"]["vertices"]]
    n = int(cfg["path"]["samples_per_leg"])
    if n < 1:
        raise ConfigError("path.samples_per_leg must be >= 1")
    pts = []
    for a, b in zip(verts[:-1], verts[1:]):
        for i in range(n):
            pts.append(a + (b - a) * (i / n))
    pts.append(verts[-1])
    return [QuasiMomentum((float(p[0]), float(p[1]))) for p in pts]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _resolve_jobs(args) -> int:
    if args.jobs is not None:
        return max(1, int(args.jobs))
    env = os.environ.get("BLOCH_SERIES_JOBS")
    if env:
        return max(1, int(env))
    return 1


# ---------------------------------------------------------------------------
# band
# ---------------------------------------------------------------------------

def _band_rows_at_alpha(cfg: dict, alpha: tuple) -> list:
    """BandResult rows for one path point (worker-safe, config-primitive)."""
    iset = inclusion_set_from_config(cfg)
    mom = QuasiMomentum(alpha)
    res = cfg["resolution"]
    order = int(cfg["series"]["order"])
    branches = int(cfg["series"]["branches"])
    z = 1.0 / float(cfg["crystal"]["contrast"])
    disk = iset.inclusions[0]
    buffer_b = cfg["crystal"]["buffer_radius"]
    spec = disk_dirichlet(
        disk.radius, int(res["dirichlet_n_max"]), int(res["dirichlet_k_max"])
    )
    limit = limit_spectrum(mom, spec, max(branches + 1, 4))
    want_oracle = bool(cfg["output"]["oracle"])

    rows = []
    if mom.is_zero:
        # Periodic branch: order-0 certified evaluation around each limit
        # value, with the periodic-point radius formula.
        for j in range(branches):
            cert = _certificate_at(cfg, mom, limit, j, iset, buffer_b)
            beta0 = limit.values[j].beta0
            bound = (
                truncation_bound(cert, 0, z) if abs(z) < cert.r_star else np.inf
            )
            lam = 1.0 / beta0
            lam_oracle = ""
            if want_oracle:
                out = beta_of_z_oracle(
                    iset, mom, z, j, cutoff=int(res["oracle_cutoff"])
                )
                lam_oracle = out["omega2"]
            rows.append(
                [
                    alpha[0],
                    alpha[1],
                    z,
                    j,
                    lam,
                    lam_oracle,
                    bound * lam**2 if np.isfinite(bound) else np.inf,
                    abs(z) < cert.r_star,
                    cert.r_star,
                    cert.d,
                    cert.mu_minus,
                ]
            )
        return rows

    for j in range(branches):
        chain = build_chain(
            iset,
            mom,
            nodes_per_inclusion=int(res["nodes"]),
            mode_index=j,
            n_max=int(res["dirichlet_n_max"]),
            k_max=int(res["dirichlet_k_max"]),
        )
        model = build_series_model(chain, fourier_cutoff=int(res["fourier_cutoff"]))
        mult = chain.dirichlet.modes[j].multiplicity
        jlim = _limit_index(limit, chain.beta0)
        cert = _certificate_at(
            cfg, mom, limit, jlim, iset, buffer_b, computed=chain.np_spec.mu_minus
        )
        if mult == 1:
            exp = coefficients_layer_rs(model, order)
        else:
            exp = coefficients_contour(model, cert.d, order, mult)
        exp.certificate = cert
        ev = evaluate_series(exp, z)
        lam_oracle = ""
        if want_oracle:
            out = beta_of_z_oracle(iset, mom, z, j, cutoff=int(res["oracle_cutoff"]))
            lam_oracle = out["omega2"]
        rows.append(
            [
                alpha[0],
                alpha[1],
                z,
                j,
                float(np.real(ev.lambda_hat)),
                lam_oracle,
                ev.lambda_error_bound,
                ev.certified,
                cert.r_star,
                cert.d,
                cert.mu_minus,
            ]
        )
    return rows


def _limit_index(limit, beta0: float) -> int:
    betas = np.array([v.beta0 for v in limit.values])
    i = int(np.argmin(np.abs(betas - beta0)))
    if abs(betas[i] - beta0) > 1e-9 * beta0:
        raise ConfigError("series branch missing from the limit spectrum")
    return i


def _certificate_at(cfg, mom, limit, j, iset, buffer_b, computed=None) -> Certificate:
    disk = iset.inclusions[0]
    if buffer_b is not None:
        return build_certificate(
            mom,
            limit,
            j,
            disk_radius=disk.radius,
            buffer_radius=float(buffer_b),
            computed_mu_minus=computed,
        )
    if computed is None:
        res = cfg["resolution"]
        mesh_nodes = int(res["nodes"])
        from .geometry import build_mesh

        mesh = build_mesh(iset, mesh_nodes)
        ops = assemble(mesh, GreenEvaluator(mom))
        computed = resonance_spectrum(ops).mu_minus
    return build_certificate(mom, limit, j, computed_mu_minus=computed)


BAND_HEADER = [
    "alpha_x",
    "alpha_y",
    "z",
    "branch",
    "lambda_series",
    "lambda_oracle",
    "error_bound",
    "certified",
    "r_star",
    "d",
    "mu_minus",
]


def run_band(cfg: dict, jobs: int = 1) -> tuple:
    """Band sweep; returns (rows, expansions-as-dicts)."""
    path = brillouin_path(cfg)
    alphas = [p.alpha for p in path]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_band_rows_at_alpha, [cfg] * len(alphas), alphas))
    else:
        chunks = [_band_rows_at_alpha(cfg, a) for a in alphas]
    rows = [r for chunk in chunks for r in chunk]
    return rows, None


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

COMPARE_HEADER = [
    "alpha_x",
    "alpha_y",
    "z",
    "branch",
    "order",
    "beta_series",
    "beta_oracle",
    "abs_error",
    "bound",
    "oracle_slack",
    "certified",
    "status",
]


def run_compare(cfg: dict) -> tuple:
    """Series-vs-oracle conformance rows; returns (rows, all_pass)."""
    iset = inclusion_set_from_config(cfg)
    res = cfg["resolution"]
    order = int(cfg["series"]["order"])
    z = 1.0 / float(cfg["crystal"]["contrast"])
    rows = []
    all_pass = True
    for mom in brillouin_path(cfg):
        if mom.is_zero:
            continue
        chain = build_chain(
            iset, mom, nodes_per_inclusion=int(res["nodes"]), mode_index=0
        )
        model = build_series_model(chain, fourier_cutoff=int(res["fourier_cutoff"]))
        exp = coefficients_layer_rs(model, order)
        spec = chain.dirichlet
        limit = limit_spectrum(mom, spec, 4)
        cert = _certificate_at(
            cfg,
            mom,
            limit,
            _limit_index(limit, chain.beta0),
            iset,
            cfg["crystal"]["buffer_radius"],
            computed=chain.np_spec.mu_minus,
        )
        exp.certificate = cert
        out = beta_of_z_oracle(iset, mom, z, 0, cutoff=int(res["oracle_cutoff"]))
        certified = abs(z) < cert.r_star
        for p in range(1, order + 1):
            beta_p = chain.beta0 + sum(
                exp.coefficients[n] * z ** (n + 1) for n in range(p)
            )
            err = abs(out["beta"] - beta_p)
            bound = truncation_bound(cert, p, z) if certified else np.inf
            ok = (not certified) or err <= bound + out["slack"]
            status = "PASS" if certified and ok else ("SKIP" if not certified else "FAIL")
            if certified and not ok:
                all_pass = False
            rows.append(
                [
                    mom.alpha[0],
                    mom.alpha[1],
                    z,
                    0,
                    p,
                    beta_p,
                    out["beta"],
                    err,
                    bound if np.isfinite(bound) else np.inf,
                    out["slack"],
                    certified,
                    status,
                ]
            )
    return rows, all_pass


# ---------------------------------------------------------------------------
# plot script emission
# ---------------------------------------------------------------------------

_BAND_PLOT = '''"""Self-contained band diagram plot for {csv}."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv}")))
if not rows:
    # Empty result file: emit an empty figure rather than failing.
    plt.figure()
    plt.title("no band data")
    plt.savefig("band.png", dpi=150)
    raise SystemExit
branches = sorted(set(r["branch"] for r in rows))
plt.figure(figsize=(7, 4.5))
for b in branches:
    sel = [r for r in rows if r["branch"] == b]
    x = list(range(len(sel)))
    lam = [float(r["lambda_series"]) for r in sel]
    plt.plot(x, lam, marker=".", label="branch " + b)
plt.xlabel("path sample")
plt.ylabel("eigenvalue")
plt.legend()
plt.tight_layout()
plt.savefig("band.png", dpi=150)
'''

_COMPARE_PLOT = '''"""Self-contained error-decay plot for {csv}."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv}")))
if not rows:
    plt.figure()
    plt.title("no comparison data")
    plt.savefig("compare.png", dpi=150)
    raise SystemExit
orders = sorted(set(int(r["order"]) for r in rows))
err = [max(float(r["abs_error"]) for r in rows if int(r["order"]) == p) for p in orders]
bnd = [max(float(r["bound"]) for r in rows if int(r["order"]) == p) for p in orders]
plt.figure(figsize=(6, 4))
plt.semilogy(orders, err, "o-", label="observed |error|")
plt.semilogy(orders, bnd, "s--", label="certified bound")
plt.xlabel("truncation order")
plt.ylabel("error")
plt.legend()
plt.tight_layout()
plt.savefig("compare.png", dpi=150)
'''


def emit_plots(outdir: str, kind: str, csv_name: str) -> str:
    src = _BAND_PLOT if kind == "band" else _COMPARE_PLOT
    path = os.path.join(outdir, "%s_plot.py" % kind)
    csv_path = os.path.join(outdir, csv_name)
    if not os.path.exists(csv_path):
        raise IOError("missing result file %s" % csv_path)
    with open(path, "w") as fh:
        fh.write(src.format(csv=csv_name))
    return path


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blochseries")
    ap.add_argument("command", choices=[
        "band", "compare", "certify", "np-spectrum", "limit", "oracle",
    ])
    ap.add_argument("--config", default=None)
    ap.add_argument("--order", type=int, default=None)
    ap.add_argument("--contrast", type=float, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--resolution", choices=sorted(RESOLUTION_PRESETS), default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.order is not None:
            cfg["series"]["order"] = args.order
        if args.contrast is not None:
            cfg["crystal"]["contrast"] = args.contrast
        if args.out is not None:
            cfg["output"]["directory"] = args.out
        if args.resolution is not None:
            cfg["resolution"] = {
                **cfg["resolution"],
                **RESOLUTION_PRESETS[args.resolution],
            }
        jobs = _resolve_jobs(args)
        outdir = cfg["output"]["directory"]
        os.makedirs(outdir, exist_ok=True)
        return _dispatch(args.command, cfg, jobs, outdir)
    except (ConfigError, ConfigurationError, tomllib.TOMLDecodeError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except Exception as exc:  # surface with context, nonzero exit
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


def _dispatch(command: str, cfg: dict, jobs: int, outdir: str) -> int:
    iset = inclusion_set_from_config(cfg)
    res = cfg["resolution"]
    if command == "band":
        rows, _ = run_band(cfg, jobs)
        write_csv(os.path.join(outdir, "band.csv"), BAND_HEADER, rows)
        if cfg["output"]["plots"]:
            emit_plots(outdir, "band", "band.csv")
        print("wrote %d rows to %s" % (len(rows), os.path.join(outdir, "band.csv")))
        return 0
    if command == "compare":
        rows, ok = run_compare(cfg)
        write_csv(os.path.join(outdir, "compare.csv"), COMPARE_HEADER, rows)
        if cfg["output"]["plots"]:
            emit_plots(outdir, "compare", "compare.csv")
        n_pass = sum(1 for r in rows if r[-1] == "PASS")
        print("%d/%d rows PASS" % (n_pass, len(rows)))
        return 0 if ok else 3
    if command == "certify":
        disk = iset.inclusions[0]
        spec = disk_dirichlet(
            disk.radius, int(res["dirichlet_n_max"]), int(res["dirichlet_k_max"])
        )
        rows = []
        for mom in brillouin_path(cfg):
            limit = limit_spectrum(mom, spec, 4)
            cert = _certificate_at(
                cfg, mom, limit, 0, iset, cfg["crystal"]["buffer_radius"]
            )
            rows.append(
                [mom.alpha[0], mom.alpha[1], cert.d, cert.mu_minus,
                 cert.z_star, cert.r_star,
                 cert.theta if cert.theta is not None else ""]
            )
        header = ["alpha_x", "alpha_y", "d", "mu_minus", "z_star", "r_star", "theta"]
        write_csv(os.path.join(outdir, "certificates.csv"), header, rows)
        for row in rows:
            print(
                "alpha=(%.6f, %.6f)  d=%.8g  mu_minus=%.8g  z*=%.8g  r*=%.8g"
                % (row[0], row[1], row[2], row[3], row[4], row[5])
            )
        return 0
    if command == "np-spectrum":
        from .geometry import build_mesh

        rows = []
        for mom in brillouin_path(cfg):
            mesh = build_mesh(iset, int(res["nodes"]))
            ops = assemble(mesh, GreenEvaluator(mom))
            spec = resonance_spectrum(ops)
            for i, mu in enumerate(spec.mu):
                rows.append([mom.alpha[0], mom.alpha[1], i, mu])
        write_csv(
            os.path.join(outdir, "np_spectrum.csv"),
            ["alpha_x", "alpha_y", "index", "mu"],
            rows,
        )
        print("wrote %d resonances" % len(rows))
        return 0
    if command == "limit":
        disk = iset.inclusions[0]
        spec = disk_dirichlet(
            disk.radius, int(res["dirichlet_n_max"]), int(res["dirichlet_k_max"])
        )
        rows = []
        for mom in brillouin_path(cfg):
            limit = limit_spectrum(mom, spec, 6)
            for j, val in enumerate(limit.values):
                rows.append(
                    [mom.alpha[0], mom.alpha[1], j, val.beta0, 1.0 / val.beta0,
                     val.multiplicity, val.provenance]
                )
        write_csv(
            os.path.join(outdir, "limit.csv"),
            ["alpha_x", "alpha_y", "index", "beta0", "lambda0",
             "multiplicity", "provenance"],
            rows,
        )
        print("wrote %d limit values" % len(rows))
        return 0
    if command == "oracle":
        k = float(cfg["crystal"]["contrast"])
        rows = []
        for mom in brillouin_path(cfg):
            basis = PlaneWaveBasis(mom, int(res["oracle_cutoff"]))
            out = bloch_solve(basis, iset, k, q=4)
            for i, (w2, rn) in enumerate(
                zip(out.eigenvalues, out.residual_norms)
            ):
                rows.append([mom.alpha[0], mom.alpha[1], k, i, w2, rn])
        write_csv(
            os.path.join(outdir, "oracle.csv"),
            ["alpha_x", "alpha_y", "k", "index", "omega2", "residual"],
            rows,
        )
        print("wrote %d oracle eigenvalues" % len(rows))
        return 0
    raise ConfigError("unknown command %r" % command)


if __name__ == "__main__":
    raise SystemExit(main())
