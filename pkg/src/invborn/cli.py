"""Command line interface: ``invborn {simulate,reconstruct,analyze,selftest}``.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure,
3 selftest failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .diffuse import k1_pseudoinverse
from .convergence import VARIANTS, build_report, error_plateau, theorem1_radius
from .exceptions import InvBornError
from .inverse import divergence_monitor, exact_inverse, inverse_coefficients, weighted_pseudoinverse
from .io import (
    read_data_csv,
    read_geometry_csv,
    write_data_csv,
    write_field_csv,
    write_geometry_csv,
    write_json,
)
from .selftest import run_selftest, selftest_passed
from .series import forward_series, forward_tail_bound, weighted_norm

log = logging.getLogger("invborn")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3
DATA_FILE = "data.csv"
GEOMETRY_FILE = "geometry.csv"
TRUTH_FILE = "eta_true.csv"
RECON_FILE = "eta_recon.csv"
REPORT_FILE = "report.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="invborn", description="Inverse Born series for diffuse-wave scattering.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", required=True, help="JSON run configuration")
        if data:
            p.add_argument("--data", help="data CSV written by 'simulate'")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        p.add_argument("--order", type=int, help="override forward_order (simulate) or inverse_order")
        p.add_argument("--variant", choices=VARIANTS, help="constant used for the convergence radius")

    p = sub.add_parser("simulate", help="forward data from the configured contrast")
    common(p)
    p.add_argument("--override-divergence", action="store_true", help="simulate even if mu*||eta|| >= 1")
    p = sub.add_parser("reconstruct", help="inverse Born series reconstruction")
    common(p, data=True)
    p = sub.add_parser("analyze", help="bound constants and convergence radius")
    common(p, data=True)
    sub.add_parser("selftest", help="run the built-in oracle suites")
    return parser


def _out_dir(args, cfg):
    out = Path(args.out if args.out else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(args, cfg):
    if args.variant:
        cfg.variant = args.variant
    if args.order is not None:
        if args.order < 1:
            raise UsageError("--order must be >= 1")
        if args.command == "simulate":
            cfg.forward_order = args.order
        else:
            cfg.inverse_order = args.order


def _points(cfg, family):
    if cfg.model == "diffuse-wave":
        g = family.geometry
        return {"source": g.sources, "detector": g.detectors, "voxel": g.voxel_centers}
    return {"field": np.zeros((family.dim_x, 3)), "data": np.zeros((family.dim_y, 3))}


def _coords(cfg, family):
    return family.geometry.voxel_centers if cfg.model == "diffuse-wave" else None


def _n_detectors(family):
    return getattr(family, "n_detectors", 1)


def _linear_inverse(cfg, family):
    if cfg.exact_inverse:
        return exact_inverse(family)
    if cfg.model == "diffuse-wave":
        return k1_pseudoinverse(family, cfg.pseudoinverse)
    p = cfg.pseudoinverse
    return weighted_pseudoinverse(family.k1_matrix(), family.weights_x, family.weights_y, p.method, p.threshold)


def cmd_simulate(args, cfg):
    family = cfg.build_family()
    eta = cfg.true_eta(family)
    eta_norm = family.norm_x(eta)
    if family.mu * eta_norm >= 1.0:
        msg = f"mu * ||eta|| = {family.mu * eta_norm:.4g} >= 1: the forward series may diverge"
        if not args.override_divergence:
            log.error("%s; rerun with --override-divergence", msg)
            return EXIT_NUMERIC
        log.warning(msg)
    if np.any(eta < -1.0):
        log.warning("contrast below -1 makes 1 + eta negative somewhere")
    phi = forward_series(family, eta, cfg.forward_order)
    out = _out_dir(args, cfg)
    write_data_csv(out / DATA_FILE, phi, _n_detectors(family))
    write_geometry_csv(out / GEOMETRY_FILE, _points(cfg, family))
    write_field_csv(out / TRUTH_FILE, _coords(cfg, family), {"eta": eta})
    log.info("wrote %s, %s, %s to %s", DATA_FILE, GEOMETRY_FILE, TRUTH_FILE, out)
    return EXIT_OK


def _load_data(path, cfg, family):
    path = Path(path)
    src, det, val = read_data_csv(path)
    nd = _n_detectors(family)
    if len(val) != family.dim_y or not np.array_equal(src * nd + det, np.arange(family.dim_y)):
        raise UsageError(f"{path}: data layout does not match the configured geometry ({family.dim_y} values)")
    sidecar = path.with_name(GEOMETRY_FILE)
    if sidecar.exists():
        stored = read_geometry_csv(sidecar)
        expected = _points(cfg, family)
        for kind, pts in expected.items():
            got = stored.get(kind)
            if got is None or got.shape != pts.shape or not np.allclose(got, pts, rtol=0, atol=1e-12):
                raise UsageError(f"{sidecar}: {kind} points do not match the configured geometry")
    else:
        log.warning("no geometry sidecar next to %s; skipping geometry validation", path)
    return val


def cmd_reconstruct(args, cfg):
    if not args.data:
        raise UsageError("reconstruct needs --data")
    family = cfg.build_family()
    phi = _load_data(args.data, cfg, family)
    k1_inv = _linear_inverse(cfg, family)
    K = cfg.inverse_order
    coeffs = inverse_coefficients(family, k1_inv, phi, K, allow_high_order=True)
    sums = coeffs.partial_sums()
    out = _out_dir(args, cfg)
    write_field_csv(out / RECON_FILE, _coords(cfg, family), {f"order_{m}": sums[m - 1] for m in range(1, K + 1)})

    eta_true = cfg.true_eta(family) if cfg.has_truth else None
    report = build_report(family, k1_inv, phi, K, cfg.variant, eta_true=eta_true, coeffs=coeffs)
    doc = {
        "model": cfg.model,
        "inverse_order": K,
        "term_norms": coeffs.term_norms.tolist(),
        "regularization": k1_inv.regularization,
        "convergence": report.to_dict(),
    }
    if K >= 3:
        verdict = divergence_monitor(coeffs.term_norms)
        doc["monitor"] = {"status": verdict.status, "ratio": verdict.ratio}
    if eta_true is not None:
        errors = [weighted_norm(s - eta_true, family.weights_x) for s in sums]
        plateau, monotone = error_plateau(errors)
        doc["synthetic"] = {
            "errors": errors,
            "plateau_order": plateau,
            "nonincreasing_to_plateau": monotone,
            "plateau_error": errors[plateau - 1],
            "truth_norm": family.norm_x(eta_true),
        }
    write_json(out / REPORT_FILE, doc)
    log.info("wrote %s and %s to %s", RECON_FILE, REPORT_FILE, out)
    return EXIT_OK


def analyze_document(cfg, family, k1_inv, phi=None):
    """Flat key-value analysis report."""
    C, r, r0 = theorem1_radius(family.nu, family.mu, k1_inv.operator_norm, cfg.variant)
    doc = {
        "model": cfg.model,
        "nu": family.nu,
        "mu": family.mu,
        "k1_norm": k1_inv.operator_norm,
        "variant": cfg.variant,
        "C": C,
        "r": r,
        "r0": r0,
        "M": r0,
    }
    for variant in VARIANTS:
        Cv, rv, r0v = theorem1_radius(family.nu, family.mu, k1_inv.operator_norm, variant)
        doc[f"C_{variant}"] = Cv
        doc[f"r_{variant}"] = rv
        doc[f"r0_{variant}"] = r0v
    if phi is not None:
        rep = build_report(family, k1_inv, phi, cfg.inverse_order, cfg.variant)
        doc["eta1_norm"] = rep.eta1_norm
        doc["converges"] = rep.converges
        doc["tail_bound"] = rep.to_dict()["tail_bound"]
        doc["order"] = cfg.inverse_order
    if cfg.has_truth:
        eta = cfg.true_eta(family)
        q = family.mu * family.norm_x(eta)
        doc["eta_norm"] = family.norm_x(eta)
        doc["forward_tail_bound_order1"] = (
            forward_tail_bound(family.nu, family.mu, family.norm_x(eta), 1) if q < 1 else "divergent"
        )
    return doc


def cmd_analyze(args, cfg):
    family = cfg.build_family()
    phi = _load_data(args.data, cfg, family) if args.data else None
    k1_inv = _linear_inverse(cfg, family)
    doc = analyze_document(cfg, family, k1_inv, phi)
    print(json.dumps(doc, indent=2))
    if args.out:
        write_json(_out_dir(args, cfg) / "analysis.json", doc)
    return EXIT_OK


def cmd_selftest(args):
    checks = run_selftest()
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if selftest_passed(checks) else EXIT_SELFTEST


COMMANDS = {"simulate": cmd_simulate, "reconstruct": cmd_reconstruct, "analyze": cmd_analyze}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        cfg = load_config(args.config)
        _apply_overrides(args, cfg)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, UsageError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (InvBornError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
