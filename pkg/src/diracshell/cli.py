"""Experiment driver: eigenvalue sweeps over shell width, asymptotic fits,
and the property-check suite.

The sweep subtracts the transverse ladder pi^2/(16 eps^2) + m/eps plus the
constant mass terms from each shell eigenvalue and fits the remaining
residual affinely in eps; the fitted intercept is compared against the
corresponding eigenvalue of the effective curve operator, and the square
root of the paired shell spectrum feeds the first-order expansion of the
operator's own nonnegative eigenvalues.

Verbs: check, sweep, corollary, transverse-table, effective-spectrum,
dump-clifford.  Exit codes: 0 ok, 1 check failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .checks import run_all
from .clifford import build_clifford, family_to_json
from .effective import assemble_effective, effective_eigenvalues, effective_spectrum_csv
from .eigsolve import EigensolveError
from .geometry import curve_from_json, shell_metric
from .shell import assemble_shell, default_nt, lowest_eigenvalues
from .threads import set_blas_threads
from .transverse import write_transverse_table

__all__ = [
    "SweepConfig",
    "AsymptoticsReport",
    "CorollaryReport",
    "run_sweep",
    "run_corollary",
    "run_checks",
    "main",
]


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    curve: dict
    m: float = 0.0
    eps: tuple = (0.1, 0.07, 0.05, 0.035)
    ns: int = 192
    nt: int | None = None          # None: per-eps rule max(8, ceil(4/sqrt(eps)))
    count: int = 4
    eff_ns: int = 1024
    seed: int = 0

    @staticmethod
    def from_dict(payload: dict) -> "SweepConfig":
        try:
            cfg = SweepConfig(
                curve=payload["curve"],
                m=float(payload.get("m", 0.0)),
                eps=tuple(float(e) for e in payload.get("eps", (0.1, 0.07, 0.05, 0.035))),
                ns=int(payload.get("ns", 192)),
                nt=(int(payload["nt"]) if payload.get("nt") is not None else None),
                count=int(payload.get("count", 4)),
                eff_ns=int(payload.get("eff_ns", 1024)),
                seed=int(payload.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad sweep config: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.m < 0:
            raise ConfigError("m must be nonnegative")
        if len(self.eps) < 1 or any(e <= 0 for e in self.eps):
            raise ConfigError("eps values must be positive")
        if sorted(self.eps, reverse=True) != list(self.eps):
            raise ConfigError("eps list must be strictly decreasing")
        if len(set(self.eps)) != len(self.eps):
            raise ConfigError("eps values must be distinct")
        if self.count < 1 or self.count > 12:
            raise ConfigError("count must lie in 1..12")


@dataclass
class AsymptoticsReport:
    curve_id: str
    m: float
    eps: list
    mu_shell: dict          # eps -> list of eigenvalues
    residuals: dict         # eps -> list r_j(eps)
    mu_effective: list      # reference eigenvalues of the curve operator
    fits: list              # per j: dict(intercept, slope, stderr_intercept)
    partial: bool
    failures: dict = field(default_factory=dict)

    def verdicts(self) -> list:
        out = []
        for j, fit in enumerate(self.fits):
            out.append(
                {
                    "j": j + 1,
                    "intercept": fit["intercept"],
                    "slope": fit["slope"],
                    "mu_effective": self.mu_effective[j],
                    "intercept_error": abs(fit["intercept"] - self.mu_effective[j]),
                }
            )
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "j", "mu_shell", "residual", "mu_eff_ref"])
            for eps in self.eps:
                if eps not in self.mu_shell:
                    continue
                for j, mu in enumerate(self.mu_shell[eps]):
                    writer.writerow(
                        [repr(eps), j + 1, repr(mu), repr(self.residuals[eps][j]),
                         repr(self.mu_effective[j])]
                    )

    def summary(self) -> dict:
        return {
            "curve": self.curve_id,
            "m": self.m,
            "eps": list(self.eps),
            "partial": self.partial,
            "failures": {repr(k): v for k, v in self.failures.items()},
            "verdicts": self.verdicts(),
        }


@dataclass
class CorollaryReport:
    curve_id: str
    m: float
    eps: list
    lam: dict               # eps -> list of lambda_p = sqrt(mu_{2p})
    pairing_defect: dict    # eps -> worst relative split of the 2p pairs
    linear_coeffs: list     # fitted eps-linear coefficient per p
    references: list        # (2/pi) mu_{2p}(Upsilon) + (2/pi) m^2 - (16/pi^3) m^2
    partial: bool

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "p", "lambda", "linear_coeff_partial"])
            for eps in self.eps:
                if eps not in self.lam:
                    continue
                for p, lam in enumerate(self.lam[eps], start=1):
                    partial = (lam - math.pi / (4.0 * eps) - (2.0 / math.pi) * self.m) / eps
                    writer.writerow([repr(eps), p, repr(lam), repr(partial)])


def _affine_fit(xs: np.ndarray, ys: np.ndarray) -> dict:
    """Least-squares fit y ~ a + b x with the intercept standard error."""
    design = np.vstack([np.ones_like(xs), xs]).T
    coef, res, *_ = np.linalg.lstsq(design, ys, rcond=None)
    dof = max(len(xs) - 2, 1)
    ss = float(res[0]) if len(res) else float(np.sum((ys - design @ coef) ** 2))
    cov = np.linalg.inv(design.T @ design) * (ss / dof)
    return {
        "intercept": float(coef[0]),
        "slope": float(coef[1]),
        "stderr_intercept": float(math.sqrt(max(cov[0, 0], 0.0))),
    }


def _shell_job(fam, curve, cfg: SweepConfig, eps: float):
    met = shell_metric(curve, eps)
    nt = cfg.nt if cfg.nt is not None else default_nt(eps)
    asm = assemble_shell(fam, met, cfg.m, cfg.ns, nt)
    pairs = lowest_eigenvalues(asm, cfg.count, seed=cfg.seed)
    return [v for v, _ in pairs]


def run_sweep(config, out_dir=None, threads: int = 1, quadratic: bool = False) -> AsymptoticsReport:
    """Shell spectra over the eps list, residuals, and affine fits per level.

    ``quadratic=True`` additionally records a diagnostic second-order fit
    per level; verdicts always use the affine model.
    """
    cfg = config if isinstance(config, SweepConfig) else SweepConfig.from_dict(config)
    fam = build_clifford(2)
    curve = curve_from_json(cfg.curve)
    mu_eff = effective_eigenvalues(assemble_effective(fam, curve, cfg.eff_ns), cfg.count).tolist()

    results: dict = {}
    failures: dict = {}

    def job(eps):
        try:
            return eps, _shell_job(fam, curve, cfg, eps), None
        except EigensolveError as exc:
            return eps, None, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, cfg.eps))
    else:
        outcomes = [job(eps) for eps in cfg.eps]
    for eps, mus, error in outcomes:
        if error is None:
            results[eps] = mus
        else:
            failures[eps] = error

    m = cfg.m
    const = m * m - (4.0 / math.pi**2) * m * m
    residuals = {
        eps: [mu - math.pi**2 / (16.0 * eps**2) - m / eps - const for mu in mus]
        for eps, mus in results.items()
    }
    fit_eps = np.array([e for e in cfg.eps if e in results])
    fits = []
    if fit_eps.size >= 3:
        for j in range(cfg.count):
            ys = np.array([residuals[e][j] for e in fit_eps])
            fit = _affine_fit(fit_eps, ys)
            if quadratic and fit_eps.size >= 4:
                design = np.vstack([np.ones_like(fit_eps), fit_eps, fit_eps**2]).T
                coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
                fit["quadratic"] = {
                    "intercept": float(coef[0]),
                    "slope": float(coef[1]),
                    "curvature": float(coef[2]),
                }
            fits.append(fit)
    report = AsymptoticsReport(
        curve_id=curve.name,
        m=m,
        eps=list(cfg.eps),
        mu_shell=results,
        residuals=residuals,
        mu_effective=mu_eff,
        fits=fits,
        partial=bool(failures),
        failures=failures,
    )
    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        report.write_csv(os.path.join(out_dir, "sweep.csv"))
        with open(os.path.join(out_dir, "sweep.json"), "w") as fh:
            json.dump(report.summary(), fh, indent=2, sort_keys=True)
    return report


def run_corollary(config, out_dir=None, threads: int = 1) -> CorollaryReport:
    """First-order expansion of the nonnegative operator eigenvalues.

    The shell spectrum comes in near-degenerate pairs; lambda_p is the
    square root of the 2p-th eigenvalue, and the eps-linear coefficient of
    lambda_p - pi/(4 eps) - (2/pi) m is fitted and compared against
    (2/pi) mu_{2p} + (2/pi) m^2 - (16/pi^3) m^2 built from the effective
    spectrum.
    """
    cfg = config if isinstance(config, SweepConfig) else SweepConfig.from_dict(config)
    if cfg.count % 2:
        raise ConfigError("corollary needs an even eigenvalue count (2p pairing)")
    base = run_sweep(cfg, out_dir=None, threads=threads)
    n_p = cfg.count // 2
    lam = {}
    pairing = {}
    for eps, mus in base.mu_shell.items():
        arr = np.array(mus)
        pairs = arr.reshape(n_p, 2)
        pairing[eps] = float((np.abs(pairs[:, 1] - pairs[:, 0]) / np.abs(arr).max()).max())
        lam[eps] = [math.sqrt(pairs[p, 1]) for p in range(n_p)]
    fit_eps = np.array([e for e in cfg.eps if e in lam])
    coeffs = []
    refs = []
    m = cfg.m
    for p in range(n_p):
        ys = np.array([lam[e][p] - math.pi / (4.0 * e) - (2.0 / math.pi) * m for e in fit_eps])
        coeffs.append(_affine_fit(fit_eps, ys)["slope"])
        mu2p = base.mu_effective[2 * p + 1]
        refs.append((2.0 / math.pi) * mu2p + (2.0 / math.pi) * m * m - (16.0 / math.pi**3) * m * m)
    report = CorollaryReport(
        curve_id=base.curve_id,
        m=m,
        eps=list(cfg.eps),
        lam=lam,
        pairing_defect=pairing,
        linear_coeffs=coeffs,
        references=refs,
        partial=base.partial,
    )
    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        report.write_csv(os.path.join(out_dir, "corollary.csv"))
        with open(os.path.join(out_dir, "corollary.json"), "w") as fh:
            json.dump(
                {
                    "curve": report.curve_id,
                    "m": report.m,
                    "linear_coeffs": report.linear_coeffs,
                    "references": report.references,
                    "pairing_defect": {repr(k): v for k, v in report.pairing_defect.items()},
                    "partial": report.partial,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
    return report


def run_checks(out=None) -> int:
    """Execute every property suite; returns 0 iff all pass."""
    results = run_all(verbose=True)
    summary = {r.name: {"passed": r.passed, "detail": r.detail} for r in results}
    if out is not None:
        with open(out, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return 0 if all(r.passed for r in results) else 1


def _load_curve_arg(arg: str) -> dict:
    text = arg.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


def _build_config(args) -> SweepConfig:
    if args.config is not None:
        with open(args.config) as fh:
            payload = json.load(fh)
        return SweepConfig.from_dict(payload)
    if args.curve is None:
        raise ConfigError("either --config or --curve is required")
    payload = {
        "curve": _load_curve_arg(args.curve),
        "m": args.m,
        "eps": [float(e) for e in args.eps.split(",")] if args.eps else None,
        "ns": args.ns,
        "nt": args.nt,
        "count": args.count,
        "seed": args.seed,
    }
    payload = {k: v for k, v in payload.items() if v is not None}
    return SweepConfig.from_dict(payload)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="diracshell", description=__doc__)
    parser.add_argument("--threads", type=int, default=1, help="parallel eps jobs (1 = reproducible)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_check = sub.add_parser("check", help="run every property suite")
    p_check.add_argument("--out", default=None, help="write a JSON summary here")

    for name in ("sweep", "corollary"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="job config JSON file")
        p.add_argument("--curve", default=None, help="curve JSON (inline or path)")
        p.add_argument("--m", type=float, default=0.0)
        p.add_argument("--eps", default=None, help="comma-separated decreasing widths")
        p.add_argument("--ns", type=int, default=192)
        p.add_argument("--nt", type=int, default=None)
        p.add_argument("--count", type=int, default=4)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")

    p_tt = sub.add_parser("transverse-table")
    p_tt.add_argument("--m", default="0,0.1,0.5,1.0", help="comma-separated masses")
    p_tt.add_argument("--bands", type=int, default=4)
    p_tt.add_argument("--out", default="transverse.csv")

    p_es = sub.add_parser("effective-spectrum")
    p_es.add_argument("--curve", required=True)
    p_es.add_argument("--ns", type=int, default=512)
    p_es.add_argument("--count", type=int, default=8)
    p_es.add_argument("--coupling", type=float, default=None,
                      help="override the derived connection coefficient (sensitivity studies)")
    p_es.add_argument("--out", default="effective.csv")

    p_dc = sub.add_parser("dump-clifford")
    p_dc.add_argument("--n", type=int, required=True)
    p_dc.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    set_blas_threads(1)

    try:
        if args.verb == "check":
            return run_checks(out=args.out)
        if args.verb == "sweep":
            cfg = _build_config(args)
            report = run_sweep(cfg, out_dir=args.out, threads=args.threads)
            for v in report.verdicts():
                print(
                    f"j={v['j']}: intercept {v['intercept']:.6f} vs effective "
                    f"{v['mu_effective']:.6f} (|diff| {v['intercept_error']:.2e}), "
                    f"slope {v['slope']:.4f}"
                )
            if report.partial:
                print("warning: report is partial;", report.failures)
            return 0
        if args.verb == "corollary":
            cfg = _build_config(args)
            report = run_corollary(cfg, out_dir=args.out, threads=args.threads)
            for p, (coef, ref) in enumerate(zip(report.linear_coeffs, report.references), start=1):
                print(f"p={p}: fitted linear coefficient {coef:.6f} vs reference {ref:.6f}")
            return 0
        if args.verb == "transverse-table":
            ms = [float(v) for v in args.m.split(",")]
            write_transverse_table(args.out, ms, range(1, args.bands + 1))
            print(f"wrote {args.out}")
            return 0
        if args.verb == "effective-spectrum":
            from .effective import DEFAULT_COUPLING

            fam = build_clifford(2)
            curve = curve_from_json(_load_curve_arg(args.curve))
            coupling = DEFAULT_COUPLING if args.coupling is None else args.coupling
            res = effective_spectrum_csv(
                args.out, fam, curve, args.ns, count=args.count, coupling=coupling
            )
            print(f"wrote {args.out}; spectral distance {res.spectral_distance:.3e}")
            return 0
        if args.verb == "dump-clifford":
            text = family_to_json(build_clifford(args.n))
            if args.out is None:
                print(text)
            else:
                with open(args.out, "w") as fh:
                    fh.write(text)
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
