"""Property suites behind the ``check`` verb.

Each suite is a function returning a CheckResult; ``run_all`` executes the
registry in order and reports one pass/fail line per suite.  The suites
mirror the package's defining identities: exact anticommutators, secular
root residuals, quadrature normalization, gauge equivalence of the
effective operator, sandwich ordering of the bracketing forms, and the
dense-vs-iterative eigensolver cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import clifford, effective, eigsolve, geometry, shell, transverse

__all__ = ["CheckResult", "run_all", "REGISTRY"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def check_clifford_relations() -> CheckResult:
    worst = 0.0
    for n in range(1, 9):
        fam = clifford.build_clifford(n)
        eye = np.eye(fam.N)
        for j in range(n + 1):
            for k in range(n + 1):
                anti = fam.alphas[j] @ fam.alphas[k] + fam.alphas[k] @ fam.alphas[j]
                worst = max(worst, np.abs(anti - 2.0 * (j == k) * eye).max())
    return _result("clifford-relations", worst == 0.0, f"max anticommutator deviation {worst:g}")


def check_symbol_relations(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(1, 9):
        fam = clifford.build_clifford(n)
        eye = np.eye(fam.N)
        half = np.eye(fam.N // 2)
        for _ in range(100):
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            sx, sy = clifford.gamma(fam, x), clifford.gamma(fam, y)
            worst = max(worst, np.abs(sx.gamma @ sy.gamma + sy.gamma @ sx.gamma - 2 * (x @ y) * eye).max())
            worst = max(
                worst,
                np.abs(
                    sx.beta.conj().T @ sy.beta + sy.beta.conj().T @ sx.beta - 2 * (x @ y) * half
                ).max(),
            )
    return _result("symbol-relations", worst <= 1e-12, f"max symbol residual {worst:g}")


def check_secular_roots() -> CheckResult:
    worst = 0.0
    for m in np.linspace(0.0, 2.0, 9):
        for p in range(1, 7):
            k = transverse.solve_k(float(m), p)
            lo, hi = transverse.bracket(p)
            if not lo <= k <= hi:
                return _result("secular-roots", False, f"root escaped bracket at m={m}, p={p}")
            worst = max(worst, abs(transverse.secular(k, float(m))))
    return _result("secular-roots", worst <= 1e-13, f"max secular residual {worst:g}")


def check_series_order() -> CheckResult:
    errs = {m: abs(transverse.k1_series(m) - transverse.solve_k(m, 1)) for m in (0.01, 0.02, 0.04, 0.08)}
    ratios = [errs[0.02] / errs[0.01], errs[0.04] / errs[0.02], errs[0.08] / errs[0.04]]
    ok = all(6.5 <= r <= 9.5 for r in ratios)
    return _result("series-order", ok, "doubling ratios " + ", ".join(f"{r:.2f}" for r in ratios))


def check_mode_normalization() -> CheckResult:
    fam = clifford.build_clifford(2)
    x = np.array([0.6, 0.8])
    nodes, weights = transverse.gauss_legendre()
    worst_norm = 0.0
    worst_bc = 0.0
    for m in (0.0, 0.05, 0.3, 1.0):
        for p in (1, 2, 3):
            for sign in (+1, -1):
                md = transverse.mode(fam, x, m, p, 1, sign)
                vals = md.profile(nodes)
                worst_norm = max(worst_norm, abs(weights @ np.sum(np.abs(vals) ** 2, axis=1) - 1.0))
                worst_bc = max(worst_bc, transverse.boundary_residual(fam, x, md.profile))
    ok = worst_norm <= 1e-10 and worst_bc <= 1e-10
    return _result("mode-normalization", ok, f"norm defect {worst_norm:g}, bc residual {worst_bc:g}")


def check_form_identity(seed: int = 0) -> CheckResult:
    fam = clifford.build_clifford(2)
    x = np.array([0.6, 0.8])
    rng = np.random.default_rng(seed)
    m = 0.4
    mods = [transverse.mode(fam, x, m, p, 1, sgn) for p in (1, 2, 3) for sgn in (+1, -1)]
    worst = 0.0
    for _ in range(20):
        cs = rng.standard_normal(len(mods)) + 1j * rng.standard_normal(len(mods))
        f = lambda t: sum(c * md.profile(t) for c, md in zip(cs, mods))
        fp = lambda t: sum(c * md.derivative(t) for c, md in zip(cs, mods))
        lhs, rhs = transverse.quadratic_form_identity_check(fam, x, m, f, fp)
        worst = max(worst, abs(lhs - rhs) / (1.0 + lhs))
    return _result("form-identity", worst <= 1e-8, f"worst relative mismatch {worst:g}")


def check_mode_perturbation() -> CheckResult:
    fam = clifford.build_clifford(2)
    x = np.array([0.0, 1.0])
    rep = transverse.mode_perturbation_check(fam, x, [0.01, 0.02, 0.04])
    ratio = rep["distances"][1] / rep["distances"][0]
    ok = 0.95 <= rep["order"] <= 1.2 and 1.8 <= ratio <= 2.2
    return _result("mode-perturbation", ok, f"order {rep['order']:.3f}, doubling ratio {ratio:.3f}")


def discretized_transverse_energies(fam, x, m: float, count: int, n_elem: int = 64) -> np.ndarray:
    """Lowest eigenvalues of the squared transverse operator on (-1, 1).

    Galerkin P2 discretization of ||f'||^2 + m^2||f||^2 + m(|f(1)|^2+|f(-1)|^2)
    over spinors with the boundary constraint eliminated against the
    +-1 eigenspaces of -i a_{n+1} Gamma(x).
    """
    import scipy.sparse as sp

    h = 2.0 / n_elem
    n_nodes = 2 * n_elem + 1
    xt = np.array([0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)])
    wt = np.array([5.0, 8.0, 5.0]) / 18.0
    val = np.vstack([(1 - xt) * (1 - 2 * xt), 4 * xt * (1 - xt), xt * (2 * xt - 1)])
    der = np.vstack([4 * xt - 3, 4 - 8 * xt, 4 * xt - 1]) / h
    k_loc = np.einsum("q,aq,bq->ab", wt * h, der, der)
    m_loc = np.einsum("q,aq,bq->ab", wt * h, val, val)
    rows, cols, kv, mv = [], [], [], []
    for e in range(n_elem):
        idx = [2 * e, 2 * e + 1, 2 * e + 2]
        for a in range(3):
            for b in range(3):
                rows.append(idx[a])
                cols.append(idx[b])
                kv.append(k_loc[a, b])
                mv.append(m_loc[a, b])
    k1d = sp.coo_matrix((kv, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    m1d = sp.coo_matrix((mv, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()

    N = fam.N
    a_full = sp.kron(k1d + m * m * m1d, sp.eye(N), format="lil").astype(complex)
    b_full = sp.kron(m1d, sp.eye(N), format="csr").astype(complex)
    for node, sign in ((n_nodes - 1, +1), (0, -1)):
        for c in range(N):
            a_full[node * N + c, node * N + c] += m
    a_full = a_full.tocsr()

    bmat = -1.0j * fam.alpha_last @ clifford.gamma(fam, x).gamma
    vals_b, vecs_b = np.linalg.eigh(bmat)
    basis = {s: vecs_b[:, np.abs(vals_b - s) < 1e-10] for s in (+1, -1)}
    half = N // 2
    dim_full = n_nodes * N
    reduced = (n_nodes - 2) * N + 2 * half
    rows, cols, vals2 = [], [], []
    red = 0
    for j in range(half):
        for c in range(N):
            rows.append(0 * N + c)
            cols.append(red)
            vals2.append(basis[-1][c, j])
        red += 1
    for node in range(1, n_nodes - 1):
        for c in range(N):
            rows.append(node * N + c)
            cols.append(red)
            vals2.append(1.0)
            red += 1
    for j in range(half):
        for c in range(N):
            rows.append((n_nodes - 1) * N + c)
            cols.append(red)
            vals2.append(basis[+1][c, j])
        red += 1
    z = sp.coo_matrix((vals2, (rows, cols)), shape=(dim_full, reduced)).tocsr()
    a_red = (z.conj().T @ a_full @ z).toarray()
    b_red = (z.conj().T @ b_full @ z).toarray()
    res = eigsolve.dense_hermitian_eig(a_red, b_red, check=False)
    return res.eigenvalues[:count]


def check_intertwining(seed: int = 0, pairs: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_unitary = 0.0
    worst_spec = 0.0
    for n in (2, 3):
        fam = clifford.build_clifford(n)
        for _ in range(pairs):
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            y = rng.standard_normal(n)
            y /= np.linalg.norm(y)
            u = clifford.theta(fam, x, y)
            worst_unitary = max(worst_unitary, np.abs(u.conj().T @ u - np.eye(fam.N)).max())
            ex = discretized_transverse_energies(fam, x, 0.3, 6)
            ey = discretized_transverse_energies(fam, y, 0.3, 6)
            worst_spec = max(worst_spec, np.abs(ex - ey).max())
    ok = worst_unitary <= 1e-12 and worst_spec <= 1e-10
    return _result("intertwining", ok, f"unitarity {worst_unitary:g}, spectra {worst_spec:g}")


def check_total_curvature() -> CheckResult:
    curves = [
        geometry.make_curve("circle", r=1.0),
        geometry.make_curve("ellipse", a=2.0, b=1.0),
        geometry.make_curve("fourier", coeffs=[(1, 1.0, 0.0), (-2, 0.15, 0.0)]),
    ]
    worst = max(abs(c.total_curvature() + 2.0 * math.pi) for c in curves)
    return _result("total-curvature", worst <= 1e-8, f"worst closure defect {worst:g}")


def check_metric_identity(seed: int = 0, samples: int = 50) -> CheckResult:
    rng = np.random.default_rng(seed)
    curves = [geometry.make_curve("circle", r=1.0), geometry.make_curve("ellipse", a=2.0, b=1.0)]
    worst = 0.0
    for _ in range(samples):
        crv = curves[rng.integers(len(curves))]
        eps = float(rng.uniform(0.02, min(0.4, 0.8 / crv.kappa_max)))
        met = geometry.shell_metric(crv, eps)
        s0 = float(rng.uniform(0, crv.length))
        t0 = float(rng.uniform(-1, 1))
        h = 1e-5
        jac = np.zeros((2, 2))
        jac[:, 0] = (met.tubular_map(np.array([s0 + h]), np.array([t0]))[0]
                     - met.tubular_map(np.array([s0 - h]), np.array([t0]))[0]) / (2 * h)
        jac[:, 1] = (met.tubular_map(np.array([s0]), np.array([t0 + h]))[0]
                     - met.tubular_map(np.array([s0]), np.array([t0 - h]))[0]) / (2 * h)
        det_fd = abs(np.linalg.det(jac))
        det_formula = math.sqrt(float(met.det_g(s0, t0)))
        worst = max(worst, abs(det_fd - det_formula) / det_formula)
    return _result("metric-identity", worst <= 1e-9, f"worst relative error {worst:g}")


def check_metric_sandwich(seed: int = 0) -> CheckResult:
    """Two-sided comparability of the shell metric with the flat one.

    Uses c = 3*max|kappa| and samples eps up to a quarter of the
    injectivity guard, where that concrete constant is provably valid.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for crv in (geometry.make_curve("circle", r=1.0), geometry.make_curve("ellipse", a=2.0, b=1.0)):
        c = 3.0 * crv.kappa_max
        for _ in range(200):
            eps = float(rng.uniform(0.001, 0.225 / crv.kappa_max))
            met = geometry.shell_metric(crv, eps)
            s0 = float(rng.uniform(0, crv.length))
            t0 = float(rng.uniform(-1, 1))
            ratio = 1.0 / float(met.g11(s0, t0))
            if not (1.0 - c * eps <= ratio <= 1.0 + c * eps):
                worst = max(worst, abs(ratio - 1.0) - c * eps)
    return _result("metric-sandwich", worst == 0.0, f"worst excess {worst:g}")


def check_gauge_equivalence(coupling: float = effective.DEFAULT_COUPLING, n_s: int = 256) -> CheckResult:
    fam = clifford.build_clifford(2)
    curve = geometry.make_curve("ellipse", a=2.0, b=1.0)
    res = effective.gauge_transform_check(fam, curve, n_s, coupling=coupling)
    ok = (
        res.spectral_distance <= 1e-5
        and res.phase_residual <= 1e-8
        and res.similarity_residual <= 1e-12
    )
    detail = (
        f"spectral {res.spectral_distance:g}, phase {res.phase_residual:g}, "
        f"similarity {res.similarity_residual:g}"
    )
    return _result("gauge-equivalence", ok, detail)


def check_magnetic_circle() -> CheckResult:
    curve = geometry.make_curve("circle", r=1.0)
    mag = effective.assemble_magnetic(curve, 512)
    mu = effective.effective_eigenvalues(mag, 5)
    ana = effective.magnetic_circle_spectrum(1.0, 5)
    worst = float(np.abs(mu - ana).max())
    return _result("magnetic-circle", worst <= 1e-6, f"max deviation {worst:g}")


def check_effective_degeneracy() -> CheckResult:
    fam = clifford.build_clifford(2)
    curve = geometry.make_curve("ellipse", a=2.0, b=1.0)
    mu = effective.effective_eigenvalues(effective.assemble_effective(fam, curve, 256), 8)
    pairs = mu.reshape(4, 2)
    worst = float(np.abs(pairs[:, 1] - pairs[:, 0]).max())
    scale = 1e-8 * (1.0 + float(np.abs(mu).max()))
    return _result("effective-degeneracy", worst <= scale, f"worst pair split {worst:g}")


def check_effective_convergence() -> CheckResult:
    fam = clifford.build_clifford(2)
    curve = geometry.make_curve("ellipse", a=2.0, b=1.0)
    ref = effective.effective_eigenvalues(effective.assemble_effective(fam, curve, 1024), 5)
    errs = []
    for n_s in (64, 128, 256):
        mu = effective.effective_eigenvalues(effective.assemble_effective(fam, curve, n_s, scheme="link"), 5)
        errs.append(float(np.abs(mu - ref).max()))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    ok = all(o >= 1.9 for o in orders)
    return _result("effective-convergence", ok, "orders " + ", ".join(f"{o:.2f}" for o in orders))


def check_flat_strip() -> CheckResult:
    fam = clifford.build_clifford(2)
    length, m, eps = 2.0 * math.pi, 0.3, 0.2
    met = geometry.shell_metric(geometry.flat_strip(length), eps)
    ref = shell.flat_strip_levels(length, m, eps, 6)
    asm = shell.assemble_shell(fam, met, m, 48, 12)
    vals = np.array([v for v, _ in shell.lowest_eigenvalues(asm, 6)])
    worst = float((np.abs(vals - ref) / ref).max())
    return _result("flat-strip", worst <= 5e-4, f"worst relative error {worst:g}")


def check_shell_sandwich() -> CheckResult:
    fam = clifford.build_clifford(2)
    curve = geometry.make_curve("circle", r=1.0)
    met = geometry.shell_metric(curve, 0.1)
    c = 3.0 * (1.0 + curve.kappa_max)
    asm = shell.assemble_shell(fam, met, 0.0, 48, 13)
    sand = shell.assemble_sandwich(fam, met, 0.0, c, 48, 13)
    mu = shell.lowest_eigenvalues(asm, 1)[0][0]
    mu_minus = shell.lowest_eigenvalues(sand, 1, which="minus")[0][0]
    mu_plus = shell.lowest_eigenvalues(sand, 1, which="plus")[0][0]
    tol = 10.0 * max(asm.h_s, asm.h_t) ** 2 * abs(mu)
    ok = mu_minus - tol <= mu <= mu_plus + tol
    return _result("shell-sandwich", ok, f"{mu_minus:.4f} <= {mu:.4f} <= {mu_plus:.4f} (tol {tol:.3f})")


def check_eigensolver_agreement() -> CheckResult:
    fam = clifford.build_clifford(2)
    met = geometry.shell_metric(geometry.make_curve("circle", r=1.0), 0.1)
    asm = shell.assemble_shell(fam, met, 0.3, 32, 8)
    dense = eigsolve.dense_hermitian_eig(asm.pencil.a.toarray(), asm.pencil.b.toarray(), check=False)
    iterative = eigsolve.lobpcg_smallest(asm.pencil, 6, tol=1e-9, dense_cutoff=0, seed=3)
    worst = float(np.abs(iterative.eigenvalues - dense.eigenvalues[:6]).max())
    ok = iterative.converged and worst <= 1e-8
    return _result("eigensolver-agreement", ok, f"max difference {worst:g} in {iterative.iterations} iters")


REGISTRY: list[Callable[[], CheckResult]] = [
    check_clifford_relations,
    check_symbol_relations,
    check_secular_roots,
    check_series_order,
    check_mode_normalization,
    check_form_identity,
    check_mode_perturbation,
    check_intertwining,
    check_total_curvature,
    check_metric_identity,
    check_metric_sandwich,
    check_gauge_equivalence,
    check_magnetic_circle,
    check_effective_degeneracy,
    check_effective_convergence,
    check_flat_strip,
    check_shell_sandwich,
    check_eigensolver_agreement,
]


def run_all(verbose: bool = True) -> list[CheckResult]:
    results = []
    for fn in REGISTRY:
        res = fn()
        results.append(res)
        if verbose:
            mark = "PASS" if res.passed else "FAIL"
            print(f"[{mark}] {res.name}: {res.detail}")
    return results
