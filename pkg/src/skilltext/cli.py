"""Command-line front end.  Every subcommand writes one CSV or JSON table.

Axis flags accept a single value, a comma list, or ``start:stop:step``
(stop inclusive).  ``--config FILE`` supplies ``key=value`` defaults that
explicit flags override.  Without ``--output`` the table goes to
``$SKILLTEXT_OUTDIR/<name>.<format>`` if that variable is set, else stdout.

Exit codes: 0 ok, 1 some row failed to converge (the table is still
written, see its ``status`` column), 2 bad flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import compression, density_evolution as de, hierarchy, learners, percolation
from .graph_model import ExplicitPrereqs, HierarchyConfig, MultiClassConfig, PoissonPrereqs, SingleClassConfig
from .peeling import run_trials

OUTDIR_ENV = "SKILLTEXT_OUTDIR"
OK = "ok"
NOT_CONVERGED = "not_converged"


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    sort_key: object = None  # overrides the default row ordering

    @property
    def failed(self) -> bool:
        if "status" not in self.columns:
            return False
        i = self.columns.index("status")
        return any(r[i] not in (OK, "") for r in self.rows)


def parse_axis(text: str) -> np.ndarray:
    """'3', '1,2,3' or 'start:stop:step' (inclusive) -> sorted unique floats."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if not step > 0:
                raise argparse.ArgumentTypeError("axis step must be positive")
            if stop < start:
                raise argparse.ArgumentTypeError("axis range is empty")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = np.round(start + step * np.arange(n), 10)
        else:
            vals = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad axis {text!r}: {exc}") from None
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise argparse.ArgumentTypeError(f"bad axis {text!r}")
    return np.unique(vals)


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ';', entries by ','."""
    try:
        rows = [[float(x) for x in row.split(",")] for row in str(text).split(";")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad matrix {text!r}: {exc}") from None
    if len({len(r) for r in rows}) != 1:
        raise argparse.ArgumentTypeError("matrix rows must have equal length")
    return np.array(rows)


def parse_vector(text: str) -> list:
    try:
        return [float(x) for x in str(text).split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}: {exc}") from None


def nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer")
    return v


def pos_int(text: str) -> int:
    v = nonneg_int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


# -- output ---------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def render(table: Table, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        w.writerows([[_cell(v) for v in r] for r in table.rows])
        return buf.getvalue()

    def js(v):
        if isinstance(v, (bool, np.bool_)):
            return bool(v)
        if isinstance(v, np.integer):
            return int(v)
        if isinstance(v, (float, np.floating)):
            return None if math.isnan(v) else float(v)
        return v

    objs = [json.dumps(dict(zip(table.columns, (js(v) for v in r)))) for r in table.rows]
    return "[\n" + ",\n".join(objs) + ("\n" if objs else "") + "]\n"


def emit(table: Table, args) -> None:
    text = render(table, args.format)
    path = args.output
    if path is None and os.environ.get(OUTDIR_ENV):
        path = os.path.join(os.environ[OUTDIR_ENV], f"{table.name}.{args.format}")
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# -- learner selection ----------------------------------------------------------


def _profile(args, num_classes: int = 1) -> learners.SuccessProfile:
    if getattr(args, "profile_csv", None):
        prof = learners.load_tabulated_profile(args.profile_csv)
        if prof.num_classes != num_classes:
            raise ValueError(f"tabulated profile has {prof.num_classes} classes, need {num_classes}")
        return prof
    if args.learner == "one-skill":
        return learners.one_skill_profile(num_classes)
    if args.learner == "d-skill":
        return learners.d_skill_profile(args.D, num_classes)
    if args.learner == "near-far":
        if num_classes != 2:
            raise ValueError("the near-far learner needs exactly 2 skill classes")
        return learners.near_far_profile()
    raise ValueError(f"unknown learner {args.learner!r}")


def _psi(args, num_classes: int = 1) -> learners.PsiFunction:
    if args.learner == "one-skill":
        return learners.psi_one_skill(num_classes)
    if args.learner == "d-skill":
        return learners.psi_d_skill(args.D, num_classes)
    if args.learner == "near-far":
        return learners.psi_near_far()
    raise ValueError(f"learner {args.learner!r} has no psi-function for simulation")


def _status(residual, tol) -> str:
    return OK if residual < tol else NOT_CONVERGED


def _num_skills(args, R: float) -> int:
    if args.num_skills is not None:
        return args.num_skills
    return max(1, int(round(args.total_nodes / (1.0 + R))))


# -- subcommands ----------------------------------------------------------------

DE_COLUMNS = ["c", "R", "p", "q", "zeta", "epsilon", "iterations", "residual", "status"]


def de_table(c_values, R_values, profile, max_iter=de.MAX_ITER, tol=de.TOL, name="de") -> Table:
    cc, RR = np.meshgrid(c_values, R_values, indexing="ij")
    r = de.de_solve_single(cc, RR, profile, max_iter, tol)
    arrs = [np.broadcast_to(np.asarray(x), cc.shape) for x in (r.p, r.q, r.zeta, r.epsilon, r.iterations_used,
                                                              r.residual)]
    t = Table(name, DE_COLUMNS)
    for idx in np.ndindex(cc.shape):
        p, q, z, e, it, res = (a[idx] for a in arrs)
        t.rows.append([float(cc[idx]), float(RR[idx]), float(p), float(q), float(z), float(e), int(it),
                       float(res), _status(res, tol)])
    return t


def cmd_de(args) -> Table:
    return de_table(args.c, args.R, _profile(args), args.max_iter, args.tol)


def cmd_simulate(args) -> Table:
    profile = _profile(args)
    psi = _psi(args)
    t = Table("simulate", ["c", "R", "num_skills", "trials", "zeta", "epsilon", "zeta_sim", "zeta_sim_stderr",
                           "epsilon_sim", "epsilon_sim_stderr", "rounds_mean", "residual", "status"])
    for c in args.c:
        for R in args.R:
            cfg = SingleClassConfig(_num_skills(args, R), float(R), float(c), args.seed)
            r = de.de_solve_single(c, R, profile, args.max_iter, args.tol)
            frac, err, rounds = run_trials(cfg, psi, args.trials, args.test_texts, workers=args.workers)
            se = lambda v: float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
            t.rows.append([float(c), float(R), int(cfg.num_skills), args.trials, float(r.zeta), float(r.epsilon),
                           float(frac.mean()), se(frac), float(err.mean()), se(err), float(rounds.mean()),
                           float(r.residual), _status(r.residual, args.tol)])
    return t


def percolation_table(args, c_values, R_values, name="percolation") -> Table:
    profile = _profile(args)
    cols = ["c", "R", "zeta", "mu_s", "mu_t", "p_G", "condition_value", "giant_exists"]
    if args.mode != "theory":
        cols += ["p_G_sim", "p_G_sim_stderr", "num_skills"]
    t = Table(name, cols + ["status"])
    for c in c_values:
        for R in R_values:
            r = percolation.p_giant_theory(float(c), float(R), profile)
            row = [float(c), float(R), r.zeta, r.mu_s, r.mu_t, r.p_G, r.condition_value, r.giant_exists]
            if args.mode != "theory":
                cfg = SingleClassConfig(_num_skills(args, R), float(R), float(c), args.seed)
                est = percolation.giant_component_sim(cfg, _psi(args), args.trials, args.mode, profile, args.workers)
                row += [est.mean, est.stderr, int(cfg.num_skills)]
            row.append(OK if r.iterations_used < de.MAX_ITER else NOT_CONVERGED)
            t.rows.append(row)
    return t


def cmd_percolation(args) -> Table:
    return percolation_table(args, args.c, args.R)


def region_table(c_values, R_values, profile, resolution, workers, name="region") -> Table:
    scan = percolation.region_scan(c_values, R_values, profile, resolution, workers)
    # grid rows first, then the per-c threshold R, then the overall minimum
    rank = {"grid": 0, "threshold": 1, "min_R": 2}
    t = Table(name, ["c", "R", "condition_value", "giant_exists", "kind"],
              sort_key=lambda r: (rank[r[4]],) + _sort_key(r[:2]))
    for c, R, cond, ok in scan.rows():
        t.rows.append([c, R, cond, ok, "grid"])
    for c, thr in zip(scan.c_values, scan.threshold_R):
        t.rows.append([float(c), float(thr), 1.0, not math.isnan(thr), "threshold"])
    t.rows.append([scan.c_at_min, scan.min_R, 1.0, not math.isnan(scan.min_R), "min_R"])
    return t


def cmd_region(args) -> Table:
    c_values = parse_axis(f"{args.cmin}:{args.cmax}:{args.step}")
    R_values = parse_axis(f"{args.rmin}:{args.rmax}:{args.step}")
    return region_table(c_values, R_values, _profile(args), args.resolution, args.workers)


def _prereqs(args):
    if args.prereq_coefficients is not None:
        return ExplicitPrereqs(tuple(args.prereq_coefficients))
    return PoissonPrereqs(args.prereq_mean)


def cmd_hierarchy(args) -> Table:
    profile = _profile(args)
    cols = ["c", "R", "c_f", "R_f", "zeta", "p_f", "zeta_f", "epsilon_f"]
    if args.trials:
        cols += ["zeta_f_sim", "epsilon_f_sim"]
    t = Table("hierarchy", cols + ["status"])
    for c in args.c:
        for R in args.R:
            for cf in args.cf:
                for Rf in args.Rf:
                    cfg = HierarchyConfig(SingleClassConfig(args.num_skills, float(R), float(c), args.seed),
                                          args.num_domain_skills, float(Rf), float(cf), _prereqs(args), args.seed)
                    r = hierarchy.fine_tune_solve(cfg, profile, profile, args.max_iter, args.tol)
                    row = [float(c), float(R), float(cf), float(Rf), r.zeta_basic, r.p_f, r.zeta_f, r.epsilon_f]
                    if args.trials:
                        zs, es = hierarchy.simulate_hierarchy(cfg, _psi(args), args.trials, args.test_texts,
                                                              workers=args.workers)
                        row += [zs.mean, es.mean]
                    row.append(OK if r.iterations_used < args.max_iter else NOT_CONVERGED)
                    t.rows.append(row)
    return t


def multiclass_table(cfg: MultiClassConfig, R_values, profile, max_iter, tol, extra=None,
                     name="multiclass") -> Table:
    K = cfg.means.shape[0]
    extra = extra or {}
    cols = list(extra) + ["R"]
    for sym in ("p", "q", "zeta", "epsilon"):
        cols += [f"{sym}_{k + 1}" for k in range(K)]
    t = Table(name, cols + ["epsilon", "iterations", "residual", "status"])
    for R in R_values:
        r = de.de_solve_multi(cfg, profile, max_iter, tol, R=float(R))
        t.rows.append(list(extra.values()) + [float(R)] + [float(x) for x in r.p] + [float(x) for x in r.q]
                      + [float(x) for x in r.zeta] + [float(x) for x in r.epsilon_per_class]
                      + [float(r.epsilon), int(r.iterations_used), float(r.residual), _status(r.residual, tol)])
    return t


def cmd_multiclass(args) -> Table:
    cm = args.c_matrix
    K, J = cm.shape
    alpha = args.alpha if args.alpha is not None else [1.0 / J] * J
    beta = args.beta if args.beta is not None else [1.0 / K] * K
    cfg = MultiClassConfig(args.num_skills, float(args.R[0]), tuple(alpha), tuple(beta), cm, args.seed)
    return multiclass_table(cfg, args.R, _profile(args, K), args.max_iter, args.tol)


def cmd_compress(args) -> Table:
    profile = _profile(args)
    cols = ["num_skills", "c", "R", "z", "zeta", "expected_bits", "degenerate"]
    if args.texts:
        cols += ["catalog_size", "expected_bits_catalog", "measured_bits", "measured_payload_bits",
                 "semantic_fraction", "mean_semantic_count"]
    t = Table("compress", cols)
    for n in args.num_skills:
        for c in args.c:
            for R in args.R:
                cfg = compression.CodecConfig(float(n), float(c), float(R), profile, args.z)
                b = compression.cost_breakdown(cfg)
                zeta = float(de.de_solve_single(c, R, profile).zeta)
                row = [float(n), float(c), float(R), args.z, zeta, b.expected_bits, b.degenerate]
                if args.texts:
                    rep = compression.measure_corpus(cfg, args.texts, args.seed, _psi(args))
                    row += [rep.catalog_size, rep.expected_bits_catalog, rep.mean_bits, rep.mean_payload_bits,
                            rep.semantic_fraction, rep.mean_semantic_count]
                t.rows.append(row)
    return t


# -- figure presets ---------------------------------------------------------------


FIGURE_R = parse_axis("0.05:5:0.05")


def figure_table(args) -> Table:
    n = args.number
    if n == 5:
        return de_table(parse_axis("1:5:1"), FIGURE_R, learners.one_skill_profile(), name="figure5")
    if n == 6:
        return de_table(parse_axis("1:5:1"), FIGURE_R, learners.d_skill_profile(2), name="figure6")
    if n == 7:
        ns = argparse.Namespace(learner="one-skill", D=1, profile_csv=None, mode="actual-learned",
                                num_skills=None, total_nodes=20_000, seed=args.seed, trials=args.trials,
                                workers=args.workers)
        return percolation_table(ns, parse_axis("1:5:1"), parse_axis("0.25:5:0.25"), name="figure7")
    if n == 8:
        return region_table(parse_axis("0.5:5:0.01"), parse_axis("0.5:3:0.01"), learners.one_skill_profile(),
                            1e-3, args.workers, name="figure8")
    if n == 9:
        axis = parse_axis("0.1:5:0.1")
        cfg = HierarchyConfig(SingleClassConfig(10_000, 1.0, 3.0), 10_000, 1.0, 3.0, PoissonPrereqs(3.0))
        grid = hierarchy.epsilon_f_grid(cfg, axis, axis)
        t = Table("figure9", ["R", "R_f", "epsilon_f"])
        for i, R in enumerate(axis):
            for j, Rf in enumerate(axis):
                t.rows.append([float(R), float(Rf), float(grid[i, j])])
        return t
    if n == 10:
        t = None
        for beta in (0.1, 0.3, 0.5, 0.7, 0.9):
            cfg = MultiClassConfig(10_000, 1.0, (1.0,), (beta, 1.0 - beta), ((3.0,), (7.0,)))
            part = multiclass_table(cfg, parse_axis("0.1:10:0.05"), learners.near_far_profile(), de.MAX_ITER,
                                    de.TOL, extra={"beta": beta}, name="figure10")
            if t is None:
                t = part
            else:
                t.rows += part.rows
        return t
    raise ValueError(f"no preset for figure {n}")


def cmd_figure(args) -> Table:
    return figure_table(args)


# -- parser -------------------------------------------------------------------------


def _common(p, seed=True):
    p.add_argument("--config", metavar="FILE", help="key=value defaults; explicit flags win")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", metavar="PATH", help="output file ('-' for stdout)")
    p.add_argument("--workers", type=pos_int, default=os.cpu_count() or 1)
    if seed:
        p.add_argument("--seed", type=nonneg_int, default=0)


def _learner(p, default="one-skill"):
    p.add_argument("--learner", choices=("one-skill", "d-skill", "near-far"), default=default)
    p.add_argument("--D", type=pos_int, default=2, help="capacity of the d-skill learner")
    p.add_argument("--profile-csv", metavar="PATH", help="tabulated success profile (overrides --learner)")


def _solver(p):
    p.add_argument("--max-iter", type=pos_int, default=de.MAX_ITER)
    p.add_argument("--tol", type=float, default=de.TOL)


def _size(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--num-skills", type=pos_int, default=None)
    g.add_argument("--total-nodes", type=pos_int, default=20_000, help="|S| + |D|; |S| = total / (1 + R)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skilltext", description="Skill-text graph analyses.",
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, allow_abbrev=False)

    p = add("de", "density-evolution fixed points over a (c, R) grid")
    p.add_argument("--c", type=parse_axis, required=True)
    p.add_argument("--R", type=parse_axis, required=True)
    _learner(p), _solver(p), _common(p)
    p.set_defaults(func=cmd_de)

    p = add("simulate", "SCNS Monte Carlo against density evolution")
    p.add_argument("--c", type=parse_axis, required=True)
    p.add_argument("--R", type=parse_axis, required=True)
    p.add_argument("--trials", type=pos_int, default=100)
    p.add_argument("--test-texts", type=nonneg_int, default=10_000)
    _size(p), _learner(p), _solver(p), _common(p)
    p.set_defaults(func=cmd_simulate)

    p = add("percolation", "giant component of the association graph")
    p.add_argument("--c", type=parse_axis, required=True)
    p.add_argument("--R", type=parse_axis, required=True)
    p.add_argument("--mode", choices=("theory", "iid-zeta", "actual-learned"), default="theory")
    p.add_argument("--trials", type=pos_int, default=100)
    _size(p), _learner(p), _common(p)
    p.set_defaults(func=cmd_percolation)

    p = add("region", "scan the giant-component region c^2 R zeta > 1")
    for flag, val in (("--cmin", 0.5), ("--cmax", 5.0), ("--rmin", 0.5), ("--rmax", 3.0), ("--step", 0.01)):
        p.add_argument(flag, type=float, default=val)
    p.add_argument("--resolution", type=float, default=1e-3)
    _learner(p), _common(p)
    p.set_defaults(func=cmd_region)

    p = add("hierarchy", "foundation plus fine-tuning testing error")
    p.add_argument("--c", type=parse_axis, default=parse_axis("3"))
    p.add_argument("--R", type=parse_axis, required=True)
    p.add_argument("--cf", type=parse_axis, default=parse_axis("3"))
    p.add_argument("--Rf", type=parse_axis, required=True)
    p.add_argument("--prereq-mean", type=float, default=3.0)
    p.add_argument("--prereq-coefficients", type=parse_vector, default=None,
                   help="explicit prerequisite-count distribution delta_0,delta_1,...")
    p.add_argument("--num-skills", type=pos_int, default=10_000)
    p.add_argument("--num-domain-skills", type=pos_int, default=10_000)
    p.add_argument("--trials", type=nonneg_int, default=0, help="simulation trials per cell (0: analytic only)")
    p.add_argument("--test-texts", type=pos_int, default=10_000)
    _learner(p), _solver(p), _common(p)
    p.set_defaults(func=cmd_hierarchy)

    p = add("multiclass", "coupled density evolution for several skill/text classes")
    p.add_argument("--c-matrix", type=parse_matrix, required=True,
                   help="c_{k,j}: rows are skill classes (';'), columns text classes (',')")
    p.add_argument("--alpha", type=parse_vector, default=None, help="text-class fractions")
    p.add_argument("--beta", type=parse_vector, default=None, help="skill-class fractions")
    p.add_argument("--R", type=parse_axis, required=True)
    p.add_argument("--num-skills", type=pos_int, default=10_000)
    _learner(p, default="near-far"), _solver(p), _common(p)
    p.set_defaults(func=cmd_multiclass)

    p = add("compress", "semantic-compression cost, optionally measured on a toy corpus")
    p.add_argument("--num-skills", type=parse_axis, required=True)
    p.add_argument("--c", type=parse_axis, required=True)
    p.add_argument("--R", type=parse_axis, required=True)
    p.add_argument("--z", type=float, default=compression.DEFAULT_Z, help="lossless bits per text")
    p.add_argument("--texts", type=nonneg_int, default=0, help="corpus size to measure (0: formula only)")
    _learner(p), _common(p)
    p.set_defaults(func=cmd_compress)

    p = add("figure", "regenerate the data behind a figure with its baked-in parameters")
    p.add_argument("number", type=int, choices=(5, 6, 7, 8, 9, 10))
    p.add_argument("--trials", type=pos_int, default=100, help="Monte Carlo trials (figure 7)")
    _common(p)
    p.set_defaults(func=cmd_figure)
    return parser


def _read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _config_path(argv):
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    return known.config


def _apply_config(parser, sub, argv):
    """Install config-file values as defaults of the chosen subcommand, then parse."""
    path = _config_path(argv)
    command = next((a for a in argv if a in sub.choices), None)
    if path and command:
        try:
            values = _read_config(path)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        actions = {a.dest: a for a in sub.choices[command]._actions}
        defaults = {}
        for key, value in values.items():
            if key not in actions or key in ("config", "help", "func"):
                parser.error(f"unknown config key {key!r} for {command}")
            action = actions[key]
            if action.type is not None:
                try:
                    value = action.type(value)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.error(f"config key {key!r}: {exc}")
            if action.choices is not None and value not in action.choices:
                parser.error(f"config key {key!r}: invalid choice {value!r}")
            defaults[key] = value
            action.required = False
        sub.choices[command].set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    args = _apply_config(parser, sub, argv)
    try:
        table = args.func(args)
    except ValueError as exc:
        parser.error(str(exc))
    table.rows.sort(key=table.sort_key or _sort_key)
    emit(table, args)
    return 1 if table.failed else 0


def _sort_key(row):
    return tuple((0, v) if isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
                 else (1, str(v)) for v in row)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
