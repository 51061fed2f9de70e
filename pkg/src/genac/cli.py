"""``genac`` command-line interface.

Subcommands: ``train``, ``sweep``, ``eval``, ``verify-tabular``, ``bounds``,
``ensemble-mc`` and ``list-envs``.  Run directories default to
``$GENAC_OUTPUT/<name>`` (``runs/`` when the variable is unset).

Training configuration is resolved in three layers: per-algorithm defaults,
then a JSON config file (``--config``), then command-line flags.  A config
file has the same shape as the ``config`` entry of a run's ``metadata.json``,
and a metadata file itself is accepted, so any run can be replayed exactly::

    {"algo": "tac", "env": "pointmass2d", "index": 2.0, "shannon_limit": false,
     "ensemble_size": 6, "indices": null, "profile": "default",
     "trainer": {"alpha": 0.8, "total_steps": 30000, ...}}

``trainer`` may list any subset of trainer fields.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import BoundParams, ensemble_dominance_mc, lower_bound, zeta_renyi, zeta_tsallis
from .ensemble import EnsembleAgent, EnsembleConfig, test_action, train_ensemble
from .entropy import EntropyMeasure
from .envs import REGISTRY, list_envs, make_env
from .learner import (
    ALGO_DEFAULTS,
    FAST_HIDDEN,
    INDEX_GRID,
    AgentState,
    TrainerConfig,
    TrainingDiverged,
    run_episodes,
    train,
)
from .nnet import AdamState, load_mlp
from .policy import SquashedGaussianPolicy
from .tabular import bellman_backup, corrupted_backup, run_property_suite

OUTPUT_ENV = "GENAC_OUTPUT"
METADATA_FORMAT = "genac-run/1"
PROFILES = {
    "default": {},
    "fast": {"hidden": list(FAST_HIDDEN), "batch_size": 128},
}
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_FAILED = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    algo: str = "sac"
    env: str = "pointmass2d"
    index: float | None = None
    shannon_limit: bool = False
    ensemble_size: int = 6
    indices: list | None = None
    profile: str = "default"
    trainer: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        if "config" in d and "format" in d:  # a run's metadata.json
            d = d["config"]
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @property
    def is_ensemble(self):
        return self.algo.startswith("eac-")

    def validate(self):
        if self.algo not in ALGO_DEFAULTS:
            raise ConfigError(f"unknown algorithm {self.algo!r}; choose from {sorted(ALGO_DEFAULTS)}")
        if self.env.lower() not in REGISTRY:
            raise ConfigError(f"unknown environment {self.env!r}; known: {sorted(REGISTRY)}")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        kind = ALGO_DEFAULTS[self.algo][0]
        if self.index is not None:
            if kind == "shannon":
                if self.index != 1.0:
                    raise ConfigError("sac takes no entropic index")
            elif self.index == 1.0:
                if not (self.shannon_limit and kind == "tsallis"):
                    raise ConfigError(
                        f"{self.algo} with index 1 is the Shannon limit; pass --shannon-limit "
                        "(tsallis only) or use sac")
            elif not self.index > 1.0:
                raise ConfigError(f"{self.algo} needs an entropic index > 1, got {self.index}")
        if self.is_ensemble and self.ensemble_size < 1:
            raise ConfigError("ensemble size must be >= 1")
        bad = set(self.trainer) - {f.name for f in fields(TrainerConfig)}
        if bad:
            raise ConfigError(f"unknown trainer fields: {sorted(bad)}")

    def trainer_config(self) -> TrainerConfig:
        self.validate()
        overrides = dict(PROFILES[self.profile])
        overrides.update(self.trainer)
        kind, alpha = ALGO_DEFAULTS[self.algo]
        index = self.index
        if "entropy" in overrides:
            ent = overrides.pop("entropy")
            if isinstance(ent, dict):
                ent = EntropyMeasure.make(ent["kind"], ent.get("index", 1.0))
        elif kind == "shannon" or index == 1.0:
            ent = EntropyMeasure.shannon()
        else:
            ent = EntropyMeasure(kind, 2.0 if index is None else float(index))
        overrides.setdefault("alpha", alpha)
        try:
            return TrainerConfig(entropy=ent, **overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def ensemble_config(self) -> EnsembleConfig:
        cfg = self.trainer_config()
        if cfg.entropy.kind == "shannon":
            raise ConfigError("ensemble members need Tsallis or Renyi entropy")
        if self.indices:
            indices = tuple(self.indices)
        elif self.index is not None:
            indices = (float(self.index),) * self.ensemble_size
        else:
            indices = ()
        try:
            return EnsembleConfig(trainer=cfg, size=self.ensemble_size, indices=indices)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def resolved(self):
        """Config with every trainer field spelled out (what metadata stores)."""
        tc = self.ensemble_config().trainer if self.is_ensemble else self.trainer_config()
        d = asdict(self)
        d["trainer"] = tc.to_dict()
        if self.is_ensemble:
            d["indices"] = list(self.ensemble_config().indices)
        return d


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_grid(text):
    """``a:b:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        try:
            a, b, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {text!r}; expected start:stop:step") from None
        if step <= 0 or b < a:
            raise ConfigError(f"bad grid {text!r}")
        n = int(round((b - a) / step)) + 1
        return [round(a + i * step, 12) for i in range(n)]
    return _parse_floats(text)


_TRAINER_FLAGS = {
    "alpha": "alpha", "seed": "seed", "steps": "total_steps", "eval_interval": "eval_interval",
    "eval_episodes": "eval_episodes", "warmup": "warmup_steps", "batch_size": "batch_size",
    "k_samples": "k_samples", "reward_scale": "reward_scale", "gamma": "gamma", "tau": "tau",
    "gradient_steps": "gradient_steps",
}


def build_run_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    rc = RunConfig.from_dict(base)
    rc.trainer = dict(rc.trainer)
    file_algo = rc.algo if base else None
    for name in ("algo", "env", "profile", "ensemble_size"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(rc, name, v)
    for flag in ("q", "eta", "index"):
        v = getattr(args, flag, None)
        if v is not None:
            rc.index = v
    if getattr(args, "shannon_limit", False):
        rc.shannon_limit = True
    if getattr(args, "indices", None):
        rc.indices = _parse_floats(args.indices)
    if file_algo is not None and rc.algo != file_algo:
        # switching algorithm invalidates an inherited entropy choice
        rc.trainer.pop("entropy", None)
    if (getattr(args, "q", None) is not None or getattr(args, "eta", None) is not None
            or getattr(args, "index", None) is not None or getattr(args, "shannon_limit", False)):
        rc.trainer.pop("entropy", None)
    if getattr(args, "profile", None) is not None:
        for k in PROFILES["fast"]:
            rc.trainer.pop(k, None)
    if getattr(args, "hidden", None):
        rc.trainer["hidden"] = [int(x) for x in _parse_floats(args.hidden)]
    if getattr(args, "lr", None) is not None:
        rc.trainer.update(lr_v=args.lr, lr_q=args.lr, lr_pi=args.lr)
    for flag, key in _TRAINER_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            rc.trainer[key] = v
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        rc.trainer[k.strip()] = _parse_value(v)
    kind = ALGO_DEFAULTS.get(rc.algo, ("",))[0]
    if getattr(args, "q", None) is not None and kind != "tsallis":
        raise ConfigError(f"--q applies to tac/eac-tac, not {rc.algo}")
    if getattr(args, "eta", None) is not None and kind != "renyi":
        raise ConfigError(f"--eta applies to rac/eac-rac, not {rc.algo}")
    rc.validate()
    return rc


def output_root():
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


def default_run_name(rc: RunConfig):
    seed = rc.trainer.get("seed", 0)
    idx = "" if rc.index is None else f"-i{rc.index:g}"
    return f"{rc.algo}-{rc.env}{idx}-s{seed}"


def git_revision():
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], cwd=Path(__file__).resolve().parent,
                             capture_output=True, text=True, timeout=10)
        return out.stdout.strip() if out.returncode == 0 else "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


# ---------------------------------------------------------------------------
# training

def run_training(rc: RunConfig, out_dir, progress=None):
    """Train per ``rc``; writes ``curve.csv``, ``metadata.json`` and ``snapshots/``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = rc.resolved()
    env = make_env(rc.env)
    snap = out / "snapshots"
    if rc.is_ensemble:
        ecfg = rc.ensemble_config()
        result = train_ensemble(env, ecfg, snapshot_dir=out / "diverged", progress=progress)
        seed = ecfg.trainer.seed
    else:
        cfg = rc.trainer_config()
        result = train(env, cfg, snapshot_dir=out / "diverged", progress=progress)
        seed = cfg.seed
    result.curve.write_csv(out / "curve.csv")
    result.agent.save(snap)
    finals = result.curve.column("eval_return_mean")
    meta = {
        "format": METADATA_FORMAT,
        "config": resolved,
        "seed": seed,
        "git_revision": git_revision(),
        "package_version": __version__,
        "renyi_skipped_states": result.renyi_skipped,
        "final_eval_return": float(finals[-1]) if len(finals) else None,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def _print_row(row):
    print(f"step {int(row['step'])}: eval return {row['eval_return_mean']:.3f} "
          f"(+/- {row['eval_return_std']:.3f})", flush=True)


def cmd_train(args):
    rc = build_run_config(args)
    out = Path(args.out) if args.out else output_root() / default_run_name(rc)
    try:
        meta = run_training(rc, out, progress=None if args.quiet else _print_row)
    except TrainingDiverged as exc:
        print(f"error: training diverged: {exc}\ndiagnostic snapshot: {exc.snapshot_dir}",
              file=sys.stderr)
        return EXIT_DIVERGED
    print(f"wrote {out / 'curve.csv'} (final eval return {meta['final_eval_return']})")
    return 0


def _sweep_cell(job):
    rc_dict, out = job
    rc = RunConfig.from_dict(rc_dict)
    try:
        meta = run_training(rc, out)
        return out, meta["final_eval_return"], None
    except TrainingDiverged as exc:
        return out, None, str(exc)


def cmd_sweep(args):
    base = build_run_config(args)
    grid = _parse_floats(args.grid) if args.grid is not None else list(INDEX_GRID)
    seeds = [int(s) for s in _parse_floats(args.seeds)]
    if not grid:
        raise ConfigError("index grid is empty")
    if not seeds:
        raise ConfigError("seed list is empty")
    if ALGO_DEFAULTS[base.algo][0] == "shannon":
        raise ConfigError("sweep varies the entropic index; sac has none")
    root = Path(args.out) if args.out else output_root() / f"sweep-{base.algo}-{base.env}"
    jobs, cells = [], []
    for index in grid:
        for seed in seeds:
            rc = RunConfig.from_dict(asdict(base))
            rc.index = index
            rc.indices = None
            rc.trainer = dict(base.trainer, seed=seed)
            rc.trainer.pop("entropy", None)
            rc.validate()
            out = root / f"index{index:g}-seed{seed}"
            jobs.append((asdict(rc), str(out)))
            cells.append((index, seed))
    workers = args.workers or min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        results = [_sweep_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    failed = [(cell, err) for cell, (_, _, err) in zip(cells, results) if err]
    rows = []
    for index in grid:
        finals = [r[1] for cell, r in zip(cells, results) if cell[0] == index and r[1] is not None]
        rows.append({"index": index, "n_seeds": len(finals),
                     "final_return_mean": float(np.mean(finals)) if finals else float("nan"),
                     "final_return_std": float(np.std(finals)) if finals else float("nan")})
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "n_seeds", "final_return_mean", "final_return_std"])
        for r in rows:
            w.writerow([repr(float(r["index"])), r["n_seeds"], repr(r["final_return_mean"]),
                        repr(r["final_return_std"])])
    print(f"wrote {len(jobs)} runs and {root / 'summary.csv'}")
    for cell, err in failed:
        print(f"error: cell index={cell[0]:g} seed={cell[1]} diverged: {err}", file=sys.stderr)
    return EXIT_DIVERGED if failed else 0


# ---------------------------------------------------------------------------
# evaluation of a finished run

def load_actor(run_dir):
    """Deterministic action map of the run's final snapshot."""
    run = Path(run_dir)
    meta = json.loads((run / "metadata.json").read_text())
    rc = RunConfig.from_dict(meta)
    snap = run / "snapshots"
    if not rc.is_ensemble:
        pol = SquashedGaussianPolicy.load(snap / "policy.json")
        return rc, pol.mean_action
    n = len(meta["config"]["indices"])
    members = []
    for i in range(n):
        pol = SquashedGaussianPolicy.load(snap / f"member{i}_policy.json")
        members.append(AgentState(pol, None, None, None, None, None, None))
    q_psi = load_mlp(snap / "q_psi.json")
    ens = EnsembleAgent(members, [], q_psi, q_psi, AdamState.for_params(q_psi.params))
    return rc, (lambda s: test_action(ens, s))


def cmd_eval(args):
    try:
        rc, act = load_actor(args.run)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load run {args.run}: {exc}") from None
    env = make_env(args.env or rc.env)
    returns = run_episodes(env, act, args.episodes, np.random.default_rng(args.seed))
    print("episodes,return_mean,return_std")
    print(f"{args.episodes},{float(returns.mean())!r},{float(returns.std())!r}")
    return 0


# ---------------------------------------------------------------------------
# tabular verification, bounds, Monte-Carlo

def cmd_verify_tabular(args):
    backup = corrupted_backup if args.inject_fault else bellman_backup
    results = run_property_suite(seeds=range(args.seeds), max_states=args.max_states,
                                 max_actions=args.max_actions, alpha=args.alpha, backup=backup)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = "" if r.passed else f": {r.detail}"
        print(f"{status} {r.name} ({r.checked} checks){extra}")
        ok &= r.passed
    return 0 if ok else EXIT_FAILED


def _bound_params(args, **kw):
    try:
        return BoundParams(xi_lo=args.xi_lo, xi_hi=args.xi_hi, zeta_lo=args.zeta_lo,
                           zeta_hi=args.zeta_hi, sigma_star=args.sigma_star, alpha=args.alpha,
                           gamma=args.gamma, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def bounds_tables(args):
    q_grid = _parse_grid(args.q_grid)
    eta_grid = _parse_grid(args.eta_grid)
    if any(q < 1 for q in q_grid) or any(e < 1 for e in eta_grid):
        raise ConfigError("entropic indices must be >= 1")
    tsallis = []
    for q in q_grid:
        p = _bound_params(args, index=q)
        z = zeta_tsallis(p)
        tsallis.append((q, z, lower_bound(p, args.q_standard, zeta_value=z)))
    renyi = []
    for eta in eta_grid:
        p = _bound_params(args, index=eta)
        z = zeta_renyi(p)
        renyi.append((eta, z, lower_bound(p, args.q_standard, kind="renyi", zeta_value=z)))
    return tsallis, renyi


def _write_table(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])


def cmd_bounds(args):
    tsallis, renyi = bounds_tables(args)
    t_head, r_head = ["q", "zeta_tsallis", "lower_bound"], ["eta", "zeta_renyi", "lower_bound"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "zeta_tsallis.csv", "w", newline="") as fh:
            _write_table(fh, t_head, tsallis)
        with open(out / "zeta_renyi.csv", "w", newline="") as fh:
            _write_table(fh, r_head, renyi)
        print(f"wrote {out / 'zeta_tsallis.csv'} and {out / 'zeta_renyi.csv'}")
    else:
        _write_table(sys.stdout, t_head, tsallis)
        sys.stdout.write("\n")
        _write_table(sys.stdout, r_head, renyi)
    return 0


def cmd_ensemble_mc(args):
    Ls = [int(x) for x in _parse_floats(args.L)]
    if args.trials < 10_000:
        raise ConfigError("need at least 1e4 trials")
    if args.sigma_star <= 0 or args.xi <= 0 or args.zeta <= 0:
        raise ConfigError("sigma_star, xi and zeta must be positive")
    rows = ensemble_dominance_mc(Ls, args.sigma_star, (args.zeta, args.xi, args.abar),
                                 trials=args.trials, rng=np.random.default_rng(args.seed))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["L", "expected_Q", "gap", "std_err"])
        for r in rows:
            w.writerow([r["L"], repr(r["expected_Q"]), repr(r["gap"]), repr(r["std_err"])])
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_list_envs(args):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "state_dim", "action_dim", "max_episode_steps", "reward_bound",
                "description"])
    for spec in list_envs():
        w.writerow([spec.name, spec.state_dim, spec.action_dim, spec.max_episode_steps,
                    f"{spec.reward_bound:.6g}", spec.description])
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_train_flags(p):
    p.add_argument("--config", help="JSON config or metadata.json of an earlier run")
    p.add_argument("--algo", choices=sorted(ALGO_DEFAULTS))
    p.add_argument("--env", help="environment name (see list-envs)")
    p.add_argument("--profile", choices=sorted(PROFILES),
                   help="network/batch preset: default (128x128, batch 256) or fast (64x64, 128)")
    p.add_argument("--q", type=float, help="Tsallis entropic index")
    p.add_argument("--eta", type=float, help="Renyi entropic index")
    p.add_argument("--index", type=float, help="entropic index for either family")
    p.add_argument("--shannon-limit", action="store_true",
                   help="allow tac with q = 1 (trains with Shannon entropy)")
    p.add_argument("--ensemble-size", type=int, help="members for eac-* (default 6)")
    p.add_argument("--indices", help="comma-separated per-member indices for eac-*")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="total environment steps")
    p.add_argument("--eval-interval", type=int)
    p.add_argument("--eval-episodes", type=int)
    p.add_argument("--warmup", type=int, help="uniform-random steps before learning")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--k-samples", type=int)
    p.add_argument("--reward-scale", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--gradient-steps", type=int)
    p.add_argument("--lr", type=float, help="learning rate for all three networks")
    p.add_argument("--hidden", help="hidden layer sizes, e.g. 64,64")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any trainer field (JSON value)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--quiet", action="store_true", help="no per-evaluation progress lines")


def _add_bound_flags(p):
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--sigma-star", type=float, default=1.0)
    p.add_argument("--xi-lo", type=float, default=1.0)
    p.add_argument("--xi-hi", type=float, default=1.0)
    p.add_argument("--zeta-lo", type=float, default=1.0)
    p.add_argument("--zeta-hi", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.99)


def build_parser():
    parser = argparse.ArgumentParser(prog="genac", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"genac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one agent and write curve + metadata + snapshots")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="entropic-index grid x seeds, plus a summary CSV")
    _add_train_flags(p)
    p.add_argument("--grid", help="comma-separated indices (default 1.5,2.0,2.5)")
    p.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="roll out the final policy of a run directory")
    p.add_argument("run", help="run directory written by train")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--env", help="evaluate on a different environment")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify-tabular", help="tabular policy-iteration property suite")
    p.add_argument("--seeds", type=int, default=100, help="number of random MDPs")
    p.add_argument("--max-states", type=int, default=8)
    p.add_argument("--max-actions", type=int, default=4)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--inject-fault", action="store_true",
                   help="use a deliberately broken backup (the suite must fail)")
    p.set_defaults(func=cmd_verify_tabular)

    p = sub.add_parser("bounds", help="value-loss bound grids and lower bounds as CSV")
    _add_bound_flags(p)
    p.add_argument("--q-grid", default="1.0:3.0:0.1")
    p.add_argument("--eta-grid", default="1.5:3.0:0.5")
    p.add_argument("--q-standard", type=float, default=0.0,
                   help="Q value of the unregularized problem for the lower bound")
    p.add_argument("--out", help="directory for zeta_tsallis.csv / zeta_renyi.csv")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ensemble-mc", help="best-of-L Monte-Carlo table")
    p.add_argument("--L", default="1,2,4,8,16,32,64")
    p.add_argument("--sigma-star", type=float, default=1.0)
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--abar", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ensemble_mc)

    p = sub.add_parser("list-envs", help="list registered environments")
    p.set_defaults(func=cmd_list_envs)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
