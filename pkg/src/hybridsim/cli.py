"""Command-line entry point. Every path is resolved under ``--workdir``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__

DEFAULTS: dict[str, dict] = {
    "gen-data": {"users": 500, "posts": 300, "communities": 5, "p_in": 0.12, "p_out": 0.004, "seed": 0},
    "stats": {},
    "train": {"epochs": 100, "batch_size": 64, "lr": 1e-3, "dim": 64, "layers": 2, "max_len": 200,
              "heads": 4, "dropout": 0.1, "patience": 10, "seed": 0, "local_pool": "last"},
    "simulate": {"agents": "mock", "core_users": 100, "k": [10], "seed_source": "llm", "seed": 0,
                 "seed_order": "activity", "base_url": "https://api.openai.com/v1", "model_name": "gpt-4o-mini",
                 "api_key_env": "OPENAI_API_KEY", "timeout": 60.0, "retries": 3, "max_concurrency": 8},
    "evaluate": {"k": None},
    "pop": {"k": [10, 20, 50]},
}


class CliError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridsim", description="Hybrid LLM-agent / diffusion-model cascade simulator")
    p.add_argument("--workdir", default=".", help="directory holding data/, model and outputs")
    p.add_argument("--config", default=None, help="JSON config (default: <workdir>/config.json if present)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a seeded synthetic corpus to <workdir>/data")
    g.add_argument("--users", type=int)
    g.add_argument("--posts", type=int)
    g.add_argument("--communities", type=int)
    g.add_argument("--p-in", type=float, dest="p_in")
    g.add_argument("--p-out", type=float, dest="p_out")
    g.add_argument("--seed", type=int)

    s = sub.add_parser("stats", help="dataset statistics")
    s.add_argument("--counts", type=int, nargs=3, metavar=("INFO", "USERS", "INTERACTIONS"),
                   help="compute from raw counts instead of the dataset")

    t = sub.add_parser("train", help="train the diffusion model")
    for name, typ in (("epochs", int), ("batch-size", int), ("lr", float), ("dim", int), ("layers", int),
                      ("max-len", int), ("heads", int), ("dropout", float), ("patience", int), ("seed", int)):
        t.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))
    t.add_argument("--local-pool", choices=["last", "mean"], dest="local_pool")

    m = sub.add_parser("simulate", help="simulate every test post")
    m.add_argument("--agents", choices=["mock", "http"])
    m.add_argument("--core-users", type=int, dest="core_users")
    m.add_argument("--k", type=int, action="append", help="tail length; repeat to keep room for a sweep")
    m.add_argument("--seed-source", choices=["llm", "first-hour"], dest="seed_source")
    m.add_argument("--seed-order", choices=["activity", "index"], dest="seed_order")
    m.add_argument("--seed", type=int)
    m.add_argument("--base-url", dest="base_url")
    m.add_argument("--model-name", dest="model_name")
    m.add_argument("--api-key-env", dest="api_key_env")
    m.add_argument("--timeout", type=float)
    m.add_argument("--retries", type=int)
    m.add_argument("--max-concurrency", type=int, dest="max_concurrency")

    e = sub.add_parser("evaluate", help="score predictions.jsonl against the test cascades")
    e.add_argument("--k", type=int, action="append")

    o = sub.add_parser("pop", help="evaluate the POP baseline")
    o.add_argument("--k", type=int, action="append")
    return p


def _resolve(args: argparse.Namespace, config: dict) -> dict:
    section = config.get(args.command, {})
    out = {}
    for key, default in DEFAULTS[args.command].items():
        value = getattr(args, key, None)
        if value is None:
            value = section.get(key, config.get(key, default))
        out[key] = value
    return out


def _load_config(args) -> dict:
    path = Path(args.config) if args.config else Path(args.workdir) / "config.json"
    if not path.exists():
        if args.config:
            raise CliError(f"config file not found: {path}")
        return {}
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise CliError(f"bad config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError(f"bad config {path}: expected an object")
    return cfg


def _data(workdir: Path):
    from .data import load_dataset, load_split

    return load_dataset(workdir / "data"), load_split(workdir / "data")


def cmd_gen_data(workdir: Path, o: dict) -> None:
    from .synthetic import SyntheticConfig, generate_to_disk

    cfg = SyntheticConfig(users=o["users"], posts=o["posts"], communities=o["communities"],
                          p_in=o["p_in"], p_out=o["p_out"], seed=o["seed"])
    corpus = generate_to_disk(cfg, workdir / "data")
    s = corpus.split
    print(f"wrote {cfg.users} users, {cfg.posts} posts to {workdir / 'data'} "
          f"(split {len(s.train)}/{len(s.valid)}/{len(s.test)})")


def cmd_stats(workdir: Path, o: dict, counts) -> None:
    from .data import dataset_stats, stats_from_counts

    if counts:
        stats = stats_from_counts(*counts)
    else:
        stats = dataset_stats(_data(workdir)[0])
    print(stats.row())


def cmd_train(workdir: Path, o: dict) -> None:
    from .diffusion import save_model
    from .trainer import TrainConfig, train, write_history

    ds, split = _data(workdir)
    cfg = TrainConfig(**o)
    params, history = train(ds, split, cfg)
    save_model(params, workdir / "model.csdm")
    write_history(history, workdir / "history.csv")
    best = min(history, key=lambda r: r.valid_loss if r.valid_loss == r.valid_loss else r.train_loss)
    print(f"trained {len(history)} epochs; best epoch {best.epoch} valid loss {best.valid_loss:.4f}")


def _backend(o: dict):
    from .agents import HttpBackend, HttpConfig, MockBackend

    if o["agents"] == "mock":
        return MockBackend()
    return HttpBackend(HttpConfig(base_url=o["base_url"], model=o["model_name"], api_key_env=o["api_key_env"],
                                  timeout=o["timeout"], max_retries=o["retries"],
                                  max_concurrency=o["max_concurrency"]))


def cmd_simulate(workdir: Path, o: dict) -> None:
    from .agents import write_decisions
    from .diffusion import DiffusionModel, load_model
    from .pipeline import SimulationConfig, Simulator, write_jsonl, write_predictions

    ds, split = _data(workdir)
    model = DiffusionModel(load_model(workdir / "model.csdm"))
    ks = o["k"] if isinstance(o["k"], list) else [o["k"]]
    cfg = SimulationConfig(core_users=o["core_users"], k=max(ks), seed_source=o["seed_source"],
                           seed=o["seed"], seed_order=o["seed_order"])
    result = Simulator(ds, split, model, _backend(o), cfg).simulate_testset()
    write_predictions(result.records, workdir / "predictions.jsonl")
    write_jsonl(result.skips, workdir / "skips.jsonl")
    write_decisions(result.decisions, workdir / "decisions.jsonl")
    print(f"simulated {len(result.records)} posts, skipped {len(result.skips)}")


def cmd_evaluate(workdir: Path, o: dict) -> None:
    from .evaluation import evaluate, write_report
    from .pipeline import read_predictions

    ds, _ = _data(workdir)
    path = workdir / "predictions.jsonl"
    if not path.exists():
        raise CliError(f"missing {path}; run simulate first")
    records = read_predictions(path)
    skips_path = workdir / "skips.jsonl"
    n_skipped = sum(1 for line in skips_path.read_text().splitlines() if line.strip()) if skips_path.exists() else 0
    ks = o["k"] or sorted({r.k for r in records}) or [10]
    report = evaluate(records, ds, sorted(set(ks)), n_skipped=n_skipped)
    write_report(report, workdir)
    print(report.to_markdown(), end="")


def cmd_pop(workdir: Path, o: dict) -> None:
    from .evaluation import evaluate_pop, write_report

    ds, split = _data(workdir)
    report = evaluate_pop(ds, split.train, split.test, sorted(set(o["k"])))
    write_report(report, workdir, stem="pop_report", title="POP")
    print(report.to_markdown("POP"), end="")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    workdir = Path(args.workdir)
    try:
        opts = _resolve(args, _load_config(args))
        workdir.mkdir(parents=True, exist_ok=True)
        if args.command == "gen-data":
            cmd_gen_data(workdir, opts)
        elif args.command == "stats":
            cmd_stats(workdir, opts, args.counts)
        elif args.command == "train":
            cmd_train(workdir, opts)
        elif args.command == "simulate":
            cmd_simulate(workdir, opts)
        elif args.command == "evaluate":
            cmd_evaluate(workdir, opts)
        elif args.command == "pop":
            cmd_pop(workdir, opts)
    except Exception as exc:
        if args.verbose:
            logging.exception("command failed")
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
