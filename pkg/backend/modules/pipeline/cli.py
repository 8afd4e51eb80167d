import argparse
import json
import sys
from pathlib import Path

from modules.correlator.store import load_checkpoint
from modules.errors import ConfigError, DetectionError
from modules.ingest.windows import enumerate_windows, sort_events
from modules.pipeline.config import load_config
from modules.pipeline.engine import read_events, run, train
from modules.pipeline.evaluation import evaluate, reduction_report, write_report
from modules.pipeline.scenario import (
    generate_scenario,
    load_scenario_spec,
    load_truth,
    write_scenario,
)
from modules.reasoner.schemas import Alert
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apt-detect", description="Détection d'APT en flux sur journaux d'audit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="fichier de configuration TOML")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.CLE=VALEUR",
            help="surcharge d'une clé de configuration",
        )
        return p

    p = with_config(sub.add_parser("train", help="apprendre la base LOF"))
    p.add_argument("--input", required=True, help="journaux d'entraînement JSONL")
    p.add_argument("--model", help="chemin du modèle à écrire")

    p = with_config(sub.add_parser("detect", help="lancer la détection"))
    p.add_argument("--input", required=True, help="journaux de test JSONL")
    p.add_argument("--model", help="modèle de base appris")
    p.add_argument("--output", help="répertoire de sortie")
    p.add_argument("--archive", action="store_true", help="archiver dans la base SQL")

    p = with_config(sub.add_parser("eval", help="évaluer contre la vérité terrain"))
    p.add_argument("--input", required=True, help="journaux de test JSONL")
    p.add_argument("--truth", required=True, help="vérité terrain JSON")
    p.add_argument("--run-dir", required=True, help="répertoire de sortie de detect")
    p.add_argument("--report", help="rapport JSON à écrire")

    p = sub.add_parser("gen", help="générer un scénario synthétique")
    p.add_argument("--spec", required=True, help="spécification TOML du scénario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="répertoire de sortie")

    p = sub.add_parser("report", help="afficher les files d'attaque")
    p.add_argument("--checkpoint", required=True, help="point de reprise JSON")
    p.add_argument("--window", type=int, help="fenêtre de référence pour l'âge")
    return parser


def _train(args) -> None:
    config = load_config(args.config, args.overrides)
    events = read_events(config, args.input).events
    train(config, events, args.model or config.deviation.model_path)


def _detect(args) -> None:
    overrides = list(args.overrides)
    if args.output:
        overrides.append(f'output_dir="{args.output}"')
    config = load_config(args.config, overrides)
    result = run(config, args.input, args.model)
    print(f"{len(result.alerts)} alerte(s) écrite(s) dans {Path(config.output_dir) / 'alerts.jsonl'}")
    if args.archive:
        from modules.api.detections.create_db import init_detections_db
        from modules.api.detections.functions import archive_run
        from modules.database.session import DetectionsSessionLocal

        init_detections_db()
        db = DetectionsSessionLocal()
        try:
            archive_run(db, result.alerts, result.store)
        finally:
            db.close()


def _read_alerts(path: Path) -> list[Alert]:
    if not path.exists():
        raise DetectionError(f"alertes introuvables : {path}")
    with open(path, encoding="utf-8") as handle:
        return [Alert.model_validate_json(line) for line in handle if line.strip()]


def _eval(args) -> None:
    config = load_config(args.config, args.overrides)
    run_dir = Path(args.run_dir)
    events = sort_events(read_events(config, args.input).events)
    if not events:
        raise DetectionError(f"flux vide : {args.input}")
    windows = enumerate_windows(
        events[0].timestamp, events[-1].timestamp,
        config.windowing.length_ns, config.windowing.step_ns,
    )
    alerts = _read_alerts(run_dir / "alerts.jsonl")
    store = load_checkpoint(run_dir / "checkpoint.json")
    alerted = [s for s in store.sets.values() if s.alerted_score is not None]

    detected = set()
    stats_path = run_dir / "window_stats.jsonl"
    if stats_path.exists():
        with open(stats_path, encoding="utf-8") as handle:
            for line in handle:
                row = json.loads(line)
                if row.get("candidate_alerts"):
                    detected.add(row["window"])

    truth = load_truth(args.truth)
    report = evaluate(alerts, alerted, truth, windows, detected)
    print(report.render())
    retained = reduction_report({t for s in store.sets.values() for t in s.tuples}, truth)
    print(f"Événements d'attaque retenus dans les ensembles : {retained['retained']}/{retained['attack_events']}")
    if args.report:
        write_report(report, args.report)


def _gen(args) -> None:
    spec = load_scenario_spec(args.spec)
    scenario = generate_scenario(spec, args.seed)
    paths = write_scenario(scenario, args.output)
    print(f"Scénario écrit : {', '.join(str(p) for p in paths.values())}")


def _report(args) -> None:
    path = Path(args.checkpoint)
    if not path.exists():
        raise DetectionError(f"point de reprise introuvable : {path}")
    store = load_checkpoint(path)
    for row in store.report(args.window):
        print(
            f"{row['queue']:<9} {row['id']}  σ_a={row['score']:.3f}  âge={row['age']}  "
            f"processus={','.join(row['processes'])}"
        )


COMMANDS = {"train": _train, "detect": _detect, "eval": _eval, "gen": _gen, "report": _report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Configuration : {e}")
        print(f"erreur : {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except DetectionError as e:
        logger.error(f"Échec de {args.command} : {e}")
        print(f"erreur : {e}", file=sys.stderr)
        return 1
    return 0
