"""Run one JSON-configured experiment and print its report.

    python scripts/run_experiment.py configs/instability.json --out out/instability
"""
import argparse
import json

from dnmaps.experiments import load_config, render_report, run_experiment, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    config = load_config(args.config)
    report = run_experiment(config, args.threads)
    paths = write_report(report, args.out or config.output_dir)
    print(render_report(json.loads(report.to_json())))
    print(f"\nreport: {paths['json']}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
