#!/usr/bin/env python3
"""
Main script for the robot runtime

Runs scenarios in virtual time, serves the local offload cloud, compares
offloading policies and writes the fixture model files.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from tqdm import tqdm

# Add package to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from roboserv import (
    ScenarioConfig,
    find_scenario,
    find_scenario_files,
    load_scenario,
    run_scenario,
)
from roboserv.io.trace_writer import write_ntuple, write_trace_csv
from roboserv.offload.client import SIM, SOCKET
from roboserv.offload.endpoints import DEFAULT_PORT, LOCAL_ENDPOINT
from roboserv.offload.placement import decide_placement
from roboserv.offload.policy import all_local_estimate, estimate_policy
from roboserv.offload.server import fixture_models, load_service_models, serve_offload
from roboserv.runtime.records import SERVICE_ORDER
from roboserv.speech.model_io import save_speech_model
from roboserv.speech.training import train_speech_model
from roboserv.utils.file_utils import model_paths
from roboserv.vision.fixture import build_fixture_network
from roboserv.vision.network_io import save_network

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2


def create_parser():
    """Create argument parser with detailed help"""
    parser = argparse.ArgumentParser(
        description='Deterministic robot runtime: SLAM, vision and speech on modeled CPU/GPU lanes',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run a bundled scenario and keep the report and trace
  %(prog)s run --scenario all-local --out report.json --trace trace.csv

  # Fail with exit code 2 when a deadline is missed
  %(prog)s run --scenario lan-offload --strict

  # Run every scenario below a directory
  %(prog)s run --batch /path/to/scenarios/

  # Serve vision and speech requests for offloading robots
  %(prog)s serve --port 7070 --models models/

  # Compare placements and battery life for a scenario's endpoints
  %(prog)s offload-eval --scenario wan-only

  # Write the fixture model files
  %(prog)s build-models --out models/

For more information, see README.md
        """
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', parents=[common], help='Run a scenario in virtual time')
    run.add_argument('--scenario', help='Scenario file or bundled scenario name')
    run.add_argument('--out', help='Report JSON file')
    run.add_argument('--trace', help='Task trace CSV file')
    run.add_argument('--ntuple', help='ROOT file with trace, pose and chassis trees')
    run.add_argument('--chassis', help='Chassis command log: file path or host:port')
    run.add_argument('--seed', type=int, help='Override the scenario seed')
    run.add_argument('--strict', action='store_true', help='Exit with 2 when deadlines are violated')
    run.add_argument('--batch', metavar='DIR', help='Batch mode: run every scenario below DIR')
    run.add_argument('--pattern', default='*.json', help='File pattern for batch mode [default: *.json]')
    run.add_argument('--no-execute', action='store_true',
                     help='Timing only: skip the SLAM / CNN / speech computations')
    run.add_argument('--offload-mode', choices=[SIM, SOCKET], default=SIM,
                     help='Offloaded calls answered in-process or over TCP [default: sim]')
    run.add_argument('--models', help='Models directory (fixture models when omitted)')
    run.add_argument('--progress', action='store_true', help='Show a virtual-time progress bar')

    serve = commands.add_parser('serve', parents=[common], help='Serve offloaded vision and speech requests')
    serve.add_argument('--host', default='0.0.0.0', help='Bind address [default: 0.0.0.0]')
    serve.add_argument('--port', type=int, default=DEFAULT_PORT, help=f'TCP port [default: {DEFAULT_PORT}]')
    serve.add_argument('--models', help='Models directory (fixture models when omitted)')

    evaluate = commands.add_parser('offload-eval', parents=[common], help='Placement table and energy comparison')
    evaluate.add_argument('--scenario', required=True, help='Scenario file or bundled scenario name')

    build = commands.add_parser('build-models', parents=[common], help='Write the fixture model files')
    build.add_argument('--out', required=True, help='Models directory to create')
    return parser


def _banner(title):
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}")


def load_models(models_dir):
    if models_dir is None:
        return fixture_models()
    return load_service_models(models_dir)


def print_report(report):
    """Summary lines of one run"""
    for name, stats in report.streams.items():
        latency = stats.latency_ms
        p95 = f"{latency['p95']:.1f} ms p95" if latency['p95'] is not None else "no items"
        print(f"  {name:<7} {stats.placement:<6} {stats.achieved_rate_hz:7.2f}/s  "
              f"{stats.processed}/{stats.emitted} processed  {p95}")
    util = report.utilization
    print(f"  utilization: cpu {util['cpu_pct']:.1f}%  gpu {util['gpu_pct']:.1f}%  mem {util['mem_pct']:.1f}%")
    print(f"  power: {report.power_w:.2f} W  battery: {report.battery_hours:.2f} h on {report.battery_wh:g} Wh")
    print(f"  stable localization: {'yes' if report.stable_localization else 'no'}")
    if report.slam_rmse_m is not None:
        print(f"  SLAM position RMSE: {report.slam_rmse_m:.3f} m")
    for action in report.actions:
        print(f"  t={action.t_ns * 1e-9:6.2f} s  {action.source:<10} {action.action} {action.detail}")
    if report.violations:
        print(f"⚠ {report.violation_count} deadline violation(s)")
    else:
        print("✓ No deadline violations")


def run_one(scenario_path, args, out=None, trace=None):
    """Run one scenario file and write its outputs; returns the report"""
    config = load_scenario(scenario_path)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    models = load_models(args.models) if not args.no_execute else None
    chassis = args.chassis or config.outputs.chassis
    report = run_scenario(config, execute=not args.no_execute, progress=args.progress,
                          offload_mode=args.offload_mode, models=models, chassis_target=chassis)
    out = out or config.outputs.report
    trace = trace or config.outputs.trace
    ntuple = args.ntuple or config.outputs.ntuple
    if out:
        report.save(out)
        print(f"✓ Report written to {out}")
    if trace:
        write_trace_csv(report.records, trace)
        print(f"✓ Trace written to {trace}")
    if ntuple:
        write_ntuple(report, ntuple)
        print(f"✓ Ntuple written to {ntuple}")
    return report


def cmd_run(args):
    if args.batch:
        return run_batch(args)
    if not args.scenario:
        print("❌ ERROR: --scenario is required unless --batch is given")
        return EXIT_ERROR
    try:
        path = find_scenario(args.scenario)
        _banner("Scenario Run")
        print(f"Scenario: {path}")
        print(f"{'='*60}\n")
        report = run_one(path, args, args.out, args.trace)
    except (OSError, ValueError) as e:
        print(f"\n❌ ERROR: {e}")
        return EXIT_ERROR
    print_report(report)
    if args.strict and report.violations:
        return EXIT_VIOLATIONS
    return EXIT_OK


def run_batch(args):
    """Run every scenario file below a directory; reports land next to the scenarios"""
    files_to_process = find_scenario_files(args.batch, args.pattern)
    if not files_to_process:
        print(f"❌ No scenarios found in {args.batch} matching pattern '{args.pattern}'")
        return EXIT_ERROR

    _banner("Batch Run Mode")
    print(f"Parent directory: {args.batch}")
    print(f"Pattern: {args.pattern}")
    print(f"Found {len(files_to_process)} scenario(s) to run")
    print(f"{'='*60}\n")

    successful = 0
    failed = 0
    violations = 0
    for scenario, report_path in tqdm(files_to_process, desc="Running scenarios", unit=" scenario"):
        try:
            print(f"\n📂 Running: {scenario}")
            report = run_one(scenario, args, report_path)
            violations += report.violation_count
            successful += 1
        except (OSError, ValueError) as e:
            print(f"❌ ERROR running {scenario}: {e}")
            failed += 1

    _banner("Batch Run Complete!")
    print(f"✓ Successful: {successful} scenarios")
    if failed > 0:
        print(f"✗ Failed: {failed} scenarios")
    print(f"📊 Deadline violations: {violations}")
    print(f"{'='*60}\n")
    if failed:
        return EXIT_ERROR
    if args.strict and violations:
        return EXIT_VIOLATIONS
    return EXIT_OK


def cmd_serve(args):
    try:
        models = load_models(args.models)
    except (OSError, ValueError) as e:
        print(f"❌ ERROR loading models: {e}")
        return EXIT_ERROR
    _banner("Offload Server")
    print(f"Listening on {args.host}:{args.port} (Ctrl-C to stop)")
    print(f"{'='*60}\n")
    try:
        serve_offload(args.host, args.port, models)
    except OSError as e:
        print(f"❌ ERROR: cannot serve on {args.host}:{args.port}: {e}")
        return EXIT_ERROR
    except KeyboardInterrupt:
        print("\n✓ Server stopped")
    return EXIT_OK


def offload_table(config: ScenarioConfig):
    """Rows of (service, endpoint, worst-case ms, tolerance ms, passes)"""
    rows = []
    for service in SERVICE_ORDER:
        tolerance = config.tolerances.for_service(service)
        for endpoint in [LOCAL_ENDPOINT] + [e for e in config.endpoints if not e.is_local]:
            if not endpoint.hosts(service):
                continue
            worst = endpoint.worst_case_ms(service)
            rows.append((service.value, endpoint.name, worst, tolerance, worst <= tolerance))
    return rows


def cmd_offload_eval(args):
    try:
        config = load_scenario(find_scenario(args.scenario))
    except (OSError, ValueError) as e:
        print(f"❌ ERROR: {e}")
        return EXIT_ERROR

    _banner(f"Offload Evaluation: {config.name}")
    print(f"{'service':<8} {'endpoint':<10} {'worst ms':>9} {'tol ms':>8}  result")
    for service, endpoint, worst, tolerance, ok in offload_table(config):
        print(f"{service:<8} {endpoint:<10} {worst:9.1f} {tolerance:8.1f}  {'pass' if ok else 'FAIL'}")

    plan = decide_placement(config.tolerances, config.endpoints, config.profiles, config.enabled_services)
    local = all_local_estimate(config.profiles, config.battery_wh, config.enabled_services)
    chosen = estimate_policy(plan, config.profiles, config.battery_wh)
    print(f"\nPlacement:")
    for service, placement in plan.placements.items():
        print(f"  {service.value:<8} -> {placement.endpoint.name:<8} ({placement.rationale})")
    print(f"\n{'policy':<10} {'power W':>8} {'cpu %':>7} {'gpu %':>7} {'battery h':>10}")
    for name, est in (("all-local", local), ("plan", chosen)):
        print(f"{name:<10} {est.power_w:8.2f} {est.cpu_pct:7.1f} {est.gpu_pct:7.1f} {est.battery_hours:10.2f}")
    print(f"\n📊 Battery life ratio (plan / all-local): {chosen.battery_hours / local.battery_hours:.2f}")
    print(f"{'='*60}\n")
    return EXIT_OK


def cmd_build_models(args):
    paths = model_paths(args.out)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    _banner("Building Fixture Models")
    print(f"Output directory: {args.out}")
    print(f"{'='*60}\n")
    save_network(build_fixture_network(progress=True), paths["vision"])
    print(f"✓ Vision network written to {paths['vision']}")
    save_speech_model(train_speech_model(progress=True), paths["speech"])
    print(f"✓ Speech model written to {paths['speech']}")
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'serve': cmd_serve,
    'offload-eval': cmd_offload_eval,
    'build-models': cmd_build_models,
}


def log_level(command, verbose=False):
    """DEBUG with -v; serve keeps its per-request INFO lines"""
    if verbose:
        return logging.DEBUG
    return logging.INFO if command == 'serve' else logging.WARNING


def main(argv=None):
    """Main entry point"""
    parser = create_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=log_level(args.command, args.verbose),
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
