import sys

# Check Python version requirement (3.9+)
if sys.version_info < (3, 9):
    raise RuntimeError(
        f"Python 3.9 or higher is required. Current version: {sys.version_info.major}.{sys.version_info.minor}"
    )

import argparse
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from qexclusion.config import GROUP_CONFIG, LOG_LEVEL, PBR_CONFIG, TOLERANCE_PROFILE, TOLERANCE_PROFILES, Tolerances, get_tolerances
from qexclusion.constants import (
    COMMAND_BATCH,
    COMMAND_CAPACITY,
    COMMAND_CHECK,
    COMMAND_CONSTRUCT,
    COMMAND_DEMO,
    COMMAND_ORACLE,
    COMMAND_PBR,
    COMMAND_VERIFY,
    COMMANDS,
    MODE_EXPLICIT,
    ORACLE_METHOD_BISECTION,
    ORACLE_METHOD_SPLITTING,
    PATH_COMPLEMENT,
)
from qexclusion.core.exclusion import (
    certify,
    check_abelian_iff,
    complement_povm,
    evaluate_error,
    verify_povm,
)
from qexclusion.core.oracle import OracleConfig, check_feasibility_zero, ensemble_from_instance, solve_exclusion_sdp
from qexclusion.core.pbr import (
    build_pbr_instance,
    build_qudit_pbr_instance,
    minimal_n,
    pbr_condition,
    pbr_condition_value,
    pbr_sweep,
    qudit_pbr_condition,
    qudit_pbr_condition_value,
    to_radians,
)
from qexclusion.core.zero_error import build_graph, capacity_lower_bound, fractional_packing
from qexclusion.errors import GraphUnavailable, SchemaError, Unbounded
from qexclusion.models import BatchFile, Report, ScenarioFile, Verdict, to_complex
from qexclusion.scenarios.demos import get_demo, list_demos
from qexclusion.scenarios.loader import (
    build_ensemble,
    build_instance,
    build_povm,
    load_scenario,
    require_instance,
)
from qexclusion.utils.error_handler import handle_command_errors, require_finite_group
from qexclusion.utils.report_builder import (
    capacity_payload,
    certificate_payload,
    feasibility_payload,
    numeric,
    oracle_payload,
    povm_payload,
    provenance,
    report_to_dict,
    verification_payload,
)
from qexclusion.utils.serialization import dumps

logger = logging.getLogger(__name__)

Outcome = Tuple[Optional[Verdict], Dict[str, Any]]


# ============================================================================
# Command handlers
# ============================================================================

def _check(scenario: ScenarioFile, tolerances: Tolerances, **_) -> Outcome:
    descriptor = require_instance(scenario, COMMAND_CHECK)
    instance = build_instance(descriptor)
    certificate = certify(instance, descriptor.shifts, tolerances)
    payload = certificate_payload(certificate, instance, tolerances, include_diagram=scenario.options.phase_diagram)
    return certificate.verdict, payload


def _construct(scenario: ScenarioFile, tolerances: Tolerances, **_) -> Outcome:
    descriptor = require_instance(scenario, COMMAND_CONSTRUCT)
    instance = build_instance(descriptor)
    certificate = certify(instance, descriptor.shifts, tolerances)
    full = scenario.options.full_effects
    payload = certificate_payload(
        certificate, instance, tolerances, include_diagram=scenario.options.phase_diagram, include_effect=full
    )
    if certificate.povm is not None:
        payload["verification"] = verification_payload(verify_povm(instance, certificate.povm, tolerances), tolerances)
    if certificate.optimal_povm is not None:
        optimal = povm_payload(certificate.optimal_povm, tolerances, include_effect=full)
        optimal["total_error"] = numeric(evaluate_error(instance, certificate.optimal_povm), tolerances.dual)
        payload["optimal_povm"] = optimal
    return certificate.verdict, payload


def _verify(scenario: ScenarioFile, tolerances: Tolerances, **_) -> Outcome:
    descriptor = require_instance(scenario, COMMAND_VERIFY)
    instance = build_instance(descriptor)
    if scenario.povm is not None:
        povm = build_povm(scenario.povm)
        source = "scenario"
    else:
        certificate = certify(instance, descriptor.shifts, tolerances)
        povm = certificate.povm or certificate.optimal_povm
        if povm is None:
            raise SchemaError(
                "No POVM to verify: supply a 'povm' section or an instance the constructions cover",
                {"verdict": certificate.verdict.value},
            )
        source = certificate.path
    verification = verify_povm(instance, povm, tolerances)
    payload = {"source": source, **verification_payload(verification, tolerances)}
    return (Verdict.EXCLUDABLE if verification.passed else None), payload


def _pbr_end_to_end(instance_builder, dim: int, tolerances: Tolerances) -> Optional[Dict[str, Any]]:
    if dim > GROUP_CONFIG["max_carrier_dim"]:
        logger.info(f"Skipping end-to-end certificate: carrier dimension {dim} above cap")
        return None
    instance = instance_builder()
    certificate = check_abelian_iff(instance, tolerances)
    return {
        "verdict": certificate.verdict.value,
        **certificate_payload(certificate, instance, tolerances, include_diagram=False),
    }


def _pbr(scenario: ScenarioFile, tolerances: Tolerances, **_) -> Outcome:
    descriptor = scenario.pbr
    sweep = scenario.options.sweep_degrees
    if descriptor is None and sweep is None:
        raise SchemaError("Command 'pbr' needs a 'pbr' section or a sweep", {"command": COMMAND_PBR})

    verdict: Optional[Verdict] = None
    payload: Dict[str, Any] = {}

    if descriptor is not None and descriptor.amplitudes is not None:
        amplitudes = [to_complex(v) for v in descriptor.amplitudes]
        payload["amplitudes"] = len(amplitudes)
        if descriptor.n is not None:
            n = descriptor.n
            holds = qudit_pbr_condition(amplitudes, n)
            payload["n"] = n
            payload["condition_value"] = numeric(qudit_pbr_condition_value(amplitudes, n), 2.0 * PBR_CONFIG["boundary_rtol"])
            payload["condition_holds"] = holds
            verdict = Verdict.EXCLUDABLE if holds else Verdict.NOT_EXCLUDABLE
            certificate = _pbr_end_to_end(
                lambda: build_qudit_pbr_instance(amplitudes, n), len(amplitudes) ** n, tolerances
            )
            if certificate is not None:
                payload["certificate"] = certificate
                verdict = Verdict(certificate["verdict"])
    elif descriptor is not None and descriptor.theta is not None:
        theta = to_radians(descriptor.theta, descriptor.unit)
        payload["theta_rad"] = theta
        try:
            payload["minimal_n"] = minimal_n(theta)
        except Unbounded:
            payload["minimal_n"] = "unbounded"
        if descriptor.n is not None:
            n = descriptor.n
            holds = pbr_condition(theta, n)
            payload["n"] = n
            payload["condition_value"] = numeric(pbr_condition_value(theta, n), 2.0 * PBR_CONFIG["boundary_rtol"])
            payload["condition_holds"] = holds
            verdict = Verdict.EXCLUDABLE if holds else Verdict.NOT_EXCLUDABLE
            if n <= GROUP_CONFIG["max_pauli_qubits"]:
                certificate = _pbr_end_to_end(lambda: build_pbr_instance(theta, n), 2 ** n, tolerances)
                if certificate is not None:
                    payload["certificate"] = certificate
                    verdict = Verdict(certificate["verdict"])
    elif sweep is None:
        raise SchemaError("Section 'pbr' needs 'theta' or 'amplitudes'", {"command": COMMAND_PBR})

    if sweep is not None:
        payload["sweep"] = pbr_sweep(sweep)
    return verdict, payload


def _capacity(scenario: ScenarioFile, tolerances: Tolerances, graph_csv: Optional[str] = None, **_) -> Outcome:
    descriptor = require_instance(scenario, COMMAND_CAPACITY)
    instance = build_instance(descriptor)
    require_finite_group(instance, COMMAND_CAPACITY)

    if scenario.options.capacity_povm == "complement":
        povm = complement_povm(instance, tolerances)
        path = PATH_COMPLEMENT
    else:
        certificate = certify(instance, descriptor.shifts, tolerances)
        if certificate.povm is None:
            raise GraphUnavailable(
                "No excluding POVM for this instance, so there is no zero-error channel",
                {"verdict": certificate.verdict.value},
            )
        povm = certificate.povm
        path = certificate.path

    graph = build_graph(instance, povm, scenario.options.graph_threshold, tolerances)
    packing = fractional_packing(graph)
    bound = capacity_lower_bound(packing, instance.group.order)
    payload = capacity_payload(graph, packing, bound, path)
    if graph_csv:
        Path(graph_csv).write_text(graph.to_csv(), encoding="utf-8")
        payload["graph_csv"] = str(graph_csv)
        logger.info(f"Wrote confusability graph to {graph_csv}")
    return Verdict.EXCLUDABLE, payload


def _oracle(scenario: ScenarioFile, tolerances: Tolerances, **_) -> Outcome:
    options = scenario.options
    config = OracleConfig.from_tolerances(tolerances, method=options.oracle_method, max_iterations=options.max_iterations)

    reference: Optional[float] = None
    if scenario.ensemble is None and scenario.instance is not None and scenario.instance.mode == MODE_EXPLICIT:
        instance = build_instance(scenario.instance)
        ensemble = ensemble_from_instance(instance)
        if instance.is_abelian:
            certificate = check_abelian_iff(instance, tolerances)
            reference = 0.0 if certificate.verdict == Verdict.EXCLUDABLE else certificate.optimal_error
    else:
        ensemble = build_ensemble(scenario)

    low, high = config.zero_band
    if options.zero_only:
        feasibility = check_feasibility_zero(ensemble, config)
        payload = feasibility_payload(feasibility, tolerances)
        payload["band"] = [low, high]
        return (Verdict.EXCLUDABLE if feasibility.feasible else Verdict.NOT_EXCLUDABLE), payload

    result = solve_exclusion_sdp(ensemble, config)
    payload = oracle_payload(result, tolerances, reference)
    payload["states"] = ensemble.size
    payload["dim"] = ensemble.dim
    if result.alpha <= low:
        verdict = Verdict.EXCLUDABLE
    elif result.alpha >= high:
        verdict = Verdict.NOT_EXCLUDABLE
    else:
        verdict = Verdict.UNDECIDED
    return verdict, payload


HANDLERS = {
    COMMAND_CHECK: _check,
    COMMAND_CONSTRUCT: _construct,
    COMMAND_VERIFY: _verify,
    COMMAND_PBR: _pbr,
    COMMAND_CAPACITY: _capacity,
    COMMAND_ORACLE: _oracle,
}


# ============================================================================
# Dispatcher
# ============================================================================

def _resolve_scenario(scenario: Union[ScenarioFile, str, Path, dict, None]) -> ScenarioFile:
    if scenario is None:
        return ScenarioFile()
    if isinstance(scenario, ScenarioFile):
        return scenario
    return load_scenario(scenario)


def _tolerances_for(scenario: ScenarioFile, profile: Optional[str]) -> Tolerances:
    overrides = scenario.tolerances.model_dump() if scenario.tolerances is not None else None
    return get_tolerances(profile, overrides)


def _run(
    command: str,
    scenario: Union[ScenarioFile, str, Path, dict, None],
    profile: Optional[str],
    demo: Optional[str],
    timing: bool,
    graph_csv: Optional[str],
) -> Report:
    started = time.perf_counter()

    if command == COMMAND_DEMO:
        if demo is None:
            return Report(
                command=command, payload={"demos": list_demos()}, provenance=provenance(get_tolerances(profile))
            )
        canned = get_demo(demo)
        scenario = canned.load()
        tolerances = _tolerances_for(scenario, profile)
        verdict, inner = HANDLERS[canned.command](scenario, tolerances, graph_csv=graph_csv)
        payload = {"demo": canned.name, "runs": canned.command, "description": canned.description, **inner}
    else:
        if command not in HANDLERS:
            raise SchemaError(f"Unknown command: {command}", {"available": COMMANDS})
        scenario = _resolve_scenario(scenario)
        tolerances = _tolerances_for(scenario, profile)
        verdict, payload = HANDLERS[command](scenario, tolerances, graph_csv=graph_csv)

    report = Report(command=command, verdict=verdict, payload=payload, provenance=provenance(tolerances))
    if timing:
        report.timing = {"total_ms": (time.perf_counter() - started) * 1000.0}
    logger.info(f"{command} finished: verdict={verdict.value if verdict else 'none'}")
    return report


def run(
    command: str,
    scenario: Union[ScenarioFile, str, Path, dict, None] = None,
    profile: Optional[str] = None,
    demo: Optional[str] = None,
    timing: bool = False,
    graph_csv: Optional[str] = None,
) -> Report:
    """
    Run one command on one scenario.

    Args:
        command: One of check, construct, verify, pbr, capacity, oracle, demo
        scenario: ScenarioFile, decoded dict or path to a JSON file
        profile: Tolerance profile name; defaults to QEXCLUSION_TOLERANCE_PROFILE
        demo: Demo name for the demo command; None lists the demos
        timing: Attach wall-clock timing (makes output non-deterministic)
        graph_csv: Path for the confusability graph export (capacity only)

    Returns:
        Report; failures are carried in Report.error, never raised
    """
    return handle_command_errors(command)(_run)(command, scenario, profile, demo, timing, graph_csv)


def load_batch(path: Union[str, Path]) -> BatchFile:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise SchemaError(f"Cannot read batch file {path}: {e.strerror}", {"path": str(path)})
    except json.JSONDecodeError as e:
        raise SchemaError(f"Batch file {path} is not valid JSON: {e.msg}", {"line": e.lineno, "column": e.colno})
    return BatchFile.model_validate(data)


def run_batch(batch: BatchFile, profile: Optional[str] = None, workers: int = 4, timing: bool = False) -> List[Report]:
    """Independent reports, in job order, computed on a thread pool."""

    def job_runner(job):
        scenario = job.scenario if job.scenario is not None else job.scenario_path
        return run(job.command, scenario, profile=profile, demo=job.demo, timing=timing)

    logger.info(f"Running batch of {len(batch.jobs)} job(s) with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(job_runner, batch.jobs))


@handle_command_errors(COMMAND_BATCH)
def _batch_report(path: str, profile: Optional[str], workers: int, timing: bool) -> Report:
    batch = load_batch(path)
    reports = run_batch(batch, profile, workers, timing)
    failed = sum(1 for r in reports if r.error is not None)
    return Report(
        command=COMMAND_BATCH,
        payload={"jobs": len(reports), "failed": failed, "reports": [report_to_dict(r) for r in reports]},
        provenance=provenance(get_tolerances(profile)),
    )


# ============================================================================
# CLI
# ============================================================================

def _scenario_from_args(args: argparse.Namespace) -> Union[ScenarioFile, str, None]:
    """Scenario file plus command-line overrides."""
    scenario = load_scenario(args.instance) if getattr(args, "instance", None) else None

    if args.command == COMMAND_PBR:
        scenario = scenario or ScenarioFile()
        pbr = scenario.pbr.model_dump(exclude_none=True) if scenario.pbr is not None else {}
        for key in ("theta", "unit", "n"):
            value = getattr(args, key)
            if value is not None:
                pbr[key] = value
        data = scenario.model_dump(exclude_none=True)
        if pbr.get("theta") is not None or pbr.get("amplitudes") is not None:
            data["pbr"] = pbr
        if args.sweep is not None:
            data.setdefault("options", {})["sweep_degrees"] = args.sweep or list(PBR_CONFIG["sweep_degrees"])
        return ScenarioFile.model_validate(data)

    if args.command == COMMAND_CONSTRUCT and args.full and scenario is not None:
        scenario = scenario.model_copy(update={"options": scenario.options.model_copy(update={"full_effects": True})})

    if args.command == COMMAND_ORACLE and scenario is not None:
        updates = {}
        if args.method is not None:
            updates["oracle_method"] = args.method
        if args.max_iterations is not None:
            updates["max_iterations"] = args.max_iterations
        if args.zero_only:
            updates["zero_only"] = True
        if updates:
            scenario = scenario.model_copy(update={"options": scenario.options.model_copy(update=updates)})
    return scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qexclusion",
        description="Conclusive single-state exclusion for group-orbit quantum states",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--tolerance-profile", default=TOLERANCE_PROFILE, choices=sorted(TOLERANCE_PROFILES))
    parser.add_argument("--timing", action="store_true", help="attach wall-clock timing to the report")
    parser.add_argument("--output", help="write the JSON report to this file instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        (COMMAND_CHECK, "decide excludability"),
        (COMMAND_CONSTRUCT, "decide and emit the POVM or the dual certificate"),
        (COMMAND_VERIFY, "verify a supplied or constructed POVM"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--instance", required=True, help="scenario JSON file")
        if name == COMMAND_CONSTRUCT:
            p.add_argument("--full", action="store_true", help="include the dense seed effect in the report")

    p = sub.add_parser(COMMAND_PBR, help="PBR game: condition, minimal copies, sweep")
    p.add_argument("--instance", help="scenario JSON file with a 'pbr' section")
    p.add_argument("--theta", type=float)
    p.add_argument("--unit", choices=["rad", "deg"])
    p.add_argument("--n", type=int)
    p.add_argument("--sweep", type=float, nargs="*", help="angles in degrees; bare flag uses the default grid")

    p = sub.add_parser(COMMAND_CAPACITY, help="zero-error capacity lower bound")
    p.add_argument("--instance", required=True, help="scenario JSON file")
    p.add_argument("--graph-csv", help="export the confusability graph as a 0/1 CSV matrix")

    p = sub.add_parser(COMMAND_ORACLE, help="numerical SDP cross-check")
    p.add_argument("--instance", required=True, help="scenario JSON file")
    p.add_argument("--method", choices=[ORACLE_METHOD_SPLITTING, ORACLE_METHOD_BISECTION])
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--zero-only", action="store_true", help="only decide alpha = 0 versus alpha > 0")

    p = sub.add_parser(COMMAND_DEMO, help="run a canned scenario; no name lists them")
    p.add_argument("name", nargs="?")

    p = sub.add_parser(COMMAND_BATCH, help="run a batch file of jobs concurrently")
    p.add_argument("--file", required=True)
    p.add_argument("--workers", type=int, default=4)
    return parser


def _cli_report(args: argparse.Namespace) -> Report:
    @handle_command_errors(args.command)
    def execute() -> Report:
        return _run(
            args.command,
            _scenario_from_args(args),
            args.tolerance_profile,
            getattr(args, "name", None),
            args.timing,
            getattr(args, "graph_csv", None),
        )

    return execute()


def _emit(report: Report, output: Optional[str]) -> None:
    text = dumps(report_to_dict(report))
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    if args.command == COMMAND_BATCH:
        report = _batch_report(args.file, args.tolerance_profile, args.workers, args.timing)
    else:
        report = _cli_report(args)

    _emit(report, args.output)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
