"""
Subcommands of the condpoisson command line.

Every command writes exactly one artifact (JSON report or CSV table) whose
header embeds the job config and its hash, then returns the exit code:
0 success or VERIFIED, 1 FAILED, 2 INCONCLUSIVE, 3 budget exceeded,
64 usage error. run_cli.py maps an unexpected exception to 70.
"""
import argparse
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cli.parser import USAGE_EXIT, output_format, parse_args
from entities.certificate import Certificate, Verdict
from entities.job_config import JobConfig
from entities.margin_table import MarginTable
from entities.reports import BoxConvention
from entities.scan_result import ScanQuantity
from entities.table_artifact import TableArtifact
from repositories.repository_factory import RepositoryFactory, RepositoryType
from services.certify.claims import verify_gk_nonneg, verify_Mk_nonneg, verify_psi_lower
from services.certify.h_ineq import ProofMode, verify_h_ineq
from services.certify.prover import composite
from services.cond_dist.gof import gof_and_moment
from services.cond_dist.model import build_table_model
from services.cond_dist.samplers import empirical_tv, mcmc_sampler, rejection_sampler, sample_records
from services.cond_dist.sandwich import (
    largest_pointwise_delta,
    pointwise_check,
    sandwich_check,
    tails_bound_check,
)
from services.errors import BudgetExceededError, DomainError, ParameterError, VerificationError
from services.scalar_fn.rate_functions import concave_interval_closed_form, m_k
from services.tables.enumeration import count_Hk
from services.tables.quantities import an_scan, cond_pmf_p2, prob_Y_in_Hk

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INCONCLUSIVE = 2
EXIT_BUDGET = 3
EXIT_ERROR = 70                 # unexpected exception, sysexits EX_SOFTWARE

THREADS_ENV = 'CONDPOISSON_THREADS'
EXACT_TV_LIMIT = 1_000_000

SCAN_COLUMNS = ['n', 'B', 'c', 'A_n', 'beta_n', 'bound1', 'expmoment', 'ratio']
TAILSUM_COLUMNS = ['delta', 'tail_lhs', 'tail_quadratic', 'tail_shell_bound', 'tail_budget']
SAMPLE_COLUMNS = ['chain', 'step', 'table_hash', 'chi_square']
PLOT_COLUMNS = ['k', 'b', 'M_k', 'in_Ik']

_VERDICT_EXIT = {
    Verdict.VERIFIED: EXIT_OK,
    Verdict.FAILED: EXIT_FAILED,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def thread_count() -> int:
    """Worker threads from CONDPOISSON_THREADS, default 1."""
    value = os.getenv(THREADS_ENV, '1')
    try:
        threads = int(value)
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    if threads < 1:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return threads


def job_config(args: argparse.Namespace) -> JobConfig:
    parameters = {key: value for key, value in vars(args).items() if key not in ('command', 'output')}
    return JobConfig(subcommand=args.command, parameters=parameters, output=args.output,
                     format=output_format(args.command))


def artifact_location(config: JobConfig) -> Tuple[Path, str]:
    """Root directory and id of the artifact; a matching suffix is dropped from the id."""
    suffix = f".{config.format.value}"
    if config.output is None:
        return Path('.'), f"{config.subcommand.replace('-', '_')}_{config.content_hash()[:12]}"
    path = Path(config.output)
    name = path.name[:-len(suffix)] if path.name.endswith(suffix) else path.name
    return path.parent, name


def write_json(config: JobConfig, artifact) -> Path:
    root, artifact_id = artifact_location(config)
    repository = RepositoryFactory.create(RepositoryType.JSON, root, type(artifact), config=config)
    repository.save_as(artifact_id, artifact)
    return repository.path_for(artifact_id)


def write_csv(config: JobConfig, table: TableArtifact) -> Path:
    root, artifact_id = artifact_location(config)
    table.artifact_id = artifact_id
    table.config = config
    repository = RepositoryFactory.create(RepositoryType.CSV, root)
    repository.save(table)
    return repository.path_for(artifact_id)


def _report(command: str, summary: str, path: Path) -> None:
    print(f"{command}: {summary} -> {path}")


# verify

def _verify_one(target: str, k: int, args: argparse.Namespace) -> Certificate:
    if target == 'gk':
        return verify_gk_nonneg(k)
    if target == 'mk':
        return verify_Mk_nonneg(k)
    if args.mode == ProofMode.SAMPLED.value:
        return verify_h_ineq(k, ProofMode.SAMPLED, samples=args.samples, starts=args.starts, seed=args.seed)
    return verify_h_ineq(k, ProofMode.CERTIFIED)


def cmd_verify(args: argparse.Namespace) -> int:
    config = job_config(args)
    if args.target == 'psi':
        certificate = verify_psi_lower(t_max=args.tmax, tol=args.tol)
    else:
        if not args.k:
            raise ParameterError(f"verify {args.target} needs --k")
        with ThreadPoolExecutor(max_workers=thread_count()) as pool:
            children = list(pool.map(lambda k: _verify_one(args.target, k, args), args.k))
        if len(children) == 1:
            certificate = children[0]
        else:
            certificate = composite(
                f"verify.{args.target}", children,
                parameters={'k_min': min(args.k), 'k_max': max(args.k), 'target': args.target},
            )
    path = write_json(config, certificate)
    _report('verify', f"{args.target} {certificate.verdict.value}", path)
    return _VERDICT_EXIT[certificate.verdict]


# scan

def cmd_scan(args: argparse.Namespace) -> int:
    config = job_config(args)
    quantity = ScanQuantity(args.quantity)
    result = an_scan(args.k, args.c, args.B_values, quantity=quantity, delta=args.delta,
                     budget=args.budget, tail_from_B=args.tail_from_B, workers=thread_count())
    columns = SCAN_COLUMNS + (TAILSUM_COLUMNS if quantity is ScanQuantity.TAILSUM else [])
    table = TableArtifact(artifact_id='scan', columns=columns)
    for row in result.rows:
        table.add_row({column: getattr(row, column) for column in columns})
    table.metadata = {
        'quantity': quantity.value,
        'k': str(args.k),
        'max_value': _fmt(result.max_value),
        'argmax_n': _fmt(result.argmax_n),
        'tail_from_B': _fmt(result.tail_from_B),
        'tail_slope': _fmt(result.tail_slope),
        'partial': str(result.partial).lower(),
    }
    path = write_csv(config, table)
    _report('scan', f"{quantity.value} {len(result.rows)} rows, tail slope {_fmt(result.tail_slope)}", path)
    return EXIT_BUDGET if result.partial else EXIT_OK


def _fmt(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return '%.17g' % value
    return str(value)


# sandwich

def cmd_sandwich(args: argparse.Namespace) -> int:
    config = job_config(args)
    model = build_table_model(args.k, args.n)
    if args.check == 'box':
        report = sandwich_check(model, theta=args.theta, delta=args.delta,
                                convention=BoxConvention(args.convention), box_budget=args.box_budget)
        path = write_json(config, report)
        _report('sandwich', f"theta {_fmt(report.theta)} {report.verdict.value}", path)
        return _VERDICT_EXIT[report.verdict]

    if args.check == 'pointwise':
        theta = args.theta or 2.0
        report = pointwise_check(model, theta, args.delta)
        if args.theta is None and report.theta_min is not None and np.isfinite(report.theta_min):
            theta = max(report.theta_min, 1.0 + 1e-9)
            report = pointwise_check(model, theta, args.delta)
        report.largest_delta = largest_pointwise_delta(model, theta)
        path = write_json(config, report)
        _report('sandwich', f"pointwise theta {_fmt(report.theta)} passed={report.passed}", path)
        if not report.checked:
            return EXIT_INCONCLUSIVE
        return EXIT_OK if report.passed else EXIT_FAILED

    report = tails_bound_check(model, args.delta, convention=BoxConvention(args.convention),
                               box_budget=args.box_budget)
    path = write_json(config, report)
    holds = report.exact_tail <= report.bound
    _report('sandwich', f"tails exact {_fmt(report.exact_tail)} bound {_fmt(report.bound)}", path)
    return EXIT_OK if holds else EXIT_FAILED


# sample

def _mcmc_chains(model, args: argparse.Namespace) -> List[List[MarginTable]]:
    """One mcmc_sampler stream per chain, seeded by SeedSequence(seed).spawn(chains)."""
    children = np.random.SeedSequence(args.seed).spawn(args.chains)

    def run_chain(child: np.random.SeedSequence) -> List[MarginTable]:
        return list(mcmc_sampler(model, args.steps, child, burn_in=args.burn_in, thin=args.thin))

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return list(pool.map(run_chain, children))


def cmd_sample(args: argparse.Namespace) -> int:
    config = job_config(args)
    k, B = args.k, args.B
    model = build_table_model(k, k * B)
    table = TableArtifact(artifact_id='sample', columns=SAMPLE_COLUMNS)
    exact_ok = count_Hk(k, B) <= EXACT_TV_LIMIT

    if args.sampler == 'mcmc':
        per_chain = _mcmc_chains(model, args)
        for chain, tables in enumerate(per_chain):
            for record in sample_records(iter(tables), thin=args.thin):
                table.add_row({'chain': chain, **record})
        samples = np.array([drawn.flat() for tables in per_chain for drawn in tables],
                           dtype=np.int64).reshape(-1, k * k)
        table.metadata['samples'] = str(samples.shape[0])
        summary = f"{samples.shape[0]} tables"
        if exact_ok and samples.shape[0]:
            tv = empirical_tv(samples, cond_pmf_p2(k, B))
            table.metadata['tv_exact'] = _fmt(tv)
            summary += f", TV to exact law {tv:.4f}"
    else:
        accepted = 0
        for record in sample_records(rejection_sampler(model, args.seed, max_draws=args.steps), thin=1):
            table.add_row({'chain': 0, **record})
            accepted += 1
        table.metadata.update({'draws': str(args.steps), 'accepted': str(accepted),
                               'acceptance_rate': _fmt(accepted / args.steps if args.steps else 0.0)})
        summary = f"acceptance {accepted}/{args.steps}"
        if exact_ok:
            table.metadata['prob_exact'] = _fmt(prob_Y_in_Hk(k, B))
            summary += f", exact {prob_Y_in_Hk(k, B):.6g}"

    path = write_csv(config, table)
    _report('sample', summary, path)
    return EXIT_OK


# gof

def cmd_gof(args: argparse.Namespace) -> int:
    config = job_config(args)
    model = build_table_model(args.k, args.k * args.B)
    report = gof_and_moment(model, args.c, mode=args.mode, theta=args.theta, delta=args.delta,
                            steps=args.steps, seed=args.seed, chains=args.chains, workers=thread_count())
    path = write_json(config, report)
    _report('gof', f"moment {_fmt(report.moment)}, KS {_fmt(report.ks_distance)}", path)
    return EXIT_OK


# plot-mk

def mk_grid(k: int, b_step: float) -> np.ndarray:
    """0, b_step, ... up to k-1, with k-1 itself as the last point."""
    k1 = float(k - 1)
    grid = np.arange(0.0, k1, b_step)
    return np.append(grid, k1)


def cmd_plot_mk(args: argparse.Namespace) -> int:
    config = job_config(args)
    table = TableArtifact(artifact_id='plot_mk', columns=PLOT_COLUMNS)
    for k in args.k_values:
        interval = concave_interval_closed_form(k)
        table.metadata[f"I_{k}"] = 'empty' if interval is None else f"{interval[0]:.17g},{interval[1]:.17g}"
        for b in mk_grid(k, args.b_step):
            inside = interval is not None and interval[0] <= b <= interval[1]
            table.add_row({'k': k, 'b': float(b), 'M_k': m_k(float(b), k).value, 'in_Ik': inside})
    path = write_csv(config, table)
    _report('plot-mk', f"{len(table.rows)} points for k in {args.k_values}", path)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    'verify': cmd_verify,
    'scan': cmd_scan,
    'sandwich': cmd_sandwich,
    'sample': cmd_sample,
    'gof': cmd_gof,
    'plot-mk': cmd_plot_mk,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the subcommand and map failures to exit codes.
    """
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    logger.info(f"Attempting {args.command}")
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, DomainError) as e:
        logger.error(f"Invalid parameters for {args.command}: {str(e)}")
        return USAGE_EXIT
    except BudgetExceededError as e:
        logger.error(f"Budget exceeded in {args.command}: {str(e)}")
        return EXIT_BUDGET
    except VerificationError as e:
        logger.error(f"Could not finish {args.command}: {str(e)}")
        return EXIT_INCONCLUSIVE
