"""
Argument parsing for the condpoisson command line.

Usage errors exit with 64. Ranges are written "3..64", lists "3,5,7" and
counts may use exponent notation ("1e6").
"""
import argparse
import sys
from typing import List, Optional, Sequence

from entities.job_config import OutputFormat
from entities.reports import BoxConvention

USAGE_EXIT = 64

VERIFY_TARGETS = ('psi', 'gk', 'mk', 'h-ineq')
SCAN_QUANTITIES = ('an', 'beta', 'tailsum', 'chain')
SANDWICH_CHECKS = ('box', 'pointwise', 'tails')


class UsageExitParser(argparse.ArgumentParser):
    """ArgumentParser that exits with 64 on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def int_list(text: str) -> List[int]:
    """'3..64', '3,5,7' or '3'."""
    try:
        if '..' in text:
            lo, hi = text.split('..', 1)
            lo_value, hi_value = int(lo), int(hi)
            if hi_value < lo_value:
                raise ValueError
            return list(range(lo_value, hi_value + 1))
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range or list: {text!r}")


def table_sizes(text: str) -> List[int]:
    values = int_list(text)
    if not values or min(values) < 3:
        raise argparse.ArgumentTypeError(f"k must be at least 3, got {text!r}")
    return values


def table_size(text: str) -> int:
    values = table_sizes(text)
    if len(values) != 1:
        raise argparse.ArgumentTypeError(f"expected a single k, got {text!r}")
    return values[0]


def count(text: str) -> int:
    """Nonnegative integer, exponent notation allowed."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count: {text!r}")
    if value < 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"count must be a nonnegative integer, got {text!r}")
    return int(value)


def positive_int(text: str) -> int:
    value = count(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return value


def _output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--output', '-o', help="artifact path; defaults to <subcommand>_<config hash>")


def build_parser() -> UsageExitParser:
    parser = UsageExitParser(prog='condpoisson', description="Verification of the conditioned Poisson bounds")
    commands = parser.add_subparsers(dest='command', required=True, parser_class=UsageExitParser)

    verify = commands.add_parser('verify', help="certify a scalar inequality")
    verify.add_argument('target', choices=VERIFY_TARGETS)
    verify.add_argument('--k', type=table_sizes, help="table size, range or list (gk, mk, h-ineq)")
    verify.add_argument('--tmax', type=positive_float, default=1e6, help="start of the psi tail zone")
    verify.add_argument('--tol', type=positive_float, default=1e-12, help="smallest psi cell width")
    verify.add_argument('--mode', choices=('certified', 'sampled'), default='certified')
    verify.add_argument('--samples', type=positive_int, default=100_000)
    verify.add_argument('--starts', type=positive_int, default=1_000)
    verify.add_argument('--seed', type=count, default=0)
    _output(verify)

    scan = commands.add_parser('scan', help="exact finite-n quantities over a range of B")
    scan.add_argument('quantity', choices=SCAN_QUANTITIES)
    scan.add_argument('--k', type=table_size, required=True)
    scan.add_argument('--c', type=nonnegative_float)
    scan.add_argument('--B', type=int_list, required=True, dest='B_values')
    scan.add_argument('--delta', type=positive_float)
    scan.add_argument('--budget', type=positive_int, default=100_000_000)
    scan.add_argument('--tail-from-B', type=positive_int)
    _output(scan)

    sandwich = commands.add_parser('sandwich', help="finite-n local limit sandwich")
    sandwich.add_argument('--k', type=table_size, required=True)
    sandwich.add_argument('--n', type=positive_int, required=True)
    sandwich.add_argument('--theta', type=positive_float, help="omit to search the minimal theta")
    sandwich.add_argument('--delta', type=positive_float, default=0.05)
    sandwich.add_argument('--check', choices=SANDWICH_CHECKS, default='box')
    sandwich.add_argument('--convention', choices=[c.value for c in BoxConvention],
                          default=BoxConvention.CENTERED.value)
    sandwich.add_argument('--box-budget', type=positive_int, default=100_000)
    _output(sandwich)

    sample = commands.add_parser('sample', help="draw tables from the conditional law")
    sample.add_argument('--k', type=table_size, required=True)
    sample.add_argument('--B', type=positive_int, required=True)
    sample.add_argument('--steps', type=count, required=True, help="proposals (mcmc) or draws (rejection)")
    sample.add_argument('--seed', type=count, required=True)
    sample.add_argument('--sampler', choices=('mcmc', 'rejection'), default='mcmc')
    sample.add_argument('--chains', type=positive_int, default=1)
    sample.add_argument('--burn-in', type=count, default=10_000)
    sample.add_argument('--thin', type=positive_int, default=10)
    _output(sample)

    gof = commands.add_parser('gof', help="chi-square fit and exponential moment")
    gof.add_argument('--k', type=table_size, required=True)
    gof.add_argument('--B', type=positive_int, required=True)
    gof.add_argument('--c', type=nonnegative_float, required=True)
    gof.add_argument('--mode', choices=('exact', 'mcmc'), default='exact')
    gof.add_argument('--theta', type=positive_float, default=1.05)
    gof.add_argument('--delta', type=positive_float, default=1.0)
    gof.add_argument('--steps', type=count, default=1_000_000)
    gof.add_argument('--seed', type=count, default=0)
    gof.add_argument('--chains', type=positive_int, default=1)
    _output(gof)

    plot = commands.add_parser('plot-mk', help="M_k(b) on a grid for external plotting")
    plot.add_argument('--k', type=table_sizes, required=True, dest='k_values')
    plot.add_argument('--b-step', type=positive_float, default=0.01)
    _output(plot)

    return parser


def output_format(command: str) -> OutputFormat:
    return OutputFormat.CSV if command in ('scan', 'sample', 'plot-mk') else OutputFormat.JSON


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)
