"""Command line interface of chi-verify.

Exit codes: 0 equal / pass, 1 not equal / fail, 2 inconclusive, 64 usage or
capability error, 65 corrupt cache file.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import click
import typer
from typing_extensions import Annotated

from chi_verify.algebra import dump_terms
from chi_verify.builder import IdentityBuilder
from chi_verify.config import CONFIG, Config, MinimalConfig
from chi_verify.data import Verdict, VerdictKind
from chi_verify.exceptions import CacheCorruptError, CapabilityError, ContractViolation
from chi_verify.numeric import TestFunctionSpec, check_identity, parse_supports
from chi_verify.verifier import MAX_CONJECTURE_N, check_conjecture, verify_by_cancellation, verify_by_valuations
from chi_verify.zero_oracle import ZeroCache, verify_integrity

log = logging.getLogger("chi_verify")

EX_USAGE = 64
EX_DATAERR = 65


def _click_classes(name: str, *typer_classes: type) -> tuple[type[BaseException], ...]:
    # newer typer raises the exceptions of its bundled click copy
    found = [getattr(click.exceptions, name)]
    for cls in typer_classes:
        found += [c for c in cls.__mro__ if c.__name__ == name and c not in found]
    return tuple(found)


USAGE_ERRORS = _click_classes("UsageError", typer.BadParameter)
EXIT_SIGNALS = _click_classes("Exit", typer.Exit)


class Method(str, Enum):
    """Verification method selectable with ``--method``."""

    cancel = "cancel"
    valuations = "valuations"
    both = "both"


@dataclass
class RunConfig:
    """Everything a command needs, built from its flags over ``CONFIG``."""

    command: str
    n: int = 1
    method: Method = Method.cancel
    cache_dir: Path | None = None
    emit_terms: Path | None = None
    workers: int = 1
    supports: tuple[Fraction, ...] = ()
    grid: int = CONFIG.grid
    tol: float = CONFIG.tol
    config: Config = field(default_factory=lambda: CONFIG)

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolation(f"--n must be at least 1, got {self.n}")
        if self.workers < 1:
            raise ContractViolation(f"--workers must be at least 1, got {self.workers}")
        overrides: MinimalConfig = {"workers": self.workers, "grid": self.grid, "tol": self.tol}
        if self.cache_dir is not None:
            overrides["cache_dir"] = self.cache_dir
        self.config = self.config.override(overrides)
        limit = self.config.max_sampled_valuations
        if self.method in (Method.valuations, Method.both) and self.n > limit:
            raise CapabilityError(f"--method {self.method.value} supports n <= {limit}, got {self.n}")

    @property
    def methods(self) -> list[str]:
        """Return the methods to run, in order."""
        if self.method is Method.both:
            return ["cancel", "valuations"]
        return [self.method.value]

    def open_cache(self) -> ZeroCache:
        """Load the zero cache of the configured directory."""
        return ZeroCache.load(self.config.cache_file)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def combined_exit_code(verdicts: list[Verdict]) -> int:
    """Return 1 if any verdict is NotEqual, else 0 if any is ProvedEqual, else 2."""
    kinds = {v.kind for v in verdicts}
    if VerdictKind.NOT_EQUAL in kinds:
        return 1
    if VerdictKind.PROVED_EQUAL in kinds:
        return 0
    return 2


app = typer.Typer(
    help="Verify the Fourier identity for a ground set of size n.",
    no_args_is_help=True,
    add_completion=False,
)
cache_app = typer.Typer(help="Inspect and maintain the zero cache.", no_args_is_help=True)
app.add_typer(cache_app, name="cache")

NOption = Annotated[int, typer.Option("--n", help="Size of the ground set.")]
CacheDirOption = Annotated[
    Path | None,
    typer.Option("--cache-dir", help="Directory of the zero cache [env CHI_VERIFY_CACHE_DIR]."),
]
WorkersOption = Annotated[
    int, typer.Option("--workers", help="Worker processes for the J shards.")
]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Log debug output.")]


@app.command()
def verify(
    n: NOption,
    method: Annotated[Method, typer.Option("--method", help="Decision method.")] = Method.cancel,
    cache_dir: CacheDirOption = None,
    emit_terms: Annotated[
        Path | None, typer.Option("--emit-terms", help="Write the left hand side as JSON lines.")
    ] = None,
    workers: WorkersOption = CONFIG.workers,
    verbose: VerboseOption = False,
):
    """Build both sides and decide whether they are equal."""
    _setup_logging(verbose)
    cfg = RunConfig("verify", n=n, method=method, cache_dir=cache_dir, emit_terms=emit_terms, workers=workers)
    verdicts = []
    with cfg.open_cache() as cache:
        builder = IdentityBuilder(n, zero_elim=True, cache=cache, workers=cfg.config.workers)
        lhs = builder.lhs_canonical()
        rhs = builder.rhs()
        if cfg.emit_terms is not None:
            with open(cfg.emit_terms, "w", encoding="utf-8") as fp:
                lines = dump_terms(lhs, fp)
            log.info(f"Wrote {lines} terms to {cfg.emit_terms}")
        for name in cfg.methods:
            if name == "cancel":
                verdict = verify_by_cancellation(lhs, rhs, cache)
                verdict.stats.update(
                    raw_monomials=builder.stats.raw_monomials,
                    eliminated=builder.stats.eliminated,
                    shards=builder.stats.shards,
                )
            else:
                verdict = verify_by_valuations(n, cache, lhs, rhs)
            verdicts.append(verdict)
            typer.echo(verdict.to_json())
    raise typer.Exit(combined_exit_code(verdicts))


@app.command()
def conjecture(
    n: NOption,
    cache_dir: CacheDirOption = None,
    verbose: VerboseOption = False,
):
    """Compare every inner sum with its conjectured simple form."""
    _setup_logging(verbose)
    if n > MAX_CONJECTURE_N:
        raise CapabilityError(f"conjecture supports n <= {MAX_CONJECTURE_N}, got {n}")
    cfg = RunConfig("conjecture", n=n, cache_dir=cache_dir)
    with cfg.open_cache() as cache:
        rows = check_conjecture(n, cache)
    typer.echo(f"{'J':<14} result")
    for row in rows:
        typer.echo(row.describe())
    raise typer.Exit(0 if all(r.passed for r in rows) else 1)


@cache_app.command()
def stats(cache_dir: CacheDirOption = None, verbose: VerboseOption = False):
    """Print the number of stored verdicts."""
    _setup_logging(verbose)
    cfg = RunConfig("cache stats", cache_dir=cache_dir)
    with cfg.open_cache() as cache:
        s = cache.stats()
    typer.echo(f"entries: {s.entries}")
    typer.echo(f"zero: {s.zeros}")
    typer.echo(f"nonzero: {s.nonzeros}")
    raise typer.Exit(0)


@cache_app.command()
def warm(
    n: NOption,
    cache_dir: CacheDirOption = None,
    workers: WorkersOption = CONFIG.workers,
    verbose: VerboseOption = False,
):
    """Store the verdict of every product met while building the left hand side."""
    _setup_logging(verbose)
    cfg = RunConfig("cache warm", n=n, cache_dir=cache_dir, workers=workers)
    with cfg.open_cache() as cache:
        before = len(cache)
        IdentityBuilder(n, zero_elim=True, cache=cache, workers=cfg.config.workers).lhs_canonical()
        typer.echo(f"entries: {len(cache)} (+{len(cache) - before})")
    raise typer.Exit(0)


@cache_app.command("verify-integrity")
def verify_integrity_cmd(cache_dir: CacheDirOption = None, verbose: VerboseOption = False):
    """Re-run the exact test on a random sample of the stored verdicts."""
    _setup_logging(verbose)
    cfg = RunConfig("cache verify-integrity", cache_dir=cache_dir)
    with cfg.open_cache() as cache:
        bad = verify_integrity(cache, cfg.config.integrity_fraction, cfg.config.seed)
    for n, key in bad:
        typer.echo(f"mismatch: n={n} sets={list(key)}")
    typer.echo("ok" if not bad else f"{len(bad)} mismatches")
    raise typer.Exit(1 if bad else 0)


@app.command("numeric-check")
def numeric_check(
    n: NOption,
    supports: Annotated[str, typer.Option("--supports", help="Comma separated δ_i, e.g. 3/8,1/4.")],
    grid: Annotated[int, typer.Option("--grid", help="Grid points per unit length.")] = CONFIG.grid,
    tol: Annotated[float, typer.Option("--tol", help="Absolute floor of the tolerance.")] = CONFIG.tol,
    verbose: VerboseOption = False,
):
    """Compare both sides of the identity as integrals."""
    _setup_logging(verbose)
    cfg = RunConfig("numeric-check", n=n, supports=parse_supports(supports), grid=grid, tol=tol)
    if len(cfg.supports) != n:
        raise ContractViolation(f"--supports needs {n} values, got {len(cfg.supports)}")
    report = check_identity(TestFunctionSpec(cfg.supports, cfg.config.grid), cfg.config.tol)
    typer.echo(report.describe())
    raise typer.Exit(0 if report.passed else 1)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI on ``argv`` and return the exit code."""
    command = typer.main.get_command(app)
    try:
        rv = command.main(
            args=list(sys.argv[1:] if argv is None else argv),
            prog_name="chi-verify",
            standalone_mode=False,
        )
    except USAGE_ERRORS as e:
        typer.echo(f"Error: {e.format_message()}", err=True)
        return EX_USAGE
    except (CapabilityError, ContractViolation) as e:
        typer.echo(f"Error: {e}", err=True)
        return EX_USAGE
    except CacheCorruptError as e:
        typer.echo(f"Error: {e}", err=True)
        return EX_DATAERR
    except EXIT_SIGNALS as e:
        return e.exit_code
    return rv if isinstance(rv, int) else 0


def run() -> None:
    """Entry point of the console script."""
    sys.exit(main())
