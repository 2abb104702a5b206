import click
import sys
import lie.nilsoliton.internal as internal


# ---------------------------------------------------------------------------------------
# NILSOLITON
# ---------------------------------------------------------------------------------------
#
# This is the entry point to run nilsoliton as a command line interface.
#
@click.group(no_args_is_help=True)
def nilsoliton():
    pass


def _analyze(command, **kwargs):
    try:
        code = internal.analyze(command, **kwargs)
    except ValueError as ve:
        internal.logger.error(str(ve))
        click.echo(internal.error_document(ve))
        code = 1
    sys.exit(code)


def _input(f):
    return click.argument("input_file", metavar="ALGEBRA")(f)


def _common(f):
    f = click.option(
        "--quiet", "-q", is_flag=True, default=False, help="Suppress the summary on stderr."
    )(f)
    f = click.option(
        "--timings",
        is_flag=True,
        default=False,
        help="Include wall-times in the report.",
    )(f)
    f = click.option(
        "--seed",
        type=click.IntRange(min=0),
        default=0,
        envvar="NILSOLITON_SEED",
        show_default=True,
        help="Seed for every randomized step.",
    )(f)
    return f


def _search(f):
    f = click.option(
        "--search",
        type=click.IntRange(min=0),
        default=None,
        help="Number of φ-diagonalizing frames to sample.",
    )(f)
    f = click.option(
        "--nprocs", "-j", type=click.IntRange(min=1), default=1, help="How many workers to use."
    )(f)
    return f


def _flow(f):
    f = click.option("--max-iter", type=int, default=None, help="Flow iteration limit.")(f)
    f = click.option("--tol", type=float, default=None, help="Flow gradient tolerance.")(f)
    f = click.option(
        "--config",
        type=click.Path(exists=True),
        default=None,
        help="Flow configuration JSON file.",
    )(f)
    return f


# ---------------------------------------------------------------------------------------
# NILSOLITON VALIDATE / DER / PRE-EINSTEIN / RICCI
# ---------------------------------------------------------------------------------------
#
# These commands report one stage of the analysis.
#
@click.command(
    name="validate",
    no_args_is_help=True,
    epilog="""

**Usage**

Check the Jacobi identity and nilpotency of an algebra document.

.. code:: console

  \b
  $ nilsoliton validate algebra.json
  $ nilsoliton corpus n4 | nilsoliton validate -

""",
)
@_input
@_common
def nilsoliton_validate(**kwargs):
    """Check that a bracket is a nilpotent Lie bracket."""
    _analyze("validate", **kwargs)


@click.command(name="der", no_args_is_help=True)
@_input
@_common
def nilsoliton_der(**kwargs):
    """Compute a basis of the derivation algebra."""
    _analyze("der", **kwargs)


@click.command(name="pre-einstein", no_args_is_help=True)
@_input
@_common
def nilsoliton_pre_einstein(**kwargs):
    """Solve for the pre-Einstein derivation and its working frame."""
    _analyze("pre-einstein", **kwargs)


@click.command(name="ricci", no_args_is_help=True)
@_input
@_common
def nilsoliton_ricci(**kwargs):
    """Ricci endomorphism and soliton residual of the working-frame metric."""
    _analyze("ricci", **kwargs)


nilsoliton.add_command(nilsoliton_validate)
nilsoliton.add_command(nilsoliton_der)
nilsoliton.add_command(nilsoliton_pre_einstein)
nilsoliton.add_command(nilsoliton_ricci)


# ---------------------------------------------------------------------------------------
# NILSOLITON NU
# ---------------------------------------------------------------------------------------
#
# This is the entry point to run NILSOLITON NU command.
#
@click.command(
    name="nu",
    no_args_is_help=True,
    epilog="""

**Usage**

The lambda file holds a symmetric matrix in the frame of the algebra document.

.. code:: console

  \b
  $ echo '{"dim": 4, "rows": [[0,0,0,0],[0,0,0,0],[0,0,1,0],[0,0,0,0]]}' > lam.json
  $ nilsoliton nu corpus:n4 --lambda lam.json

""",
)
@_input
@click.option(
    "--lambda",
    "lambda_file",
    type=click.Path(exists=True),
    required=True,
    help="Lambda document with a symmetric matrix.",
)
@_common
def nilsoliton_nu(**kwargs):
    """Hilbert-Mumford weight of a symmetric endomorphism."""
    _analyze("nu", **kwargs)


nilsoliton.add_command(nilsoliton_nu)


# ---------------------------------------------------------------------------------------
# NILSOLITON CRITERION / FLOW / REPORT
# ---------------------------------------------------------------------------------------
#
# These commands can decide existence. Exit codes are 0 for a certified soliton, 10 for
# a certified obstruction, 20 for inconclusive and 1 for rejected input.
#
@click.command(
    name="criterion",
    no_args_is_help=True,
    epilog="""

**Usage**

Test the working frame, then 200 random φ-diagonalizing frames on 4 workers.

.. code:: console

  \b
  $ nilsoliton criterion corpus:h5
  $ nilsoliton criterion corpus:h5 --search 200 -j4 --seed 7

""",
)
@_input
@_search
@_common
def nilsoliton_criterion(**kwargs):
    """Convex hull criterion, optionally with a search over frames."""
    _analyze("criterion", **kwargs)


@click.command(
    name="flow",
    no_args_is_help=True,
    epilog="""

**Usage**

.. code:: console

  \b
  $ nilsoliton flow corpus:L5 --max-iter 2000 --tol 1e-10

""",
)
@_input
@_flow
@_common
def nilsoliton_flow(**kwargs):
    """Gradient flow of the Kempf-Ness energy."""
    _analyze("flow", **kwargs)


@click.command(
    name="report",
    no_args_is_help=True,
    epilog="""

**Usage**

Run the whole analysis and keep the report.

.. code:: console

  \b
  $ nilsoliton report algebra.json > report.json
  $ nilsoliton certify algebra.json report.json

""",
)
@_input
@_search
@_flow
@_common
def nilsoliton_report(**kwargs):
    """Full analysis: validation, obstructions, criterion and flow."""
    _analyze("report", **kwargs)


nilsoliton.add_command(nilsoliton_criterion)
nilsoliton.add_command(nilsoliton_flow)
nilsoliton.add_command(nilsoliton_report)


# ---------------------------------------------------------------------------------------
# NILSOLITON CERTIFY
# ---------------------------------------------------------------------------------------
#
# This is the entry point to run NILSOLITON CERTIFY command.
#
@click.command(name="certify", no_args_is_help=True)
@_input
@click.argument("certificate_file", metavar="CERTIFICATE", type=click.Path(exists=True))
@_common
def nilsoliton_certify(**kwargs):
    """Independently re-check a certificate, bare or inside a report."""
    _analyze("certify", **kwargs)


nilsoliton.add_command(nilsoliton_certify)


# ---------------------------------------------------------------------------------------
# NILSOLITON CORPUS
# ---------------------------------------------------------------------------------------
#
# This is the entry point to run NILSOLITON CORPUS command.
#
@click.command(
    name="corpus",
    epilog="""

**Usage**

.. code:: console

  \b
  $ nilsoliton corpus --list
  $ nilsoliton corpus free23 > free23.json

""",
)
@click.argument("name", type=str, required=False)
@click.option(
    "--list",
    "-l",
    "list_",
    is_flag=True,
    default=False,
    help="List all built-in algebras and exit.",
)
@internal.copy_doc(internal.corpus)
def nilsoliton_corpus(**kwargs):
    try:
        internal.corpus(**kwargs)
    except ValueError as ve:
        internal.logger.error(str(ve))
        click.echo(internal.error_document(ve))
        sys.exit(1)


nilsoliton.add_command(nilsoliton_corpus)


# ---------------------------------------------------------------------------------------
# NILSOLITON SCHEMA
# ---------------------------------------------------------------------------------------
#
# This is the entry point to run NILSOLITON SCHEMA command.
#
@click.command(name="schema", no_args_is_help=True)
@click.argument(
    "name",
    type=click.Choice(["algebra", "lambda", "flow-config", "certificate", "report"]),
)
@internal.copy_doc(internal.schema)
def nilsoliton_schema(**kwargs):
    try:
        internal.schema(**kwargs)
    except ValueError as ve:
        internal.logger.error(str(ve))
        click.echo(internal.error_document(ve))
        sys.exit(1)


nilsoliton.add_command(nilsoliton_schema)


if __name__ == "__main__":
    nilsoliton()
