"""Command-line front end.

Every command is a pure function of its input files, flags and seed, and
writes LF-terminated text. Exit codes: 0 success, 1 a verification suite found
a violation, 2 malformed input or parameters, 3 a support violation, 4 a
numerical routine failed to converge or exceeded its budget.
"""
import sys

import click
import numpy as np

from . import __version__
from . import coding as cd
from . import classical as cl
from . import converse as cv
from . import divergence as dv
from . import formats as fm
from . import quantum as qu
from . import renyi as ry
from . import suites as su
from .errors import (BudgetExceeded, GridExhausted, Intractable, MalformedInput, NoConvergence,
                     QdivError, SupportViolation)

EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_SUPPORT = 3
EXIT_NUMERIC = 4

DEFAULT_REPORT_ALPHAS = "0.55,0.7,0.85,0.95"


# ---------------------------------------------------------------- formatting and plumbing

def format_value(x):
    """15 significant digits; infinities print as ``inf`` / ``-inf``."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x + 0.0, ".15g")


def format_csv(x):
    """Shortest round-trip repr; infinities print as ``+inf`` / ``-inf``."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return repr(x + 0.0)


def _emit(text, out):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _die(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run_guarded(fn):
    try:
        return fn()
    except SupportViolation as exc:
        _die(EXIT_SUPPORT, f"support violation: {exc}")
    except (NoConvergence, GridExhausted, BudgetExceeded, Intractable) as exc:
        _die(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    except (QdivError, ValueError, OSError) as exc:
        _die(EXIT_INPUT, f"{type(exc).__name__}: {exc}")


def _grid(text, convert=float, what="grid"):
    """Comma separated values; the empty string is the empty grid."""
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        return [convert(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"cannot parse {what} {text!r}") from None


def _csv(header, rows):
    lines = [header] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- compute

def _load_state(path):
    """A QMTX density matrix, or a QMTX column vector taken as a pure state."""
    M = fm.parse_qmtx(path)
    if M.shape[1] == 1 and M.shape[0] > 1:
        return qu.proj(M[:, 0])
    if M.shape[0] != M.shape[1]:
        raise MalformedInput(f"operand {path} is {M.shape[0]}x{M.shape[1]}, not square")
    return M


def _split_dims(dims_text, total, parts):
    if dims_text:
        dims = _grid(dims_text, int, "dims")
        if len(dims) != parts or int(np.prod(dims)) != total:
            raise MalformedInput(f"--dims {dims_text} does not split dimension {total} into {parts} factors")
        return dims
    root = round(total ** (1.0 / parts))
    if root ** parts != total:
        raise MalformedInput(f"cannot infer {parts} equal factors of {total}; pass --dims")
    return [root] * parts


def _need(opts, key):
    if opts[key] is None:
        raise MalformedInput(f"this quantity needs --{key}")
    return opts[key]


def _two(f):
    return 2, lambda ops, o: [("", f(ops[0], ops[1], o))]


def _q_salpha(ops, o):
    a = 1.0 if o["alpha"] is None else o["alpha"]
    return [("", ry.renyi_entropy(ops[0], a))]


def _q_bipartite(exact, renyi):
    def run(ops, o):
        dims = _split_dims(o["dims"], ops[0].shape[0], 2)
        if o["alpha"] is None or o["alpha"] == 1:
            return [("", exact(ops[0], dims))]
        return [("", renyi(ops[0], dims, o["alpha"]).value)]
    return 1, run


def _q_cmi(ops, o):
    dims = _split_dims(o["dims"], ops[0].shape[0], 3)
    if o["alpha"] is None or o["alpha"] == 1:
        return [("", ry.conditional_mutual_information(ops[0], dims))]
    return [("", ry.renyi_cmi(ops[0], dims, o["alpha"]))]


def _q_ds(ops, o):
    eps = _need(o, "eps")
    rows = [("", dv.info_spectrum_ds(ops[0], ops[1], eps))]
    if o["delta"] is not None and o["eta"] is not None:
        lhs, _, rhs = cl.quantum_ds_bounds_check(ops[0], ops[1], eps, o["delta"], o["eta"])
        rows += [("_lower", lhs), ("_upper", rhs)]
    return rows


QUANTITIES = {
    "qre": _two(lambda r, s, o: dv.qre(r, s)),
    "qiv": _two(lambda r, s, o: dv.qiv(r, s)),
    "rre": _two(lambda r, s, o: dv.rre(r, s, _need(o, "alpha"))),
    "srd": _two(lambda r, s, o: dv.srd(r, s, _need(o, "alpha"))),
    "alpha_z": _two(lambda r, s, o: dv.alpha_z(r, s, _need(o, "alpha"), o["z"])),
    "dmin": _two(lambda r, s, o: dv.dmin(r, s)),
    "dmax": _two(lambda r, s, o: dv.dmax(r, s)),
    "d0": _two(lambda r, s, o: dv.d0(r, s)),
    "dh": _two(lambda r, s, o: dv.hypothesis_testing_re(r, s, _need(o, "eps"))),
    "ds": (2, _q_ds),
    "uds": _two(lambda r, s, o: dv.underline_ds(r, s, _need(o, "eps"))),
    "ods": _two(lambda r, s, o: dv.overline_ds(r, s, _need(o, "eps"))),
    "fid": _two(lambda r, s, o: dv.fidelity(r, s)),
    "tdist": _two(lambda r, s, o: dv.trace_distance(r, s)),
    "Salpha": (1, _q_salpha),
    "cond": _q_bipartite(ry.conditional_entropy, ry.conditional_renyi),
    "mi": _q_bipartite(ry.mutual_information, ry.renyi_mutual_info),
    "cmi": (1, _q_cmi),
    "qcoh": (1, None),
}


def compute_lines(name, paths, opts):
    """The ``name,value`` lines printed by ``compute``."""
    if name not in QUANTITIES:
        raise MalformedInput(f"unknown quantity {name!r}")
    count, fn = QUANTITIES[name]
    if len(paths) != count:
        raise MalformedInput(f"{name} takes {count} operand file(s), got {len(paths)}")
    if name == "qcoh":
        ch = fm.parse_qchn(paths[0])
        rows = [("", ry.renyi_coherent_info(ch, _need(opts, "alpha")).value)]
    else:
        rows = fn([_load_state(p) for p in paths], opts)
    return "".join(f"{name}{suffix},{format_value(v)}\n" for suffix, v in rows)


# ---------------------------------------------------------------- verify

def _tol_overrides(args):
    """Parse the free-form ``--tol-<name> value`` options."""
    out, i = {}, 0
    while i < len(args):
        tok = args[i]
        if not tok.startswith("--tol-"):
            raise click.UsageError(f"unexpected argument {tok!r}")
        name = tok[len("--tol-"):]
        if "=" in name:
            name, value = name.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(args):
                raise click.UsageError(f"{tok} needs a value")
            value = args[i + 1]
            i += 2
        if name not in su.DEFAULT_TOLS:
            raise click.UsageError(f"unknown tolerance {name!r}; known: {', '.join(su.DEFAULT_TOLS)}")
        try:
            out[name] = float(value)
        except ValueError:
            raise click.UsageError(f"tolerance {name} is not a number: {value!r}") from None
    return out


def verify_text(results):
    """CSV of per-trial margins and a summary row; returns (text, failures)."""
    rows, failures = [], []
    for idx, m in results:
        ok = m >= 0
        rows.append([str(idx), format_csv(m), "pass" if ok else "fail"])
        if not ok:
            failures.append((idx, m))
    worst = min((m for _, m in results), default=np.inf)
    rows.append(["summary", format_csv(worst), "fail" if failures else "pass"])
    return _csv("trial,margin,status", rows), failures


# ---------------------------------------------------------------- commands

@click.group()
@click.version_option(__version__, prog_name="qdiv")
def main():
    """Quantum Rényi divergences, second-order rates and converse bounds."""


@main.command()
@click.argument("quantity")
@click.argument("operands", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, help="Rényi order.")
@click.option("--z", type=float, default=1.0, show_default=True, help="z of the alpha-z family.")
@click.option("--eps", type=float, help="Smoothing or error parameter.")
@click.option("--delta", type=float, help="Slack for the information spectrum bracket.")
@click.option("--eta", type=float, help="Second slack for the information spectrum bracket.")
@click.option("--dims", help="Subsystem dimensions, e.g. 2,2.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write to a file instead of stdout.")
def compute(quantity, operands, alpha, z, eps, delta, eta, dims, out):
    """Evaluate one quantity on QMTX (or, for qcoh, QCHN) operands."""
    opts = dict(alpha=alpha, z=z, eps=eps, delta=delta, eta=eta, dims=dims)
    text = _run_guarded(lambda: compute_lines(quantity, list(operands), opts))
    _emit(text, out)


@main.command(context_settings=dict(ignore_unknown_options=True, allow_extra_args=True))
@click.argument("suite")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), help="Master seed (required for randomized suites).")
@click.option("--trials", type=click.IntRange(min=0), help="Number of trials (suite default if omitted).")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the CSV to a file.")
@click.pass_context
def verify(ctx, suite, seed, trials, jobs, out):
    """Run a property suite; extra options --tol-<name> VALUE override tolerances."""
    if suite not in su.SUITES:
        raise click.UsageError(f"unknown suite {suite!r}; known: {', '.join(su.SUITES)}")
    overrides = _tol_overrides(ctx.args)
    if seed is None:
        if su.SUITES[suite].randomized:
            raise click.UsageError(f"suite {suite!r} is randomized and needs --seed")
        seed = 0
    tols = _run_guarded(lambda: su.tolerances(overrides))
    results = _run_guarded(lambda: su.run_suite(suite, seed, trials, jobs, tols))
    text, failures = verify_text(results)
    _emit(text, out)
    if failures:
        for idx, m in failures:
            click.echo(f"failed trial {idx}: margin {format_csv(m)}; reproduce with "
                       f"numpy.random.SeedSequence([{seed}, {idx}]) in suite {suite}", err=True)
        sys.exit(EXIT_VERIFY)


@main.command("second-order")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", help="Comma separated error levels (default 0.01..0.99).")
@click.option("--out", type=click.Path(dir_okay=False))
def second_order(source, eps, out):
    """First- and second-order rates (a, b) of a QSRC source per error level."""
    grid = _grid(eps, what="eps grid")

    def run():
        msrc = fm.parse_qsrc(source)
        rows = []
        for e in (cd.default_eps_grid() if grid is None else grid):
            a = cd.first_order_rate(msrc, e)
            rows.append([format_csv(e), format_csv(a), format_csv(cd.second_order_rate(msrc, a, e))])
        return _csv("eps,a,b", rows)

    _emit(_run_guarded(run), out)


@main.command()
@click.argument("kind", type=click.Choice(["fig52", "fig53"]))
@click.option("--eps", help="fig52: comma separated error grid. fig53: the error level (default 0.25).")
@click.option("--n", "n_grid", help="fig53: comma separated block lengths (default 10..1000).")
@click.option("--out", type=click.Path(dir_okay=False))
def figure(kind, eps, n_grid, out):
    """Data behind the second-order rate figures, as CSV."""
    if kind == "fig52":
        if n_grid is not None:
            raise click.UsageError("--n only applies to fig53")
        args = (kind, _grid(eps, what="eps grid"))
        params = {}
    else:
        try:
            params = {} if eps is None else {"eps": float(eps)}
        except ValueError:
            raise click.BadParameter(f"fig53 takes a single --eps, got {eps!r}") from None
        args = (kind, _grid(n_grid, int, "n grid"))
    _emit(_run_guarded(lambda: cd.figure_data(*args, **params)), out)


@main.command()
@click.argument("protocol", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", default=DEFAULT_REPORT_ALPHAS, show_default=True, help="Comma separated α grid in (1/2, 1).")
@click.option("--out", type=click.Path(dir_okay=False))
def report(protocol, alpha, out):
    """Converse bounds and achieved fidelity of a QPROTO protocol."""
    grid = _grid(alpha, what="alpha grid")

    def run():
        desc = fm.parse_qproto(protocol)
        rows = cv.report_rows(desc, grid)
        return _csv(cv.REPORT_HEADER, [[format_csv(x) for x in r] for r in rows])

    _emit(_run_guarded(run), out)


if __name__ == "__main__":
    main()
