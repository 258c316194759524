"""Command line frontend: solve, encode, generate, verify, bench.

Exit codes for solve: 10 coherent, 20 incoherent, 30 timeout, 1 error.
Instance formats are picked by --domain, or inferred from the file
extension (.pup, .ccp, anything else is a ground program file).
"""

import argparse
import csv
import io
import multiprocessing
import sys

from .ccp import (
    CcpError,
    CcpHeuristic,
    CcpSolution,
    encode_ccp,
    extract_ccp,
    gen_ccp_grid,
    parse_ccp,
    serialize_ccp,
    verify_ccp,
)
from .engine import CoherentWitness, Incoherent, Limits, TimedOut, solve
from .ground import (
    FALSUM,
    GroundError,
    GroundProgram,
    Interpretation,
    Rule,
    is_answer_set,
    parse_program,
    parse_symbol,
    serialize_program,
)
from .heuristics import HeuristicProtocolError
from .plugin import PluginHeuristic, PluginProtocolError
from .pup import (
    PupError,
    PupHeuristic,
    PupSolution,
    encode_e1,
    extract_pup,
    gen_pup,
    parse_pup,
    serialize_pup,
    verify_pup,
)

EXIT_COHERENT = 10
EXIT_INCOHERENT = 20
EXIT_TIMEOUT = 30
EXIT_ERROR = 1

PUP_HEURISTICS = {
    "quickpup": "quickpup",
    "quickpup-star": "quickpup_star",
    "pred": "pred",
}
CCP_HEURISTICS = ("a1a2", "a2f", "a2fo", "a2afo")
HEURISTIC_CHOICES = (("default",) + tuple(PUP_HEURISTICS) + CCP_HEURISTICS
                     + ("plugin:<cmd>",))

CSV_COLUMNS = ("instance", "heuristic", "seed", "outcome", "decisions",
               "conflicts", "restarts", "wall_ms")


class CliError(Exception):
    pass


class UsageError(CliError):
    """Bad flag combinations, reported through the parser."""


def infer_domain(path):
    if path.endswith(".pup"):
        return "pup"
    if path.endswith(".ccp"):
        return "ccp"
    return "gpf"


def read_text(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CliError("cannot read %s: %s" % (path, exc))


def write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise CliError("cannot write %s: %s" % (path, exc))


def load_instance(domain, path):
    """Returns (instance or None, ground program) for the domain."""
    text = read_text(path)
    try:
        if domain == "pup":
            inst = parse_pup(text)
            return inst, encode_e1(inst)
        if domain == "ccp":
            inst = parse_ccp(text)
            return inst, encode_ccp(inst)
        return None, parse_program(text)
    except (PupError, CcpError, GroundError) as exc:
        raise CliError("%s: %s" % (path, exc))


def check_heuristic_domain(name, domain):
    if name == "default" or name.startswith("plugin:"):
        return
    if name in PUP_HEURISTICS and domain != "pup":
        raise UsageError("heuristic %s needs --domain pup, not %s"
                         % (name, domain))
    if name in CCP_HEURISTICS and domain != "ccp":
        raise UsageError("heuristic %s needs --domain ccp, not %s"
                         % (name, domain))


def make_heuristic(name, budget, budget_mode, plugin_timeout=None):
    if name == "default":
        return None
    if name.startswith("plugin:"):
        command = name[len("plugin:"):]
        if not command.strip():
            raise UsageError("plugin heuristic needs a command line")
        return PluginHeuristic(command, timeout=plugin_timeout)
    try:
        if name in PUP_HEURISTICS:
            return PupHeuristic(PUP_HEURISTICS[name])
        if name in CCP_HEURISTICS:
            return CcpHeuristic(name, budget=budget,
                                budget_mode=budget_mode)
    except (PupError, CcpError) as exc:
        raise CliError(str(exc))
    raise UsageError("unknown heuristic %r" % name)


def witness_lines(result, program):
    names = [program.names[a] for a in result.true_atoms
             if a in program.names]
    return sorted(names)


def parse_solution_file(domain, path):
    """Reads the atom-per-line format that cmd_solve prints."""
    names = []
    for lineno, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.split("%")[0].strip()
        if line:
            names.append((lineno, line))
    if domain == "gpf":
        return [name for _, name in names]
    color, bins, area = {}, {}, {}
    zone_unit, sensor_unit, partners = {}, {}, set()
    for lineno, name in names:
        try:
            func, args = parse_symbol(name)
        except GroundError as exc:
            raise CliError("%s line %d: %s" % (path, lineno, exc))
        if domain == "pup":
            if func == "unit2zone":
                zone_unit[args[1]] = int(args[0])
            elif func == "unit2sensor":
                sensor_unit[args[1]] = int(args[0])
            elif func == "partner":
                partners.add((int(args[0]), int(args[1])))
        else:
            if func == "color":
                color[args[0]] = int(args[1])
            elif func == "bin":
                bins[args[0]] = int(args[1])
            elif func == "assign":
                area[args[0]] = int(args[1])
    if domain == "pup":
        return PupSolution(zone_unit, sensor_unit, partners)
    return CcpSolution(color=color, bin=bins, area=area)


def print_stats(stats, stream):
    for key, value in stats.as_dict().items():
        print("%s %s" % (key, value), file=stream)


def cmd_solve(args):
    domain = args.domain or infer_domain(args.instance)
    check_heuristic_domain(args.heuristic, domain)
    inst, program = load_instance(domain, args.instance)
    heuristic = make_heuristic(args.heuristic, args.budget, args.budget_mode)
    limits = Limits(wall_s=args.timeout) if args.timeout is not None else None
    try:
        result = solve(program, heuristic=heuristic, seed=args.seed,
                       limits=limits)
    finally:
        if heuristic is not None and hasattr(heuristic, "close"):
            heuristic.close()
    if args.stats:
        print_stats(result.stats, sys.stderr)
    if isinstance(result, CoherentWitness):
        for name in witness_lines(result, program):
            print(name)
        if inst is not None:
            extract = extract_pup if domain == "pup" else extract_ccp
            verifier = verify_pup if domain == "pup" else verify_ccp
            violations = verifier(inst, extract(result.true_atoms, program,
                                                inst))
            if violations:
                for v in violations:
                    print("witness rejected: %s" % v, file=sys.stderr)
                return EXIT_ERROR
        return EXIT_COHERENT
    if isinstance(result, TimedOut):
        print("timeout", file=sys.stderr)
        return EXIT_TIMEOUT
    return EXIT_INCOHERENT


def cmd_encode(args):
    domain = args.domain or infer_domain(args.instance)
    if domain == "gpf":
        raise CliError("encode needs a pup or ccp instance")
    _, program = load_instance(domain, args.instance)
    write_text(args.output, serialize_program(program))
    return 0


def cmd_generate(args):
    if args.domain == "pup":
        try:
            inst = gen_pup(args.topology, args.size, ucap=args.ucap,
                           iucap=args.iucap, unit_count=args.units,
                           width=args.width)
        except PupError as exc:
            raise CliError(str(exc))
        write_text(args.output, serialize_pup(inst))
        return 0
    try:
        sizes = tuple(int(p) for p in args.sizes.split(","))
        inst = gen_ccp_grid(args.width or args.size, args.height,
                            colors=args.colors, bins=args.bins,
                            capacity=args.capacity,
                            max_border=args.max_border, sizes=sizes,
                            paths=args.paths)
    except (CcpError, ValueError) as exc:
        raise CliError(str(exc))
    write_text(args.output, serialize_ccp(inst))
    return 0


def cmd_verify(args):
    domain = args.domain or infer_domain(args.instance)
    inst, program = load_instance(domain, args.instance)
    solution = parse_solution_file(domain, args.solution)
    if domain == "gpf":
        unknown = [n for n in solution if n not in program.ids]
        if unknown:
            raise CliError("unknown atoms in solution: %s"
                           % ", ".join(unknown))
        true_ids = {program.ids[n] for n in solution}
        unnamed = program.atoms - set(program.names) - {FALSUM}
        if unnamed:
            # A witness file lists named atoms only, so unnamed aux atoms
            # cannot be reconstructed directly.  Pin every named atom to
            # its stated value and ask the solver whether any answer set
            # completes the assignment.
            pins = [Rule(FALSUM, neg=(a,)) for a in sorted(true_ids)]
            pins += [Rule(FALSUM, pos=(a,)) for a in
                     sorted(set(program.names) - true_ids - {FALSUM})]
            pinned = GroundProgram(program.rules + tuple(pins),
                                   program.names, program.atoms)
            answer = solve(pinned, seed=0)
            violations = ([] if isinstance(answer, CoherentWitness)
                          else ["no answer set matches the listed atoms"])
        else:
            interp = Interpretation.total_from_true(program, true_ids)
            violations = ([] if is_answer_set(program, interp)
                          else ["atom set is not an answer set"])
    elif domain == "pup":
        violations = verify_pup(inst, solution)
    else:
        violations = verify_ccp(inst, solution)
    for v in violations:
        print(v)
    if violations:
        return EXIT_ERROR
    print("ok")
    return 0


def parse_matrix(path):
    """Rows: instance heuristic seed timeout, % comments, '-' = no limit."""
    rows = []
    for lineno, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.split("%")[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise CliError("%s line %d: expected 'instance heuristic seed "
                           "timeout'" % (path, lineno))
        instance, heuristic, seed, timeout = parts
        try:
            seed = int(seed)
            timeout = None if timeout == "-" else float(timeout)
        except ValueError as exc:
            raise CliError("%s line %d: %s" % (path, lineno, exc))
        rows.append((instance, heuristic, seed, timeout))
    return rows


def bench_run(task):
    instance, heuristic_name, seed, timeout, budget, budget_mode = task
    record = {"instance": instance, "heuristic": heuristic_name,
              "seed": seed, "outcome": "error", "decisions": 0,
              "conflicts": 0, "restarts": 0, "wall_ms": 0.0}
    heuristic = None
    try:
        domain = infer_domain(instance)
        check_heuristic_domain(heuristic_name, domain)
        _, program = load_instance(domain, instance)
        heuristic = make_heuristic(heuristic_name, budget, budget_mode)
        limits = Limits(wall_s=timeout) if timeout is not None else None
        result = solve(program, heuristic=heuristic, seed=seed,
                       limits=limits)
        if isinstance(result, CoherentWitness):
            record["outcome"] = "coherent"
        elif isinstance(result, Incoherent):
            record["outcome"] = "incoherent"
        else:
            record["outcome"] = "timeout"
        stats = result.stats.as_dict()
        for key in ("decisions", "conflicts", "restarts", "wall_ms"):
            record[key] = stats[key]
    except (CliError, HeuristicProtocolError, PluginProtocolError,
            OSError) as exc:
        print("bench: %s %s seed %d: %s"
              % (instance, heuristic_name, seed, exc), file=sys.stderr)
    finally:
        if heuristic is not None and hasattr(heuristic, "close"):
            heuristic.close()
    return record


def cmd_bench(args):
    rows = parse_matrix(args.matrix)
    tasks = [(inst, heur, seed, timeout, args.budget, args.budget_mode)
             for inst, heur, seed, timeout in rows]
    if args.jobs > 1 and len(tasks) > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            records = pool.map(bench_run, tasks)
    else:
        records = [bench_run(t) for t in tasks]
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for record in records:
        writer.writerow(record)
    write_text(args.output, out.getvalue())
    solved = {}
    for record in records:
        total, good = solved.get(record["heuristic"], (0, 0))
        solved[record["heuristic"]] = (
            total + 1,
            good + (record["outcome"] in ("coherent", "incoherent")))
    for heuristic in sorted(solved):
        total, good = solved[heuristic]
        print("%s: %d/%d solved" % (heuristic, good, total),
              file=sys.stderr)
    return 0


def add_common_solve_args(sub):
    sub.add_argument("--heuristic", default="default",
                     help="one of: %s" % ", ".join(HEURISTIC_CHOICES))
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--timeout", type=float, default=None,
                     help="wall clock limit in seconds")
    sub.add_argument("--budget", type=float, default=None,
                     help="heuristic phase budget (a2f family)")
    sub.add_argument("--budget-mode", choices=("wall", "choices"),
                     default="wall")
    sub.add_argument("--stats", action="store_true",
                     help="print search statistics to stderr")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aspen",
        description="CDCL solver for ground normal logic programs")
    subs = parser.add_subparsers(dest="command", required=True)

    p_solve = subs.add_parser("solve", help="solve one instance")
    p_solve.add_argument("instance")
    p_solve.add_argument("--domain", choices=("pup", "ccp", "gpf"))
    add_common_solve_args(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_encode = subs.add_parser("encode",
                               help="write the ground program for an "
                                    "instance")
    p_encode.add_argument("instance")
    p_encode.add_argument("--domain", choices=("pup", "ccp"))
    p_encode.add_argument("-o", "--output", default=None)
    p_encode.set_defaults(func=cmd_encode)

    p_gen = subs.add_parser("generate", help="write a generated instance")
    p_gen.add_argument("--domain", choices=("pup", "ccp"), required=True)
    p_gen.add_argument("--topology", default="double",
                       choices=("double", "doublev", "triple", "grid"))
    p_gen.add_argument("--size", type=int, default=3)
    p_gen.add_argument("--ucap", type=int, default=2)
    p_gen.add_argument("--iucap", type=int, default=2)
    p_gen.add_argument("--units", type=int, default=None)
    p_gen.add_argument("--width", type=int, default=None)
    p_gen.add_argument("--height", type=int, default=2)
    p_gen.add_argument("--colors", type=int, default=2)
    p_gen.add_argument("--bins", type=int, default=2)
    p_gen.add_argument("--capacity", type=int, default=4)
    p_gen.add_argument("--max-border", type=int, default=None)
    p_gen.add_argument("--sizes", default="1,2")
    p_gen.add_argument("--paths", action=argparse.BooleanOptionalAction,
                       default=None)
    p_gen.add_argument("-o", "--output", default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_verify = subs.add_parser("verify",
                               help="check a solution file against an "
                                    "instance")
    p_verify.add_argument("instance")
    p_verify.add_argument("solution")
    p_verify.add_argument("--domain", choices=("pup", "ccp", "gpf"))
    p_verify.set_defaults(func=cmd_verify)

    p_bench = subs.add_parser("bench", help="run a benchmark matrix")
    p_bench.add_argument("matrix")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--budget", type=float, default=None)
    p_bench.add_argument("--budget-mode", choices=("wall", "choices"),
                         default="wall")
    p_bench.add_argument("-o", "--output", default=None)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CliError, GroundError, PupError, CcpError,
            HeuristicProtocolError, PluginProtocolError) as exc:
        print("aspen: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
