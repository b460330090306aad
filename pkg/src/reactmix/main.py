import argparse, csv, datetime, json, logging, os, sys
from typing import List, Optional, TextIO

import numpy as np
from tqdm.contrib.logging import logging_redirect_tqdm

from .config import loadConfig
from .simulation import runSimulation
from .snapshots import findSnapshots, readSnapshot, snapshotName, \
                       writeSnapshot
from .diagnostics import compactnessFunctional, fitEnvelopeOffset, \
                         logGronwallEnvelope, H_MAX
from .check import runCheckSuite
from .oracle import OracleReport, runOracleSuite
from .reactmix import ReactMixException, ConfigException, SolverException, \
                      SnapshotException, configureLogging

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SUITE = 0, 1, 2, 3


###########################################################################
#                                Manifest                                 #
###########################################################################

def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def appendManifest(out_dir: str, entry: dict) -> None:
    """
    Append one line to *out_dir*/manifest.jsonl; existing lines are never
    rewritten.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, 'manifest.jsonl'), 'at',
                  encoding='utf-8') as f:
            f.write(json.dumps(entry, sort_keys=True) + '\n')
    except OSError as e:
        logger.warning(f"Cannot write manifest in '{out_dir}': {e}.")


def _error(msg) -> None:
    print(file=sys.stderr)
    print('Error:', msg, file=sys.stderr)


###########################################################################
#                                 cmdRun                                  #
###########################################################################

def cmdRun(config_path: str, out_dir: str, progress_bar: bool = True) -> int:
    """
    Run a simulation and write diagnostics.csv, summary.json, snapshots and
    a manifest line into *out_dir*.

    :param config_path: JSON configuration.
    :type config_path: str
    :param out_dir: output directory, created if needed.
    :type out_dir: str
    :param progress_bar: show a progress bar.
    :type progress_bar: bool
    :returns: 0 on success, 1 on configuration or I/O errors, 2 if the solver aborted.
    """
    manifest = {'config': config_path, 'out_dir': out_dir, 'config_hash': '',
                'start': _now()}

    def finish(status: int) -> int:
        manifest['end'] = _now()
        manifest['exit_status'] = status
        appendManifest(out_dir, manifest)
        return status

    try:
        config, config_hash = loadConfig(config_path)
        manifest['config_hash'] = config_hash
        os.makedirs(out_dir, exist_ok=True)
    except ConfigException as e:
        _error(e)
        return finish(EXIT_CONFIG)
    except OSError as e:
        _error(f"Cannot create '{out_dir}': {e.strerror}.")
        return finish(EXIT_CONFIG)

    writer = None
    if config.snapshot_every > 0:
        snap_dir = os.path.join(out_dir, 'snapshots')
        os.makedirs(snap_dir, exist_ok=True)
        writer = lambda state, step: writeSnapshot(
                     snapshotName(snap_dir, step, config.snapshot_compression),
                     state, config.snapshot_compression)

    status = EXIT_OK
    try:
        with logging_redirect_tqdm():
            _, report = runSimulation(config, progress_bar, writer,
                                      config_hash)
    except SolverException as e:
        _error(e)
        report = e.report
        status = EXIT_SOLVER
    except OSError as e:
        _error(f'Cannot write snapshot: {e}.')
        return finish(EXIT_CONFIG)

    try:
        if report is not None and len(report) > 0:
            report.writeCsv(os.path.join(out_dir, 'diagnostics.csv'))
            report.writeSummary(os.path.join(out_dir, 'summary.json'))
            if status == EXIT_OK and not report.summary()['all_pass']:
                failed = [k for k, v in report.flags().items() if not v]
                logger.warning(f"Diagnostics flagged: {', '.join(failed)}.")
    except OSError as e:
        _error(f"Cannot write results to '{out_dir}': {e.strerror}.")
        return finish(EXIT_CONFIG)
    return finish(status)


###########################################################################
#                                cmdCheck                                 #
###########################################################################

def cmdCheck(seed: int, n_cases: int, progress_bar: bool = True) -> int:
    """
    Run the property suite and print a per-invariant table.

    :returns: 0 if every invariant held, 3 otherwise, 1 on configuration errors.
    """
    try:
        with logging_redirect_tqdm():
            result = runCheckSuite(seed, n_cases, progress_bar)
    except ConfigException as e:
        _error(e)
        return EXIT_CONFIG
    print(result.table(n_cases))
    if result.ok():
        return EXIT_OK
    print(file=sys.stderr)
    for name, case_seed in result.failures:
        print(f'FAILED {name} (seed {case_seed})', file=sys.stderr)
    return EXIT_SUITE


###########################################################################
#                               cmdCompact                                #
###########################################################################

def _openOutput(out: Optional[str]) -> TextIO:
    return open(out, 'w', newline='', encoding='utf-8') if out else sys.stdout


def cmdCompact(pattern: str, h_values: List[float], envelope: bool = False,
               out: Optional[str] = None) -> int:
    """
    Evaluate R_h on snapshots, per component and for the total density, and
    write CSV rows (t, h, component, R_h). With *envelope* the rows of the
    total density also get the log-Gronwall envelope with fitted offset.

    :returns: 0 on success, 1 if snapshots cannot be read.
    """
    try:
        states = sorted((readSnapshot(n) for n in findSnapshots(pattern)),
                        key=lambda s: s.time)
    except SnapshotException as e:
        _error(e)
        return EXIT_CONFIG

    columns = ['t', 'h', 'component', 'R_h']
    if envelope:
        columns += ['envelope', 'offset']
    times = np.array([s.time for s in states])
    try:
        f = _openOutput(out)
    except OSError as e:
        _error(f"Cannot write '{out}': {e.strerror}.")
        return EXIT_CONFIG
    try:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for h in h_values:
            totals = np.array([compactnessFunctional(s.total(), h)
                               for s in states])
            if envelope:
                offset = fitEnvelopeOffset(times - times[0], totals, h)
                z = logGronwallEnvelope(float(totals[0]), offset /
                                        abs(np.log(h)) + np.finfo(float).tiny,
                                        float(times[-1] - times[0]))
                env = z(times - times[0])
            for k, state in enumerate(states):
                for i in range(state.n_components):
                    row = [f'{state.time:.17g}', f'{h:g}', str(i),
                           f'{compactnessFunctional(state.values[i], h):.17g}']
                    writer.writerow(row + (['', ''] if envelope else []))
                row = [f'{state.time:.17g}', f'{h:g}', 'total',
                       f'{totals[k]:.17g}']
                if envelope:
                    row += [f'{env[k]:.17g}', f'{offset:.17g}']
                writer.writerow(row)
    finally:
        if f is not sys.stdout:
            f.close()
    return EXIT_OK


###########################################################################
#                               cmdOracle                                 #
###########################################################################

def cmdOracle(tolerance: Optional[float] = None,
              out: Optional[str] = None) -> int:
    """
    Run the oracle cross-checks and write one CSV row per case.

    :returns: 0 if every case is within tolerance, 3 otherwise.
    """
    try:
        reports = runOracleSuite(tolerance)
    except ConfigException as e:
        _error(e)
        return EXIT_CONFIG
    try:
        f = _openOutput(out)
    except OSError as e:
        _error(f"Cannot write '{out}': {e.strerror}.")
        return EXIT_CONFIG
    try:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(OracleReport.COLUMNS)
        writer.writerows(r.row() for r in reports)
    finally:
        if f is not sys.stdout:
            f.close()
    failed = [r.case for r in reports if not r.passed()]
    if failed:
        print(file=sys.stderr)
        for case in failed:
            print(f'FAILED {case}', file=sys.stderr)
        return EXIT_SUITE
    return EXIT_OK


###########################################################################
#                          Argument Validators                            #
###########################################################################

def hListType(arg: str) -> List[float]:
    """
    Is argument an acceptable argument for option --h?

    :param arg: comma-separated kernel widths passed by the user.
    :type arg: str
    :returns: the widths as a list of *float*.
    :raises argparse.ArgumentTypeError: if a width is not a number in (0, 1/8].
    """
    values = []
    for item in arg.split(','):
        try:
            h = float(item)
        except ValueError:
            raise argparse.ArgumentTypeError(f"'{item}' is not a number")
        if not 0.0 < h <= H_MAX:
            raise argparse.ArgumentTypeError(f"'{item}' is not in "
                                             f"(0, {H_MAX}]")
        values.append(h)
    return values


def casesType(arg: str) -> int:
    """
    Is argument an acceptable argument for option --cases?

    :raises argparse.ArgumentTypeError: if the argument is not an integer >= 0.
    """
    try:
        iarg = int(arg)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{arg}' is not an integer")
    if iarg < 0:
        raise argparse.ArgumentTypeError(f"'{arg}' is negative")
    return iarg


def toleranceType(arg: str) -> float:
    """
    Is argument an acceptable argument for option --tolerance?

    :raises argparse.ArgumentTypeError: if the argument is not a number >= 0.
    """
    try:
        value = float(arg)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{arg}' is not a number")
    if not value >= 0.0:
        raise argparse.ArgumentTypeError(f"'{arg}' is negative")
    return value


###########################################################################
#                      Main Program for reactmix                          #
###########################################################################

def main(argv: Optional[List[str]] = None) -> None:
    """
    Implements the reactmix command; processes command-line arguments and
    exits with the exit code of the subcommand.
    """
    parser = argparse.ArgumentParser(prog='reactmix',
                                     description='Simulate and verify '
                                     'reactive compressible Stokes mixtures.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')
    parser.add_argument('-q', '--quiet', action='store_true',
                        help='suppress progress bars')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run a simulation')
    run.add_argument('--config', required=True, help='JSON configuration')
    run.add_argument('--out', required=True, help='output directory')

    check = sub.add_parser('check', help='run the property suite')
    check.add_argument('--seed', type=int, default=0, help='first seed')
    check.add_argument('--cases', type=casesType, default=100,
                       help='number of seeded cases')

    compact = sub.add_parser('compact', help='compactness functional of '
                             'snapshots')
    compact.add_argument('--snapshots', required=True,
                         help='glob pattern of snapshot files')
    compact.add_argument('--h', type=hListType, default=[1e-2, 1e-3],
                         help='comma-separated kernel widths')
    compact.add_argument('--envelope', action='store_true',
                         help='compare with the log-Gronwall envelope')
    compact.add_argument('--out', help='CSV file, default standard output')

    oracle = sub.add_parser('oracle', help='run the oracle cross-checks')
    oracle.add_argument('--tolerance', type=toleranceType,
                        help='override every case tolerance')
    oracle.add_argument('--out', help='CSV file, default standard output')

    args = parser.parse_args(argv)
    configureLogging(args.verbose)
    progress_bar = not args.quiet

    try:
        if args.command == 'run':
            code = cmdRun(args.config, args.out, progress_bar)
        elif args.command == 'check':
            code = cmdCheck(args.seed, args.cases, progress_bar)
        elif args.command == 'compact':
            code = cmdCompact(args.snapshots, args.h, args.envelope, args.out)
        else:
            code = cmdOracle(args.tolerance, args.out)
    except ReactMixException as e:
        _error(e)
        code = EXIT_CONFIG
    sys.exit(code)
