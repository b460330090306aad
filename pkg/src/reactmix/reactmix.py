import logging, os


#######################################################################
#                              Exceptions                             #
#######################################################################

class ReactMixException(Exception):
    """
    This exception is raised for any issues encountered while setting up,
    running, or verifying a mixture simulation.
    """
    def __init__(self, msg: str):
        super().__init__(msg)


class MixtureException(ReactMixException):
    "Invalid physical parameters or reaction network."


class DomainException(ReactMixException):
    "Argument outside the domain of a formula, e.g. a negative density."


class NonMembershipException(ReactMixException):
    "Entropy variables outside the codomain of the map G."


class ConvergenceException(ReactMixException):
    "Newton inversion of the map G did not converge."


class SolverException(ReactMixException):
    """
    Base class of the exceptions that abort a time integration. The partial
    diagnostics report is attached as *report* when raised from a run.
    """
    def __init__(self, msg: str):
        super().__init__(msg)
        self.report = None


class DegenerateStateException(SolverException):
    "A density in a denominator fell below the configured floor."


class BlowUpException(SolverException):
    "A density became non-finite or exceeded the blow-up limit."


class ConfigException(ReactMixException):
    "The JSON configuration is unreadable or invalid."


class SnapshotException(ReactMixException):
    "A snapshot file is unreadable or truncated."


class OracleException(ReactMixException):
    "An oracle was called outside its guarded range."


#######################################################################
#                               Logging                               #
#######################################################################

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'

def configureLogging(verbose: bool = False) -> None:
    """
    Configure the root logger for the command-line utility. Library modules
    only create their loggers and never configure handlers.

    :param verbose: log debug messages, e.g. Newton iteration counts.
    :type verbose: bool
    """
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format=LOG_FORMAT)
    logging.getLogger('reactmix.main').setLevel(logging.DEBUG if verbose
                                                else logging.INFO)


def reportDuration(seconds: float) -> str:
    """
    Report a wall-clock duration in an appropriate unit (ms, s, min, h).

    :param seconds: duration in seconds.
    :type seconds: float
    :returns: duration as string notation with appropriate unit.
    """
    if seconds < 1.0:
        return f'{seconds*1000:.1f} ms'
    if seconds < 120.0:
        return f'{seconds:.1f} s'
    if seconds < 7200.0:
        return f'{seconds/60:.1f} min'
    return f'{seconds/3600:.1f} h'


#######################################################################
#                             Worker Count                            #
#######################################################################

THREADS_VARIABLE = 'REACTMIX_THREADS'

def workerCount() -> int:
    """
    Number of worker threads for the verification suites: the value of
    REACTMIX_THREADS if set, otherwise the number of CPUs.

    :raises reactmix.reactmix.ConfigException: if REACTMIX_THREADS is not a positive integer.
    :returns: number of workers, >= 1.
    """
    value = os.environ.get(THREADS_VARIABLE)
    if value is None:
        return os.cpu_count() or 1
    try:
        count = int(value)
    except ValueError:
        raise ConfigException(f"{THREADS_VARIABLE}='{value}' is not an "
                              "integer.")
    if count < 1:
        raise ConfigException(f'{THREADS_VARIABLE}={count} must be >= 1.')
    return count
