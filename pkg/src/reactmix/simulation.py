import logging, time
from typing import Callable, Optional, Tuple

import numpy as np
from tqdm import tqdm # install with "pip install tqdm"

from .mixture import DensityField, validateGammaCondition
from .solver import SimConfig, cflDt, stepRk4
from .diagnostics import DiagnosticsReport, RunTally, energyResidual, \
                         makeRecord
from .reactmix import SolverException, reportDuration

logger = logging.getLogger(__name__)

SnapshotWriter = Callable[[DensityField, int], None]


#######################################################################
#                             runSimulation                           #
#######################################################################

def runSimulation(config: SimConfig, progress_bar: bool = False,
                  snapshots: Optional[SnapshotWriter] = None,
                  config_hash: str = '') \
                  -> Tuple[DensityField, DiagnosticsReport]:
    """
    Integrate from the initial data to *t_end*. Diagnostics are recorded at
    t = 0, every *diagnostics_every* steps and at the final time; the
    energy residual is checked at every step. Runs are deterministic.

    :param config: run configuration.
    :type config: SimConfig
    :param progress_bar: show a progress bar over simulated time.
    :type progress_bar: bool
    :param snapshots: called with the state and the step number at t = 0,
                      every *snapshot_every* steps and at the final time.
    :type snapshots: Optional[Callable[[DensityField, int], None]]
    :param config_hash: hash recorded in the report summary.
    :type config_hash: str
    :raises reactmix.reactmix.SolverException: on abort; the partial report is attached as *report*.
    :returns: final state and diagnostics report.
    """
    validateGammaCondition(config.params, config.network)
    state = config.initialState()
    report = DiagnosticsReport(config, config_hash)
    tally = RunTally()
    report.add(makeRecord(state, 0.0, config, tally))
    report.checkStep(state, 1.0, 0.0)
    if snapshots is not None:
        snapshots(state, 0)

    peak = float(np.max(np.abs(state.values)))
    limit = config.blowup_factor * (peak if peak > 0.0 else 1.0)
    logger.info(f'Starting run: N={config.params.n_components}, '
                f'{config.grid}, t_end={config.t_end:g}.')
    started = time.perf_counter()
    step = 0
    try:
        with tqdm(total=config.t_end, unit=' time', unit_scale=True,
                  disable=not progress_bar) as progress:
            while state.time < config.t_end:
                dt = cflDt(state, config)
                last = state.time + dt >= config.t_end
                if last:
                    dt = config.t_end - state.time
                tally.startStep()
                new = stepRk4(state, config, dt, tally.observer(config),
                              limit)
                if last:
                    new = DensityField(new.values, config.t_end)
                residual = energyResidual(state, new, dt, config,
                                          tally.rates)
                tally.endStep(dt, residual)
                report.checkStep(new, dt, residual)
                step += 1
                progress.update(new.time - state.time)
                state = new
                if last or step % config.diagnostics_every == 0:
                    report.add(makeRecord(state, dt, config, tally))
                if snapshots is not None and (last or (config.snapshot_every
                        and step % config.snapshot_every == 0)):
                    snapshots(state, step)
    except SolverException as e:
        logger.warning(f'Run aborted at t={state.time:.6g} after {step} '
                       f'steps: {e}')
        e.report = report
        raise
    logger.info(f'Finished {step} steps in '
                f'{reportDuration(time.perf_counter() - started)}.')
    return state, report
