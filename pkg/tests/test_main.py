import csv, json, os

import pytest

from reactmix.main import main, cmdRun, cmdCheck, cmdCompact, cmdOracle, \
     hListType, casesType, toleranceType, EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, \
     EXIT_SUITE

SMALL_RUN = {
    'schema_version': 1,
    'grid': {'size': 16},
    'mixture': {'gamma': [2.0, 2.0, 2.0], 'molar_mass': [10.0, 10.0, 10.0],
                'epsilon': 1e-3},
    'reaction': {'reagents': [0, 1], 'products': [2], 'alpha': [1.0, 1.0],
                 'product_weights': [2.0]},
    'time': {'t_end': 0.02, 'dt_max': 0.01},
    'initial_data': [
        {'kind': 'sinusoidal', 'mean': 1.0, 'amplitude': 0.2},
        {'kind': 'sinusoidal', 'mean': 1.0, 'amplitude': 0.2,
         'phase': 3.141592653589793},
        {'kind': 'constant', 'mean': 0.1}],
    'diagnostics': {'every': 2, 'h': [0.01]},
    'snapshots': {'every': 4, 'compression': 'lz4'},
}


def readManifest(out_dir):
    with open(os.path.join(out_dir, 'manifest.jsonl')) as f:
        return [json.loads(line) for line in f]


@pytest.fixture
def finished_run(tmp_path):
    config = tmp_path / 'run.json'
    config.write_text(json.dumps(SMALL_RUN))
    out_dir = str(tmp_path / 'out')
    assert cmdRun(str(config), out_dir, progress_bar=False) == EXIT_OK
    return out_dir


def test_run_outputs(finished_run):
    with open(os.path.join(finished_run, 'diagnostics.csv')) as f:
        rows = list(csv.reader(f))
    assert rows[0][:3] == ['t', 'total_mass', 'mass_0']
    assert float(rows[-1][0]) == 0.02
    with open(os.path.join(finished_run, 'summary.json')) as f:
        summary = json.load(f)
    assert summary['flags']['mass']
    assert len(summary['config_hash']) == 64
    entry, = readManifest(finished_run)
    assert entry['exit_status'] == EXIT_OK
    assert entry['config_hash'] == summary['config_hash']
    assert os.listdir(os.path.join(finished_run, 'snapshots'))


def test_run_bad_config(tmp_path, capsys):
    out_dir = str(tmp_path / 'out')
    assert cmdRun(str(tmp_path / 'absent.json'), out_dir,
                  progress_bar=False) == EXIT_CONFIG
    assert 'absent.json' in capsys.readouterr().err
    entry, = readManifest(out_dir)
    assert entry['exit_status'] == EXIT_CONFIG


def test_run_solver_abort(tmp_path, capsys):
    doc = dict(SMALL_RUN, time={'t_end': 1.0, 'dt_max': 0.005,
                                'blowup_factor': 1.05},
               initial_data=[{'kind': 'constant', 'mean': v}
                             for v in (1.0, 1.0, 0.99)],
               diagnostics={'every': 1, 'h': [0.01]})
    config = tmp_path / 'run.json'
    config.write_text(json.dumps(doc))
    out_dir = str(tmp_path / 'out')
    assert cmdRun(str(config), out_dir, progress_bar=False) == EXIT_SOLVER
    assert 'Error' in capsys.readouterr().err
    with open(os.path.join(out_dir, 'diagnostics.csv')) as f:
        rows = list(csv.reader(f))
    assert len(rows) >= 3
    times = [float(row[0]) for row in rows[1:]]
    assert times[0] == 0.0 and times == sorted(times) and times[-1] < 1.0
    assert os.path.exists(os.path.join(out_dir, 'summary.json'))
    entry, = readManifest(out_dir)
    assert entry['exit_status'] == EXIT_SOLVER


def test_compact(finished_run, tmp_path):
    out = str(tmp_path / 'compact.csv')
    pattern = os.path.join(finished_run, 'snapshots', 'snapshot_*')
    assert cmdCompact(pattern, [0.01, 0.001], envelope=True,
                      out=out) == EXIT_OK
    with open(out) as f:
        rows = list(csv.DictReader(f))
    totals = [r for r in rows if r['component'] == 'total']
    assert {r['h'] for r in rows} == {'0.01', '0.001'}
    assert all(float(r['R_h']) >= 0.0 for r in rows)
    assert all(float(r['envelope']) >= float(r['R_h']) - 1e-10
               for r in totals)
    assert cmdCompact(os.path.join(finished_run, 'none_*'),
                      [0.01]) == EXIT_CONFIG


def test_check(capsys):
    assert cmdCheck(0, 1, progress_bar=False) == EXIT_OK
    assert 'det_B' in capsys.readouterr().out


def test_check_mutation(monkeypatch, capsys):
    monkeypatch.setenv('REACTMIX_MUTATION', 'b-sign')
    assert cmdCheck(0, 1, progress_bar=False) == EXIT_SUITE
    assert 'FAILED det_B (seed 0)' in capsys.readouterr().err


def test_oracle_zero_tolerance(tmp_path):
    out = str(tmp_path / 'oracle.csv')
    assert cmdOracle(0.0, out) == EXIT_SUITE
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 21
    assert all(r['passed'] == 'False' for r in rows)


def test_main_exit_codes(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(['-q', 'check', '--cases', '0'])
    assert info.value.code == EXIT_OK
    with pytest.raises(SystemExit) as info:
        main(['check', '--cases', '-1'])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(['-q', 'run', '--config', str(tmp_path / 'x.json'), '--out',
              str(tmp_path)])
    assert info.value.code == EXIT_CONFIG


def test_validators():
    import argparse
    assert hListType('0.01,1e-3') == [0.01, 0.001]
    assert casesType('5') == 5
    assert toleranceType('0') == 0.0
    for fn, arg in ((hListType, '0.5'), (hListType, 'x'), (casesType, '-2'),
                    (toleranceType, '-1e-3')):
        with pytest.raises(argparse.ArgumentTypeError):
            fn(arg)


def test_shipped_example(tmp_path):
    shipped = os.path.join(os.path.dirname(__file__), '..', 'configs',
                           'abc_reaction.json')
    out_dir = str(tmp_path / 'abc')
    assert cmdRun(shipped, out_dir, progress_bar=False) == EXIT_OK
    with open(os.path.join(out_dir, 'summary.json')) as f:
        summary = json.load(f)
    assert summary['all_pass'], summary['flags']
    assert summary['final_time'] == 0.5
    pattern = os.path.join(out_dir, 'snapshots', 'snapshot_*')
    out = str(tmp_path / 'compact.csv')
    assert cmdCompact(pattern, [0.01], out=out) == EXIT_OK
