import copy, json, os

import pytest

from reactmix.config import parseConfig, loadConfig, configHash
from reactmix.reactmix import ConfigException

SHIPPED = os.path.join(os.path.dirname(__file__), '..', 'configs',
                       'abc_reaction.json')

MINIMAL = {
    'schema_version': 1,
    'grid': {'size': 16},
    'mixture': {'gamma': [2.0, 1.5], 'molar_mass': [1.0, 2.0],
                'lambda': 0.5},
    'time': {'t_end': 0.1, 'dt_max': 0.01},
    'initial_data': [{'kind': 'constant', 'mean': 1.0},
                     {'kind': 'sinusoidal', 'mean': 1.0, 'amplitude': 0.1}],
}


def modified(path, value):
    doc = copy.deepcopy(MINIMAL)
    section, _, key = path.partition('.')
    if key:
        doc[section][key] = value
    else:
        doc[section] = value
    return doc


def test_shipped_config():
    config, digest = loadConfig(SHIPPED)
    assert config.params.n_components == 3
    assert config.network is not None and config.network.products == (2,)
    assert config.snapshot_compression == 'zstd'
    assert len(digest) == 64
    assert config.initialState().values.min() > 0.0


def test_defaults():
    config = parseConfig(MINIMAL)
    assert config.network is None
    assert config.cfl_safety == 0.4
    assert config.dealias
    assert config.h_values == (1e-2, 1e-3)
    assert config.params.lam == 0.5
    assert config.params.mu == 1.0
    assert config.params.n_diffusive == 2


@pytest.mark.parametrize('path, value, message', [
    ('schema_version', 2, 'schema_version'),
    ('mixture.viscosity', 1.0, 'mixture.viscosity'),
    ('mixture.gamma', [2.0, 0.5], 'mixture'),
    ('mixture.mu', 'one', 'mixture.mu'),
    ('grid.size', 20, 'grid.size'),
    ('time.dt_max', 0.0, 'dt_max'),
    ('time.blowup_factor', 0.0, 'time.blowup_factor'),
    ('dealias', 'yes', 'dealias'),
    ('snapshots', {'compression': 'bz2'}, 'snapshots.compression'),
    ('diagnostics', {'h': [0.5]}, 'diagnostics.h'),
    ('reaction', {'reagents': [0], 'products': [1], 'alpha': [1.0],
                  'product_weights': [2.0]}, 'reaction'),
])
def test_rejected(path, value, message):
    with pytest.raises(ConfigException, match=message.replace('.', r'\.')):
        parseConfig(modified(path, value))


def test_missing_section():
    doc = copy.deepcopy(MINIMAL)
    del doc['time']
    with pytest.raises(ConfigException, match="'time'"):
        parseConfig(doc)


def test_hash_ignores_key_order():
    reordered = json.loads(json.dumps(MINIMAL, sort_keys=True))
    assert configHash(reordered) == configHash(MINIMAL)
    assert configHash(modified('grid.size', 32)) != configHash(MINIMAL)


def test_missing_file(tmp_path):
    name = str(tmp_path / 'absent.json')
    with pytest.raises(ConfigException, match='absent.json'):
        loadConfig(name)


def test_bad_json(tmp_path):
    name = tmp_path / 'bad.json'
    name.write_text('{\n  "grid": \n}\n')
    with pytest.raises(ConfigException, match='line 3'):
        loadConfig(str(name))


def test_error_names_file(tmp_path):
    name = tmp_path / 'config.json'
    name.write_text(json.dumps(modified('mixture.viscosity', 1.0)))
    with pytest.raises(ConfigException, match='config.json'):
        loadConfig(str(name))
