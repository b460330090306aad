"""
JSON run configuration, schema version 1:

    {"schema_version": 1,
     "grid":         {"size": 64},
     "mixture":      {"gamma": [...], "molar_mass": [...], "n_diffusive": 3,
                      "mu": 1.0, "lambda": 0.0, "epsilon": 0.0, "delta": 0.0,
                      "beta": 6.0, "density_floor": 1e-300,
                      "density_warning": 1e-12, "positivity_floor": false},
     "reaction":     null or {"reagents": [0, 1], "products": [2],
                              "alpha": [1, 1], "product_weights": [2]},
     "time":         {"t_end": 1.0, "dt_max": 0.01, "cfl_safety": 0.4,
                      "blowup_factor": 1e6},
     "dealias":      true,
     "initial_data": [{"kind": "sinusoidal", "mean": 1, "amplitude": 0.1,
                       "mode": 1, "phase": 0}, ...],
     "diagnostics":  {"every": 10, "h": [0.01, 0.001],
                      "energy_tolerance": 1e-6, "divu_fraction": 0.9},
     "snapshots":    {"every": 0, "compression": ""}}

Species indices are 0-based. Only "grid", "mixture", "time" and
"initial_data" are required.
"""

import hashlib, json
from typing import Any, Dict, Tuple

from .mixture import MixtureParams, ReactionNetwork
from .solver import InitialProfile, SimConfig
from .spectral import SpectralGrid
from .snapshots import COMPRESSIONS
from .reactmix import ConfigException, ReactMixException

SCHEMA_VERSION = 1

SECTIONS = {
    'schema_version': None,
    'grid': ('size',),
    'mixture': ('gamma', 'molar_mass', 'n_diffusive', 'mu', 'lambda',
                'epsilon', 'delta', 'beta', 'density_floor',
                'density_warning', 'positivity_floor'),
    'reaction': ('reagents', 'products', 'alpha', 'product_weights'),
    'time': ('t_end', 'dt_max', 'cfl_safety', 'blowup_factor'),
    'dealias': None,
    'initial_data': ('kind', 'mean', 'amplitude', 'mode', 'phase', 'values'),
    'diagnostics': ('every', 'h', 'energy_tolerance', 'divu_fraction'),
    'snapshots': ('every', 'compression'),
}


#######################################################################
#                           Helper Functions                          #
#######################################################################

def _section(doc: Dict, name: str, required: bool) -> Dict:
    value = doc.get(name)
    if value is None:
        if required:
            raise ConfigException(f"Missing section '{name}'.")
        return {}
    if not isinstance(value, dict):
        raise ConfigException(f"Section '{name}' must be an object.")
    unknown = sorted(set(value) - set(SECTIONS[name]))
    if unknown:
        raise ConfigException(f"Unknown field '{name}.{unknown[0]}'.")
    return value


def _number(section: Dict, path: str, key: str, default: Any = None,
            kind: type = float) -> Any:
    value = section.get(key, default)
    if value is None:
        if default is None:
            raise ConfigException(f"Missing field '{path}.{key}'.")
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigException(f"Field '{path}.{key}' must be a number, got "
                              f"{value!r}.")
    if kind is int and value != int(value):
        raise ConfigException(f"Field '{path}.{key}' must be an integer, "
                              f"got {value!r}.")
    return kind(value)


def _list(section: Dict, path: str, key: str, kind: type = float) -> list:
    value = section.get(key)
    if not isinstance(value, list) or not value:
        raise ConfigException(f"Field '{path}.{key}' must be a nonempty "
                              "list.")
    return [_number({key: v}, path, key, kind=kind) for v in value]


#######################################################################
#                             parseConfig                             #
#######################################################################

def parseConfig(doc: Dict) -> SimConfig:
    """
    Build a *SimConfig* from a parsed JSON document.

    :param doc: the document.
    :type doc: dict
    :raises reactmix.reactmix.ConfigException: naming the offending field.
    :returns: the run configuration.
    """
    if not isinstance(doc, dict):
        raise ConfigException('Configuration must be a JSON object.')
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigException(f"Unknown section '{unknown[0]}'.")
    if doc.get('schema_version') != SCHEMA_VERSION:
        raise ConfigException(f"Field 'schema_version' must be "
                              f"{SCHEMA_VERSION}, got "
                              f"{doc.get('schema_version')!r}.")

    grid_doc = _section(doc, 'grid', True)
    mix = _section(doc, 'mixture', True)
    time_doc = _section(doc, 'time', True)
    diag = _section(doc, 'diagnostics', False)
    snap = _section(doc, 'snapshots', False)

    try:
        grid = SpectralGrid(_number(grid_doc, 'grid', 'size', kind=int))
    except ReactMixException as e:
        raise ConfigException(f"Field 'grid.size': {e}")

    n_diffusive = mix.get('n_diffusive')
    if n_diffusive is not None:
        n_diffusive = _number(mix, 'mixture', 'n_diffusive', kind=int)
    positivity = mix.get('positivity_floor', False)
    if not isinstance(positivity, bool):
        raise ConfigException("Field 'mixture.positivity_floor' must be "
                              "true or false.")
    try:
        params = MixtureParams(
            gamma=tuple(_list(mix, 'mixture', 'gamma')),
            molar_mass=tuple(_list(mix, 'mixture', 'molar_mass')),
            n_diffusive=n_diffusive,
            mu=_number(mix, 'mixture', 'mu', 1.0),
            lam=_number(mix, 'mixture', 'lambda', 0.0),
            epsilon=_number(mix, 'mixture', 'epsilon', 0.0),
            delta=_number(mix, 'mixture', 'delta', 0.0),
            beta=_number(mix, 'mixture', 'beta', 6.0),
            density_floor=_number(mix, 'mixture', 'density_floor', 1e-300),
            density_warning=_number(mix, 'mixture', 'density_warning', 1e-12),
            positivity_floor=positivity)
    except ConfigException:
        raise
    except ReactMixException as e:
        raise ConfigException(f"Section 'mixture': {e}")

    network = None
    if doc.get('reaction') is not None:
        rx = _section(doc, 'reaction', False)
        try:
            network = ReactionNetwork(
                reagents=tuple(_list(rx, 'reaction', 'reagents', int)),
                products=tuple(_list(rx, 'reaction', 'products', int)),
                alpha=tuple(_list(rx, 'reaction', 'alpha')),
                prod_weight=tuple(_list(rx, 'reaction', 'product_weights')))
        except ConfigException:
            raise
        except ReactMixException as e:
            raise ConfigException(f"Section 'reaction': {e}")

    profiles = doc.get('initial_data')
    if not isinstance(profiles, list):
        raise ConfigException("Section 'initial_data' must be a list with "
                              "one entry per component.")
    initial = []
    for i, entry in enumerate(profiles):
        path = f'initial_data[{i}]'
        if not isinstance(entry, dict):
            raise ConfigException(f"Entry '{path}' must be an object.")
        unknown = sorted(set(entry) - set(SECTIONS['initial_data']))
        if unknown:
            raise ConfigException(f"Unknown field '{path}.{unknown[0]}'.")
        kind = entry.get('kind', 'constant')
        values = tuple(_list(entry, path, 'values')) \
                     if kind == 'tabulated' else ()
        try:
            initial.append(InitialProfile(
                kind=kind, mean=_number(entry, path, 'mean', 1.0),
                amplitude=_number(entry, path, 'amplitude', 0.0),
                mode=_number(entry, path, 'mode', 1, int),
                phase=_number(entry, path, 'phase', 0.0), values=values))
        except ConfigException as e:
            raise ConfigException(f"Entry '{path}': {e}")

    dealias = doc.get('dealias', True)
    if not isinstance(dealias, bool):
        raise ConfigException("Field 'dealias' must be true or false.")
    compression = snap.get('compression', '') or ''
    if compression not in COMPRESSIONS:
        raise ConfigException(f"Field 'snapshots.compression' must be one of "
                              f"{', '.join(repr(c) for c in COMPRESSIONS)}.")

    try:
        config = SimConfig(
            grid=grid, params=params, network=network,
            t_end=_number(time_doc, 'time', 't_end'),
            dt_max=_number(time_doc, 'time', 'dt_max'),
            cfl_safety=_number(time_doc, 'time', 'cfl_safety', 0.4),
            blowup_factor=_number(time_doc, 'time', 'blowup_factor', 1e6),
            dealias=dealias, initial_data=tuple(initial),
            diagnostics_every=_number(diag, 'diagnostics', 'every', 10, int),
            h_values=tuple(_list(diag, 'diagnostics', 'h'))
                     if 'h' in diag else (1e-2, 1e-3),
            energy_tolerance=_number(diag, 'diagnostics', 'energy_tolerance',
                                     1e-6),
            divu_fraction=_number(diag, 'diagnostics', 'divu_fraction', 0.9),
            snapshot_every=_number(snap, 'snapshots', 'every', 0, int),
            snapshot_compression=compression)
        for profile in config.initial_data:
            profile.evaluate(grid)
    except ConfigException:
        raise
    except ReactMixException as e:
        raise ConfigException(str(e))
    for h in config.h_values:
        if not 0.0 < h <= 0.125:
            raise ConfigException(f"Field 'diagnostics.h': width {h} outside "
                                  "(0, 0.125].")
    return config


#######################################################################
#                              loadConfig                             #
#######################################################################

def configHash(doc: Dict) -> str:
    "SHA-256 of the canonical JSON form (sorted keys, no whitespace)."
    canonical = json.dumps(doc, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def loadConfig(filename: str) -> Tuple[SimConfig, str]:
    """
    Read and validate a configuration file.

    :param filename: path of the JSON file.
    :type filename: str
    :raises reactmix.reactmix.ConfigException: if the file cannot be read or is invalid; the message names the path and the JSON line and column or the offending field.
    :returns: the configuration and its hash.
    """
    try:
        with open(filename, 'rt', encoding='utf-8') as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigException(f"Cannot read '{filename}': {e.strerror}.")
    except json.JSONDecodeError as e:
        raise ConfigException(f"'{filename}' line {e.lineno} column "
                              f"{e.colno}: {e.msg}.")
    try:
        return parseConfig(doc), configHash(doc)
    except ConfigException as e:
        raise ConfigException(f"'{filename}': {e}")
