"""
Snapshot files: one JSON header line {"N": .., "M": .., "t": ..} followed by
N*M little-endian float64 values, component-major. The whole file may be
compressed with zstd, lz4 or gzip; readers recognize the compression by its
magic number.
"""

import glob, gzip, io, json, os, struct
from typing import List, Tuple

import numpy as np
import zstandard # install with "pip install zstandard"
import lz4.frame # install with "pip install lz4"

from .mixture import DensityField
from .reactmix import SnapshotException


#######################################################################
#                        Magic Numbers of Formats                     #
#######################################################################

GZIP  = 0x8b1f
ZSTD  = 0xb528
LZ4   = 0x2204

COMPRESSIONS = ('', 'zstd', 'lz4', 'gzip')

EXTENSIONS = {'': '', 'zstd': '.zst', 'lz4': '.lz4', 'gzip': '.gz'}


#######################################################################
#                        Compression Handling                         #
#######################################################################

def compress(data: bytes, compression: str) -> bytes:
    """
    Compress *data*.

    :param data: uncompressed bytes.
    :type data: bytes
    :param compression: '', 'zstd', 'lz4' or 'gzip'.
    :type compression: str
    :raises reactmix.reactmix.SnapshotException: on an unknown compression.
    :returns: compressed bytes.
    """
    if compression == '':
        return data
    if compression == 'zstd':
        return zstandard.ZstdCompressor().compress(data)
    if compression == 'lz4':
        return lz4.frame.compress(data)
    if compression == 'gzip':
        return gzip.compress(data, mtime=0)
    raise SnapshotException(f"Unknown compression '{compression}'.")


def uncompress(data: bytes, filename: str) -> Tuple[bytes, str]:
    """
    Detect the compression of *data* from its first two bytes and undo it.

    :param data: contents of a snapshot file.
    :type data: bytes
    :param filename: file name for error messages.
    :type filename: str
    :raises reactmix.reactmix.SnapshotException: if the data cannot be uncompressed.
    :returns: uncompressed bytes and the compression, '' for none.
    """
    if len(data) >= 2:
        word = struct.unpack('<H', data[:2])[0]
        try:
            if word == GZIP:
                return gzip.decompress(data), 'gzip'
            if word == ZSTD:
                with zstandard.ZstdDecompressor().stream_reader(
                        io.BytesIO(data), read_across_frames=True) as reader:
                    return reader.read(), 'zstd'
            if word == LZ4:
                return lz4.frame.decompress(data), 'lz4'
        except Exception as e:
            raise SnapshotException(f"'{filename}' is corrupted: {e}.")
    return data, ''


#######################################################################
#                          Read and Write                             #
#######################################################################

def snapshotName(directory: str, step: int, compression: str = '') -> str:
    "File name of the snapshot of *step* in *directory*."
    return os.path.join(directory, f'snapshot_{step:08d}.bin'
                                   f'{EXTENSIONS[compression]}')


def writeSnapshot(filename: str, state: DensityField,
                  compression: str = '') -> None:
    """
    Write *state* to *filename*.

    :param filename: output file.
    :type filename: str
    :param state: densities.
    :type state: DensityField
    :param compression: '', 'zstd', 'lz4' or 'gzip'.
    :type compression: str
    """
    header = json.dumps({'N': state.n_components, 'M': state.grid_size,
                         't': state.time}, sort_keys=True)
    payload = header.encode('utf-8') + b'\n' + \
              state.values.astype('<f8').tobytes(order='C')
    with open(filename, 'wb') as f:
        f.write(compress(payload, compression))


def readSnapshot(filename: str) -> DensityField:
    """
    Read a snapshot, compressed or not.

    :param filename: snapshot file.
    :type filename: str
    :raises reactmix.reactmix.SnapshotException: if the file is unreadable, truncated or malformed.
    :returns: the densities with their time stamp.
    """
    try:
        with open(filename, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise SnapshotException(f"Cannot read '{filename}': {e.strerror}.")
    data, _ = uncompress(data, filename)
    newline = data.find(b'\n')
    if newline < 0:
        raise SnapshotException(f"'{filename}' has no header line.")
    try:
        header = json.loads(data[:newline].decode('utf-8'))
        n, m, t = int(header['N']), int(header['M']), float(header['t'])
    except (ValueError, KeyError, TypeError) as e:
        raise SnapshotException(f"'{filename}' has a malformed header: {e}.")
    body = data[newline + 1:]
    if len(body) != 8 * n * m:
        raise SnapshotException(f"'{filename}' is truncated: {len(body)} "
                                f"bytes for {n} x {m} values.")
    values = np.frombuffer(body, dtype='<f8').reshape(n, m)
    try:
        return DensityField(values, t)
    except Exception as e:
        raise SnapshotException(f"'{filename}': {e}")


def findSnapshots(pattern: str) -> List[str]:
    """
    Expand a glob pattern into a sorted list of snapshot files.

    :raises reactmix.reactmix.SnapshotException: if nothing matches.
    """
    names = sorted(glob.glob(pattern))
    if not names:
        raise SnapshotException(f"No snapshots match '{pattern}'.")
    return names
