"""
CSV helpers shared by the management commands
"""
import csv
import hashlib
import logging
from pathlib import Path

logger = logging.getLogger(__name__)


def format_real(value):
    """
    Format a real number with 17 significant digits and '.' as decimal separator

    17 digits round-trip any IEEE double, so identical runs give identical bytes.
    """
    value = float(value)
    if value == 0.0:
        # avoid emitting '-0'
        value = 0.0
    return f'{value:.17g}'


def format_cell(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format_real(value)
    if value is None:
        return ''
    return str(value)


def write_csv(path, header, rows):
    """
    Write a CSV file with '\\n' line endings

    Args:
        path: destination path; parent directories are created
        header: sequence of column names
        rows: iterable of row sequences (floats are written with format_real)

    Returns:
        str: hex SHA-256 of the written bytes
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    digest = file_sha256(path)
    logger.info(f'Wrote {path} (sha256 {digest[:12]})')
    return digest


def file_sha256(path):
    sha = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(65536), b''):
            sha.update(chunk)
    return sha.hexdigest()
