'''
Plot-ready output: CSV tables and JSON documents with a fixed float format,
so that identical runs produce identical bytes.
'''
import csv
import json
import math

import numpy as np

FLOAT_FORMAT = '%.12g'


def format_value(value):
    '''
    Format a table cell: floats with 12 significant digits, blank for None
    '''
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(stream, header, rows):
    '''
    Write the header and the rows as comma-separated values with LF line endings
    '''
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])


def columns(*arrays):
    '''
    Iterate over the rows of the given columns; a None column gives blank cells
    '''
    n = max(len(a) for a in arrays if a is not None)
    for i in range(n):
        yield [None if a is None else a[i] for a in arrays]


def _rounded(value):
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return None
        return float(FLOAT_FORMAT % value)
    return value


def write_json(stream, document):
    '''
    Write the document as JSON with sorted keys and 12 significant digits;
    non-finite numbers become null
    '''
    json.dump(_rounded(document), stream, indent=2, sort_keys=True)
    stream.write('\n')
