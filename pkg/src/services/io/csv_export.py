import logging
from pathlib import Path
from typing import Iterable, List, Mapping, Optional

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def emit_csv(
    rows: Iterable[Mapping], path: str | Path, columns: Optional[List[str]] = None
) -> Path:
    """
    Write rows as CSV with a header, LF line endings and 17 significant digits.

    Args:
        rows (Iterable[Mapping]): Records sharing one set of keys
        path (str | Path): Destination file
        columns (Optional[List[str]]): Header order; required for an empty row set

    Raises:
        ValueError: If the rows are not rectangular
        RuntimeError: If the file cannot be written
    """
    rows = [dict(row) for row in rows]
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    for i, row in enumerate(rows):
        if set(row.keys()) != set(columns):
            raise ValueError(f"emit_csv: row {i} keys {sorted(row)} != columns {sorted(columns)}")
    frame = pd.DataFrame(rows, columns=columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to write CSV {path}: {e}")
        raise RuntimeError(f"Error while writing CSV file: {e}")
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path
