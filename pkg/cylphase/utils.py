from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar
import csv
import logging

from pydantic import ValidationError

from cylphase import THREADS
from cylphase.errors import ConfigError

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

SIGNIFICANT_DIGITS = 12


def make_error(loc: list[str], field_name: str, msg: str) -> dict:
    local = loc.copy()
    local.append(field_name)
    return {
        "loc": local,
        "msg": msg
    }


def config_error_from_validation(
    exc: ValidationError,
    loc: list[str] = ['config']
) -> ConfigError:
    """Turn pydantic's error list into a ConfigError with loc/msg records"""
    details = []
    for err in exc.errors():
        path = [str(x) for x in err.get('loc', ())]
        field = path.pop() if path else 'value'
        details.append(make_error(loc + path, field, err.get('msg', '')))
    summary = "; ".join(
        f"{'.'.join(d['loc'])}: {d['msg']}" for d in details)
    return ConfigError(f"Invalid configuration: {summary}", details)


def fmt(value: float) -> str:
    # repr-stable formatting keeps output byte-identical between runs
    text = f"{float(value):.{SIGNIFICANT_DIGITS}g}"
    return "0" if text == "-0" else text


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[float | int]]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                str(x) if isinstance(x, int) else fmt(x) for x in row
            ])
    logger.debug("wrote %s", path)
    return path


def read_csv(
    path: str | Path,
    expected_header: Sequence[str]
) -> list[list[float]]:
    with open(path, newline='') as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(expected_header):
            raise ConfigError(
                f"{path}: expected header {','.join(expected_header)}",
                [make_error(['file'], str(path), 'Unexpected header')]
            )
        return [[float(x) for x in row] for row in reader if row]


def parallel_map(
    func: Callable[[T], R],
    items: Sequence[T],
    threads: int | None = None
) -> list[R]:
    """Ordered map, threaded when more than one worker is configured"""
    workers = THREADS if threads is None else threads
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
