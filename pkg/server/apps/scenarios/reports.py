# apps/scenarios/reports.py
"""Run directories and the files written into them."""
import json
import logging
from pathlib import Path

import pandas as pd

from apps.scenarios.models import RunReport, ScenarioConfig, to_jsonable
from utils.conf import gla_settings

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12e'


def run_directory(config: ScenarioConfig, output_root=None) -> Path:
    root = Path(output_root if output_root is not None else gla_settings.OUTPUT_ROOT)
    directory = root / config.run_name
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    """Fixed float format and line endings so identical runs give identical bytes."""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug('Wrote %s (%d rows)', path, len(frame))
    return path


def write_json(payload, path: Path) -> Path:
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(to_jsonable(payload), handle, indent=2, sort_keys=True, allow_nan=True)
        handle.write('\n')
    return path


def write_report(report: RunReport) -> Path:
    path = report.directory / 'report.json'
    write_json(report.to_dict(), path)
    logger.info('Report written to %s (%s)', path, 'pass' if report.passed else 'FAIL')
    return path


def headline_frame(report: RunReport) -> pd.DataFrame:
    """Scalar headlines as a table: name, value, provenance, expected, tolerance, passed."""
    rows = []
    for headline in report.headlines:
        if not headline.is_scalar:
            continue
        rows.append({
            'name': headline.name,
            'value': float(headline.value),
            'provenance': headline.provenance,
            'expected': headline.expected if headline.expected is not None else '',
            'tolerance': headline.tolerance if headline.tolerance is not None else '',
            'passed': '' if headline.passed is None else headline.passed,
        })
    return pd.DataFrame(rows, columns=['name', 'value', 'provenance', 'expected', 'tolerance', 'passed'])
