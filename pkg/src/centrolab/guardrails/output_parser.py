"""
Report parser for reading evaluation artifacts back from run directories.

This module handles parsing report.json files into EvalReport objects and
collecting every completed cell of a run.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Union

from pydantic import ValidationError

from centrolab.models.schemas import EvalReport

logger = logging.getLogger(__name__)


class ReportParser:
    """
    Parses report artifacts into validated EvalReport objects.

    Unreadable or invalid files are logged and skipped, never fatal.
    """

    report_name = "report.json"

    def load_json(self, path: Union[str, Path]) -> Optional[dict]:
        """
        Read a JSON object from disk.

        Args:
            path: File to read

        Returns:
            Parsed dict or None if the file is missing or not a JSON object
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Cannot read {path}: {e}")
            return None
        if not isinstance(data, dict):
            logger.error(f"{path} does not hold a JSON object")
            return None
        return data

    def parse_report(self, path: Union[str, Path]) -> Optional[EvalReport]:
        """
        Parse a report.json (or the cell directory holding one).

        Args:
            path: Report file or cell directory

        Returns:
            EvalReport or None if parsing fails
        """
        path = self.report_path(path)
        data = self.load_json(path)
        if data is None:
            return None
        try:
            return EvalReport.model_validate(data)
        except ValidationError as e:
            logger.error(f"Invalid report {path}: {e}")
            return None

    def report_path(self, path: Union[str, Path]) -> Path:
        """The report file itself, given either the file or its cell directory."""
        path = Path(path)
        return path if path.name == self.report_name else path / self.report_name

    def is_report_complete(self, path: Union[str, Path]) -> bool:
        """True if `path` holds a report that validates; a missing report is not an error."""
        path = self.report_path(path)
        return path.is_file() and self.parse_report(path) is not None

    def collect_reports(self, run_dir: Union[str, Path]) -> List[EvalReport]:
        """
        Every valid report under a run directory, in path order.

        Args:
            run_dir: Run directory

        Returns:
            List of EvalReport (possibly empty)
        """
        reports = []
        for path in sorted(Path(run_dir).rglob(self.report_name)):
            report = self.parse_report(path)
            if report is not None:
                reports.append(report)
        return reports


# Global instance for easy import
report_parser = ReportParser()
