import os
import csv
import json
import logging
import threading
from datetime import datetime
from typing import Dict, Any
from logging.handlers import RotatingFileHandler

import numpy as np

CSV_HEADER = [
    "timestamp", "session_id", "event_type", "event_subtype",
    "experiment", "replication", "estimator", "objective", "converged",
    "message", "data_json", "error"
]
ROW_KEYS = {"experiment", "replication", "estimator", "objective", "converged", "message", "error"}


class EventLogger:
    """
    Event logger for Monte Carlo experiments and single estimation runs.
    Writes a rotating text log, an events CSV and a JSON-lines stream.
    """

    def _convert_for_json(self, value):
        """Convert numpy types, tuples and datetime to JSON serializable types"""
        if isinstance(value, dict):
            return {k: self._convert_for_json(v) for k, v in value.items()}
        elif isinstance(value, (list, tuple)):
            return [self._convert_for_json(v) for v in value]
        elif isinstance(value, datetime):
            return value.isoformat()
        elif isinstance(value, np.integer):
            return int(value)
        elif isinstance(value, np.floating):
            return float(value)
        elif isinstance(value, np.bool_):
            return bool(value)
        elif isinstance(value, np.ndarray):
            return value.tolist()
        elif hasattr(value, 'as_dict'):
            return self._convert_for_json(value.as_dict())
        return value

    def __init__(self, config_manager=None, log_dir="logs", log_filename="events.csv", experiment: str = ""):
        self.config = config_manager
        self.experiment = experiment

        if config_manager and hasattr(config_manager, 'get_logging_config'):
            log_cfg = config_manager.get_logging_config()
            self.log_dir = log_cfg.get('log_directory', log_dir)
            self.max_log_size_mb = log_cfg.get('max_log_size_mb', 50)
            self.backup_count = log_cfg.get('backup_count', 5)
            self.main_log_level = log_cfg.get('main_log_level', 'INFO')
            self.console_log_level = log_cfg.get('console_log_level', 'INFO')
            self.export_events_csv = log_cfg.get('export_events_csv', True)
            self.log_each_estimation = log_cfg.get('log_each_estimation', True)
        else:
            self.log_dir = log_dir
            self.max_log_size_mb = 50
            self.backup_count = 5
            self.main_log_level = 'INFO'
            self.console_log_level = 'INFO'
            self.export_events_csv = True
            self.log_each_estimation = True

        os.makedirs(self.log_dir, exist_ok=True)

        self.csv_file = os.path.join(self.log_dir, log_filename)
        self.json_file = os.path.join(self.log_dir, "events.jsonl")
        self.main_log = os.path.join(self.log_dir, 'carma_indirect.log')

        # replications may log from worker threads
        self._lock = threading.Lock()

        self._init_structured_logging()
        self._init_csv_file()

        self.session_start = datetime.now()
        self.session_id = self.session_start.strftime('%Y%m%d_%H%M%S')
        self.events_count = {
            'data': 0, 'estimations': 0, 'replications': 0,
            'experiments': 0, 'errors': 0
        }

    def _init_structured_logging(self):
        """Initialize structured logging with configured levels."""
        self.logger = logging.getLogger('CarmaIndirect')
        self.logger.setLevel(getattr(logging, self.main_log_level.upper(), logging.INFO))

        # Clear any existing handlers to avoid duplicates
        for handler in list(self.logger.handlers):
            handler.close()
        self.logger.handlers.clear()

        max_bytes = self.max_log_size_mb * 1024 * 1024
        handler = RotatingFileHandler(self.main_log, maxBytes=max_bytes, backupCount=self.backup_count)

        formatter = logging.Formatter(
            '%(asctime)s | %(levelname)s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        handler.setFormatter(formatter)
        self.logger.addHandler(handler)

        console_handler = logging.StreamHandler()
        console_handler.setLevel(getattr(logging, self.console_log_level.upper(), logging.INFO))
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        self.logger.debug(f"Logging configured: Main={self.main_log_level}, Console={self.console_log_level}")

    def _init_csv_file(self):
        """Write the CSV header once."""
        if self.export_events_csv and not os.path.exists(self.csv_file):
            with open(self.csv_file, "w", newline='') as f:
                csv.writer(f, lineterminator="\n").writerow(CSV_HEADER)

    def log_data(self, kind: str, data: Dict[str, Any]):
        """Log a simulated series or a property check."""
        self._count('data')
        self._write_enhanced_event("data", kind, data)
        self.logger.debug(f"DATA_{kind.upper()}: {data.get('message', kind)}")

    def log_estimation(self, estimator: str, data: Dict[str, Any]):
        """Log the outcome of one estimator call."""
        self._count('estimations')
        if not self.log_each_estimation:
            return
        self._write_enhanced_event("estimation", estimator, {"estimator": estimator, **data})
        self.logger.debug(
            f"ESTIMATION_{estimator.upper()}: rep={data.get('replication', '')} "
            f"theta={data.get('theta_hat')} objective={data.get('objective')} converged={data.get('converged')}"
        )

    def log_replication(self, replication: int, data: Dict[str, Any]):
        """Log the per-replication summary (failures included)."""
        self._count('replications')
        self._write_enhanced_event("replication", "completed", {"replication": replication, **data})
        self.logger.debug(f"REPLICATION {replication}: {data.get('message', 'done')}")

    def log_experiment(self, phase: str, data: Dict[str, Any]):
        """Log experiment start and completion."""
        self._count('experiments')
        self._write_enhanced_event("experiment", phase, data)
        self.logger.info(f"EXPERIMENT_{phase.upper()}: {data.get('message', data.get('experiment', ''))}")

    def log_error(self, error_info: Any, context: Dict[str, Any] = None):
        """Error logging with context."""
        self._count('errors')

        if isinstance(error_info, dict):
            error_msg = error_info.get("error", str(error_info))
        else:
            error_msg = f"{type(error_info).__name__}: {error_info}" if isinstance(error_info, Exception) else str(error_info)

        error_data = {"error": error_msg, **(context or {})}
        self._write_enhanced_event("error", "exception", error_data)
        self.logger.error(f"ERROR: {error_msg}")

    def _count(self, key: str):
        with self._lock:
            self.events_count[key] += 1

    def _write_enhanced_event(self, event_type: str, event_subtype: str, data: Dict[str, Any]):
        """Write one event to the CSV and the JSON-lines stream."""
        timestamp = datetime.now()
        data = {k: self._convert_for_json(v) for k, v in data.items()}

        row = {
            "timestamp": timestamp.isoformat(),
            "session_id": self.session_id,
            "event_type": event_type,
            "event_subtype": event_subtype,
            "experiment": data.get("experiment", self.experiment),
            "replication": data.get("replication", ""),
            "estimator": data.get("estimator", ""),
            "objective": data.get("objective", ""),
            "converged": data.get("converged", ""),
            "message": data.get("message", ""),
            "data_json": json.dumps({k: v for k, v in data.items() if k not in ROW_KEYS}, default=str),
            "error": data.get("error", "")
        }

        event = {
            "timestamp": row["timestamp"],
            "session_id": self.session_id,
            "event_type": event_type,
            "event_subtype": event_subtype,
            "data": data
        }

        with self._lock:
            if self.export_events_csv:
                with open(self.csv_file, "a", newline='') as f:
                    csv.writer(f, lineterminator="\n").writerow([row.get(h, "") for h in CSV_HEADER])
            with open(self.json_file, "a") as f:
                f.write(json.dumps(event, default=str) + "\n")

    def generate_report(self) -> Dict[str, Any]:
        """Summarize the session's events."""
        session_duration = datetime.now() - self.session_start

        csv_counts = {"data": 0, "estimation": 0, "replication": 0, "experiment": 0, "error": 0}
        if os.path.exists(self.csv_file):
            with open(self.csv_file, "r") as f:
                for row in csv.DictReader(f):
                    event_type = row.get("event_type", "")
                    if event_type in csv_counts:
                        csv_counts[event_type] += 1

        return {
            "session_start": self.session_start.isoformat(),
            "session_duration": str(session_duration),
            "events_count": dict(self.events_count),
            "csv_counts": csv_counts,
            "total_events": sum(self.events_count.values()),
            "log_files": {
                "csv": self.csv_file,
                "jsonl": self.json_file,
                "main_log": self.main_log
            }
        }

    def close(self):
        for handler in list(self.logger.handlers):
            handler.close()
        self.logger.handlers.clear()
