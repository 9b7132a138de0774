import os
import json
import logging

import pandas as pd

from utils.errors import CorruptFile, IoError

SUBDIRS = ("checkpoints", "runs", "logs", "reports", "data")


class ArtifactManager:
    """Owns the output directory of one command invocation"""

    def __init__(self, out_dir, flush_every=10):
        self.logger = logging.getLogger(__name__)
        self.out_dir = os.path.abspath(out_dir)
        self.flush_every = flush_every

        self.ensure_dirs()

        self.action_logs = []
        self.written = []

        self.logger.debug(f"Artifact manager initialized at {self.out_dir}")

    def ensure_dirs(self):
        """Ensure all artifact directories exist"""
        for sub in ("",) + SUBDIRS:
            dir_path = os.path.join(self.out_dir, sub)
            try:
                if not os.path.exists(dir_path):
                    os.makedirs(dir_path)
                    self.logger.debug(f"Created artifact directory: {dir_path}")
            except OSError as e:
                raise IoError(f"cannot create output directory {dir_path}: {e}", path=dir_path)

    def path(self, *parts):
        return os.path.join(self.out_dir, *parts)

    def _record(self, path):
        rel = os.path.relpath(path, self.out_dir)
        if rel not in self.written:
            self.written.append(rel)
        return path

    def save_json(self, relpath, data):
        """Deterministic JSON (sorted keys, fixed indent)"""
        path = self.path(relpath)
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, 'w') as f:
                json.dump(data, f, indent=2, sort_keys=True)
                f.write("\n")
        except (OSError, TypeError) as e:
            raise IoError(f"cannot write {path}: {e}", path=path)
        self.logger.debug(f"Wrote {path}")
        return self._record(path)

    def load_json(self, relpath):
        path = self.path(relpath)
        try:
            with open(path, 'r') as f:
                return json.load(f)
        except OSError as e:
            raise IoError(f"cannot read {path}: {e}", path=path)
        except json.JSONDecodeError as e:
            raise CorruptFile(f"{path} is not valid JSON: {e}", path=path)

    def save_text(self, relpath, text):
        path = self.path(relpath)
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, 'w') as f:
                f.write(text)
        except OSError as e:
            raise IoError(f"cannot write {path}: {e}", path=path)
        return self._record(path)

    def save_csv(self, relpath, frame):
        path = self.path(relpath)
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        except OSError as e:
            raise IoError(f"cannot write {path}: {e}", path=path)
        self.logger.debug(f"Wrote {len(frame)} rows to {path}")
        return self._record(path)

    def load_csv(self, relpath):
        path = self.path(relpath)
        try:
            return pd.read_csv(path, float_precision="round_trip")
        except OSError as e:
            raise IoError(f"cannot read {path}: {e}", path=path)

    def save_run_results(self, run_name, results):
        """Per-run result file under runs/"""
        return self.save_json(os.path.join("runs", f"{run_name}.json"), results)

    def log_action(self, action_log):
        """Buffer an estimator action; flushed to logs/ every `flush_every` entries"""
        self.action_logs.append(action_log)

        if len(self.action_logs) >= self.flush_every:
            self.flush()

    def flush(self):
        """Append buffered action logs to logs/actions.jsonl"""
        if not self.action_logs:
            return

        log_path = self.path("logs", "actions.jsonl")
        try:
            with open(log_path, 'a') as f:
                for entry in self.action_logs:
                    f.write(json.dumps(entry, sort_keys=True, default=str) + "\n")
            self.logger.debug(f"Saved {len(self.action_logs)} action logs to {log_path}")
            self.action_logs = []
        except OSError as e:
            self.logger.error(f"Error saving action logs: {e}")
