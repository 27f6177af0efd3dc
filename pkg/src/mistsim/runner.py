"""Deterministic sweep execution and headered CSV output.

Sweeps are split into groups (one per expensive shared computation, e.g. a
gate-charge value needing one Floquet branch set).  Groups fan out to a
process pool but their rows are written in the fixed group order, each group
atomically followed by a progress-file update.  Resuming verifies the
completed groups form a prefix of the plan, drops any rows from interrupted
groups, and continues; the final dataset is identical to an uninterrupted
run.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os

from .errors import ConfigError

TOOL_VERSION = "0.1.0"


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metadata_lines(metadata: dict):
    return [f"# {key}: {value}" for key, value in metadata.items()]


def read_data_rows(path) -> list[list[str]]:
    """Rows of an output CSV, skipping metadata lines and the column header."""
    rows = []
    if not os.path.exists(path):
        return rows
    with open(path) as fh:
        header_seen = False
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                header_seen = True
                continue
            rows.append(line.split(","))
    return rows


def default_workers() -> int:
    return os.cpu_count() or 1


def run_metadata(config: dict, seed: int, extra: dict | None = None) -> dict:
    meta = {
        "tool": f"mistsim {TOOL_VERSION}",
        "config_hash": config_hash(config),
        "seed": seed,
    }
    if extra:
        meta.update(extra)
    return meta


def write_sidecar(path, config: dict, metadata: dict):
    payload = {"metadata": metadata, "effective_config": config}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class GroupedSweep:
    """Executes group workers and writes their rows to one or more CSVs.

    files maps a logical name to (filename, columns).  The worker receives a
    group key and returns {logical name: [row dict, ...]}.  Every row must
    carry a "group" column used to prune rows of interrupted groups on
    resume.
    """

    def __init__(self, out_dir, files: dict, metadata: dict):
        self.out_dir = out_dir
        self.files = files
        self.metadata = metadata
        self.progress_path = os.path.join(out_dir, "progress.json")
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, name):
        return os.path.join(self.out_dir, self.files[name][0])

    def _load_progress(self):
        if not os.path.exists(self.progress_path):
            return []
        with open(self.progress_path) as fh:
            return json.load(fh)["completed_groups"]

    def _save_progress(self, completed):
        tmp = self.progress_path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump({"completed_groups": completed}, fh)
        os.replace(tmp, self.progress_path)

    def _init_files(self, completed_keys):
        """(Re)write file headers, keeping only rows of completed groups."""
        keep = set(str(k) for k in completed_keys)
        for name, (fname, columns) in self.files.items():
            path = self._path(name)
            old_rows = read_data_rows(path) if completed_keys else []
            group_col = columns.index("group")
            with open(path, "w") as fh:
                for line in metadata_lines(self.metadata):
                    fh.write(line + "\n")
                fh.write(",".join(columns) + "\n")
                for row in old_rows:
                    if row[group_col] in keep:
                        fh.write(",".join(row) + "\n")

    def run(self, group_keys: list, worker, n_workers: int):
        """Run the remaining groups; returns the number executed."""
        completed = self._load_progress()
        if [str(k) for k in group_keys][:len(completed)] != list(completed):
            raise ConfigError(
                "existing progress does not match the planned sweep; use a "
                "fresh output directory", field="output.dir")
        self._init_files(completed)
        remaining = group_keys[len(completed):]
        if not remaining:
            return 0

        handles = {name: open(self._path(name), "a") for name in self.files}
        try:
            def emit(key, results):
                for name, rows in results.items():
                    columns = self.files[name][1]
                    fh = handles[name]
                    for row in rows:
                        fh.write(",".join(format_value(row[c]) for c in columns)
                                 + "\n")
                    fh.flush()
                completed.append(str(key))
                self._save_progress(completed)

            if n_workers <= 1 or len(remaining) == 1:
                for key in remaining:
                    emit(key, worker(key))
            else:
                with multiprocessing.Pool(processes=n_workers) as pool:
                    for key, results in zip(remaining,
                                            pool.imap(worker, remaining)):
                        emit(key, results)
        finally:
            for fh in handles.values():
                fh.close()
        return len(remaining)
