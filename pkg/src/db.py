"""
Run ledger for the repair simulator.

Every run directory carries its own SQLite file recording which nodes are
available, failed or repaired, plus one row per repair run. All commands
go through get_connection() instead of managing their own connections.
"""

import sqlite3
import logging
from contextlib import contextmanager
from pathlib import Path

import config

logger = logging.getLogger(__name__)

STATUS_AVAILABLE = "available"
STATUS_FAILED = "failed"
STATUS_REPAIRED = "repaired"


def db_path(run_dir: Path) -> Path:
    return Path(run_dir) / config.DB_NAME


@contextmanager
def get_connection(run_dir: Path):
    """Yield a SQLite connection with Row factory. Auto-commits and closes."""
    Path(run_dir).mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(str(db_path(run_dir)))
    conn.row_factory = sqlite3.Row
    conn.execute("PRAGMA journal_mode=WAL")
    try:
        yield conn
        conn.commit()
    except Exception:
        conn.rollback()
        raise
    finally:
        conn.close()


def init_db(run_dir: Path):
    """Create tables if they don't exist."""
    with get_connection(run_dir) as conn:
        cur = conn.cursor()

        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS node_status (
                node INTEGER PRIMARY KEY,
                status TEXT NOT NULL DEFAULT 'available',
                updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            );
            """
        )

        # One row per cmd_repair
        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS repair_runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                failed_pair TEXT NOT NULL,
                groups INTEGER,
                rb_total INTEGER,
                eps_measured TEXT,
                helpers_P INTEGER,
                transcript_path TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            );
            """
        )


# ---------------------------------------------------------------------------
# Node status
# ---------------------------------------------------------------------------


def set_node_status(run_dir: Path, nodes, status: str):
    """Insert or update the status of the given nodes."""
    nodes = list(nodes)
    with get_connection(run_dir) as conn:
        conn.executemany(
            """
            INSERT INTO node_status (node, status) VALUES (?, ?)
            ON CONFLICT(node) DO UPDATE
            SET status = excluded.status, updated_at = CURRENT_TIMESTAMP;
            """,
            [(node, status) for node in nodes],
        )
    logger.debug("Marked %d nodes %s", len(nodes), status)


def get_node_status(run_dir: Path) -> dict:
    """Return {node: status} for every registered node."""
    with get_connection(run_dir) as conn:
        rows = conn.execute("SELECT node, status FROM node_status ORDER BY node;").fetchall()
    return {row["node"]: row["status"] for row in rows}


def get_nodes_by_status(run_dir: Path, status: str) -> list[int]:
    with get_connection(run_dir) as conn:
        rows = conn.execute(
            "SELECT node FROM node_status WHERE status = ? ORDER BY node;", (status,)
        ).fetchall()
    return [row["node"] for row in rows]


# ---------------------------------------------------------------------------
# Repair runs
# ---------------------------------------------------------------------------


def save_repair_run(
    run_dir: Path,
    failed_pair: tuple,
    groups: int,
    rb_total: int,
    eps_measured: str,
    helpers_P: int,
    transcript_path: str,
):
    """Record a repair run. eps_measured is stored as an exact fraction string."""
    with get_connection(run_dir) as conn:
        conn.execute(
            """
            INSERT INTO repair_runs
            (failed_pair, groups, rb_total, eps_measured, helpers_P, transcript_path)
            VALUES (?, ?, ?, ?, ?, ?);
            """,
            (f"{failed_pair[0]},{failed_pair[1]}", groups, rb_total, eps_measured,
             helpers_P, transcript_path),
        )
    logger.info("Saved repair run for nodes %s (P=%d, eps=%s)", failed_pair, helpers_P, eps_measured)


def get_repair_run_history(run_dir: Path, limit: int = 10) -> list:
    """Most recent repair_runs rows first."""
    with get_connection(run_dir) as conn:
        return conn.execute(
            "SELECT * FROM repair_runs ORDER BY id DESC LIMIT ?;",
            (limit,),
        ).fetchall()
