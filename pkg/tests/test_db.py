from src import db


def test_init_creates_tables(tmp_path):
    db.init_db(tmp_path)
    assert db.db_path(tmp_path).exists()
    with db.get_connection(tmp_path) as conn:
        names = {row["name"] for row in conn.execute("SELECT name FROM sqlite_master WHERE type='table'")}
    assert {"node_status", "repair_runs"} <= names


def test_node_status_upsert(tmp_path):
    db.init_db(tmp_path)
    db.set_node_status(tmp_path, range(1, 6), db.STATUS_AVAILABLE)
    db.set_node_status(tmp_path, [2, 4], db.STATUS_FAILED)
    assert db.get_nodes_by_status(tmp_path, db.STATUS_FAILED) == [2, 4]
    assert db.get_nodes_by_status(tmp_path, db.STATUS_AVAILABLE) == [1, 3, 5]

    db.set_node_status(tmp_path, [2], db.STATUS_REPAIRED)
    status = db.get_node_status(tmp_path)
    assert len(status) == 5
    assert status[2] == db.STATUS_REPAIRED
    assert status[4] == db.STATUS_FAILED


def test_repair_runs(tmp_path):
    db.init_db(tmp_path)
    assert db.get_repair_run_history(tmp_path) == []
    db.save_repair_run(tmp_path, (1, 2), 140, 1000, "7/9", 47, "t1.json")
    db.save_repair_run(tmp_path, (1, 8), 140, 1100, "4/5", 46, "t2.json")

    history = db.get_repair_run_history(tmp_path, limit=5)
    assert [row["rb_total"] for row in history] == [1100, 1000]
    assert history[0]["failed_pair"] == "1,8"
    assert history[0]["eps_measured"] == "4/5"
    assert len(db.get_repair_run_history(tmp_path, limit=1)) == 1


def test_rollback_on_error(tmp_path):
    db.init_db(tmp_path)
    try:
        with db.get_connection(tmp_path) as conn:
            conn.execute("INSERT INTO node_status (node, status) VALUES (1, 'failed')")
            raise RuntimeError("boom")
    except RuntimeError:
        pass
    assert db.get_node_status(tmp_path) == {}
