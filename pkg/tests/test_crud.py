import pytest
from sqlmodel import Session

from vosmem.crud import create_run, delete_run, get_run, list_runs, update_run_status
from vosmem.database import get_session, init_db, make_engine
from vosmem.models import CommandEnum, RunStatusEnum

# 使用 SQLite 内存数据库进行测试
TEST_DATABASE_URL = "sqlite:///:memory:"


@pytest.fixture(scope="session")
def engine():
    engine = make_engine(TEST_DATABASE_URL)
    init_db(engine)
    yield engine
    engine.dispose()


@pytest.fixture(scope="function")
def session(engine):
    with get_session(engine) as session:
        yield session


@pytest.fixture(scope="function")
def simulate_run(session: Session):
    run = create_run(session, CommandEnum.SIMULATE, "a" * 64, [0, 1], "0.1.0", "out/simulate")
    yield run
    # 清理
    delete_run(session, run.id)


def test_crud_operations(session: Session):
    # 创建
    run = create_run(session, CommandEnum.SWEEP, "b" * 64, [3], "0.1.0")
    assert run.id is not None
    assert run.status == RunStatusEnum.RUNNING
    assert run.seeds == "3"

    # 查询
    fetched = get_run(session, run.id)
    assert fetched is not None
    assert fetched.config_digest == "b" * 64

    # 更新
    updated = update_run_status(session, run.id, RunStatusEnum.SUCCEEDED, 0.75)
    assert updated.status == RunStatusEnum.SUCCEEDED
    assert updated.mean_jf == pytest.approx(0.75)

    # 删除
    assert delete_run(session, run.id)
    assert get_run(session, run.id) is None
    assert not delete_run(session, run.id)


def test_list_runs_by_command(session: Session, simulate_run):
    bench_run = create_run(session, CommandEnum.BENCH, "c" * 64, [0], "0.1.0")
    simulations = list_runs(session, CommandEnum.SIMULATE)
    assert [run.id for run in simulations] == [simulate_run.id]
    assert {run.id for run in list_runs(session)} == {simulate_run.id, bench_run.id}
    assert str(simulate_run).startswith(f"<{simulate_run.id}>:simulate:")
    delete_run(session, bench_run.id)


def test_update_missing_run(session: Session):
    assert update_run_status(session, 10_000, RunStatusEnum.FAILED) is None
