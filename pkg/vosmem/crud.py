from typing import List, Optional, Sequence

from sqlmodel import Session, select

from vosmem.models import CommandEnum, RunRecord, RunStatusEnum


def create_run(session: Session, command: CommandEnum, config_digest: str,
               seeds: Sequence[int], tool_version: str, output_dir: str = "",
               status: RunStatusEnum = RunStatusEnum.RUNNING) -> RunRecord:
    run = RunRecord(
        command=command.value,
        config_digest=config_digest,
        seeds=",".join(str(s) for s in seeds),
        tool_version=tool_version,
        status=status.value,
        output_dir=output_dir,
    )
    session.add(run)
    session.commit()
    session.refresh(run)
    return run


def get_run(session: Session, run_id: int) -> Optional[RunRecord]:
    return session.exec(select(RunRecord).where(RunRecord.id == run_id)).first()


def list_runs(session: Session, command: Optional[CommandEnum] = None) -> List[RunRecord]:
    statement = select(RunRecord)
    if command is not None:
        statement = statement.where(RunRecord.command == command.value)
    return list(session.exec(statement.order_by(RunRecord.id)).all())


def update_run_status(session: Session, run_id: int, status: RunStatusEnum,
                      mean_jf: Optional[float] = None) -> Optional[RunRecord]:
    run = get_run(session, run_id)
    if not run:
        return None
    run.status = status.value
    if mean_jf is not None:
        run.mean_jf = mean_jf
    session.add(run)
    session.commit()
    session.refresh(run)
    return run


def delete_run(session: Session, run_id: int) -> bool:
    run = get_run(session, run_id)
    if not run:
        return False
    session.delete(run)
    session.commit()
    return True
