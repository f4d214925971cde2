"""Run registry: one row per CLI invocation, stored through SQLAlchemy."""

import json
import logging
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from sqlalchemy import Column, DateTime, Integer, String, Text, create_engine, select
from sqlalchemy.orm import declarative_base, sessionmaker

from utils.config import get_config

logger = logging.getLogger(__name__)

Base = declarative_base()


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(50), nullable=False)
    config_json = Column(Text, nullable=False)
    # decimal text: CLI seeds are unbounded integers
    seed_text = Column("seed", String(40))
    summary_json = Column(Text, default="{}")
    output_dir = Column(String(255))
    created_at = Column(DateTime, default=datetime.utcnow)

    @property
    def seed(self) -> Optional[int]:
        return None if self.seed_text is None else int(self.seed_text)

    def __repr__(self):
        return f"<RunRecord {self.id}: {self.command}>"

    def summary(self) -> Dict[str, Any]:
        return json.loads(self.summary_json or "{}")


def default_store_url(output_dir: Optional[str] = None) -> str:
    settings = get_config()
    if settings.RUN_STORE_URL:
        return settings.RUN_STORE_URL
    out = Path(output_dir or settings.OUTPUT_DIR)
    return f"sqlite:///{out / 'runs.sqlite'}"


class RunStore:
    """Thin wrapper around an engine and a session factory."""

    def __init__(self, url: Optional[str] = None):
        self.url = url or default_store_url()
        if self.url.startswith("sqlite:///") and ":memory:" not in self.url:
            Path(self.url[len("sqlite:///"):]).parent.mkdir(parents=True, exist_ok=True)
        options = dict(get_config().RUN_STORE_ENGINE_OPTIONS)
        self.engine = create_engine(self.url, **options)
        self.SessionFactory = sessionmaker(bind=self.engine, expire_on_commit=False)

    def create_tables(self) -> None:
        Base.metadata.create_all(self.engine, checkfirst=True)

    @contextmanager
    def session(self):
        """
        Context manager for a session that commits on success.

        Yields:
            An SQLAlchemy session object
        """
        session = self.SessionFactory()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            raise e
        finally:
            session.close()

    def record_run(
        self,
        command: str,
        config: Dict[str, Any],
        seed: Optional[int],
        summary: Dict[str, Any],
        output_dir: Optional[str] = None,
    ) -> RunRecord:
        self.create_tables()
        record = RunRecord(
            command=command,
            config_json=json.dumps(config, sort_keys=True, default=str),
            seed_text=None if seed is None else str(int(seed)),
            summary_json=json.dumps(summary, sort_keys=True, default=str),
            output_dir=str(output_dir) if output_dir is not None else None,
        )
        with self.session() as session:
            session.add(record)
        logger.info(f"Recorded run {record.id} ({command}) in {self.url}")
        return record

    def list_runs(self, command: Optional[str] = None) -> List[RunRecord]:
        self.create_tables()
        query = select(RunRecord).order_by(RunRecord.id)
        if command is not None:
            query = query.where(RunRecord.command == command)
        with self.session() as session:
            return list(session.scalars(query))
