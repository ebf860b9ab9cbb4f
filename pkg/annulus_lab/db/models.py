import uuid

import uuid_utils
from sqlalchemy import JSON, Column, DateTime, Float, ForeignKey, Index, Integer, String, Text, Uuid
from sqlalchemy.dialects.postgresql import JSONB
from sqlalchemy.orm import declarative_base, relationship
from sqlalchemy.sql import func


def generate_uuid7():
    """Generate UUIDv7 and convert to standard Python UUID"""
    uuid7_obj = uuid_utils.uuid7()
    return uuid.UUID(str(uuid7_obj))


# JSONB on PostgreSQL, plain JSON elsewhere (SQLite in tests).
JsonType = JSON().with_variant(JSONB(), "postgresql")

Base = declarative_base()


class ReportRecord(Base):
    __tablename__ = "reports"

    id = Column(Uuid(as_uuid=True), primary_key=True, default=generate_uuid7)
    scenario = Column(String(200), nullable=False, index=True)
    schema_version = Column("schema", String(50), nullable=False)
    exit_code = Column(Integer, nullable=False)
    environment = Column(JsonType)
    payload = Column(JsonType, nullable=False)
    created_at = Column(DateTime, default=func.now(), nullable=False)

    checks = relationship(
        "CheckRecordRow",
        back_populates="report",
        cascade="all, delete-orphan",
        order_by="CheckRecordRow.sequence_number",
    )

    def __repr__(self):
        return f"<ReportRecord(id={self.id}, scenario='{self.scenario}', exit_code={self.exit_code})>"


class CheckRecordRow(Base):
    __tablename__ = "report_checks"

    id = Column(Uuid(as_uuid=True), primary_key=True, default=generate_uuid7)
    report_id = Column(Uuid(as_uuid=True), ForeignKey("reports.id", ondelete="CASCADE"), nullable=False)
    sequence_number = Column(Integer, nullable=False)
    check = Column(String(100), nullable=False, index=True)
    value = Column(Float)
    threshold = Column(Float)
    verdict = Column(String(20), nullable=False, index=True)
    message = Column(Text)
    detail = Column(JsonType)
    created_at = Column(DateTime, default=func.now(), nullable=False)

    report = relationship("ReportRecord", back_populates="checks")

    __table_args__ = (
        Index("ix_report_checks_report_id_seq", "report_id", "sequence_number"),
    )

    def __repr__(self):
        return f"<CheckRecordRow(report_id={self.report_id}, check='{self.check}', verdict='{self.verdict}')>"
