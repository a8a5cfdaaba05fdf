from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

# CSV header used by every validator report
REPORT_COLUMNS = ["name", "value", "se", "threshold", "pass"]


class MetricRow(BaseModel):
    name: str
    value: float
    se: Optional[float] = None
    threshold: Optional[float] = None
    passed: Optional[bool] = Field(None, description="None for informational rows")

    def to_record(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "se": self.se,
            "threshold": self.threshold,
            "pass": None if self.passed is None else int(self.passed),
        }


class Report(BaseModel):
    """Named list of metric rows plus free-form notes."""

    title: str
    rows: List[MetricRow] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed is not False for row in self.rows)

    def add(
        self,
        name: str,
        value: float,
        se: Optional[float] = None,
        threshold: Optional[float] = None,
        passed: Optional[bool] = None,
    ) -> MetricRow:
        row = MetricRow(
            name=name, value=float(value), se=se, threshold=threshold, passed=passed
        )
        self.rows.append(row)
        return row

    def row(self, name: str) -> MetricRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(f"No row named '{name}' in report '{self.title}'")

    def to_records(self) -> List[Dict[str, Any]]:
        return [row.to_record() for row in self.rows]


class ValidationReport(Report):
    pass


class ConditionReport(Report):
    asymmetric: bool = False


class GapReport(BaseModel):
    """Monte Carlo gap between a self-supervised and a supervised loss."""

    estimate: float
    se: float
    closed_form: Optional[float] = None


class MomentEstimate(BaseModel):
    order: int
    value: float
    se: float = Field(..., description="Jackknife standard error")
