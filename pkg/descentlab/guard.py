#!/usr/bin/env python3
"""
DESCENTLAB - INVARIANT GUARD
Collects findings from audits and oracles and decides the exit status.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List

logger = logging.getLogger(__name__)


# ============================================================================
# TYPES
# ============================================================================

class Severity(Enum):
    INFO = "info"
    WARNING = "warning"
    VIOLATION = "violation"


@dataclass
class Finding:
    """One recorded observation"""

    severity: Severity
    source: str
    message: str
    witness: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "severity": self.severity.value,
            "source": self.source,
            "message": self.message,
            "witness": self.witness,
        }


# ============================================================================
# GUARD
# ============================================================================

class InvariantGuard:
    """
    Run-level guard

    - records findings (bounded history)
    - turns invariant checks into findings
    - exit status is nonzero iff a VIOLATION was recorded
    """

    def __init__(self, max_findings: int = 1000):
        self.findings: deque = deque(maxlen=max_findings)
        self.violation_count = 0
        self.callbacks: List[Callable[[Finding], None]] = []

    def record(self, severity: Severity, source: str, message: str, **witness) -> Finding:
        finding = Finding(severity, source, message, witness)
        self.findings.append(finding)
        if severity is Severity.VIOLATION:
            self.violation_count += 1
            logger.error("%s: %s", source, message)
        elif severity is Severity.WARNING:
            logger.warning("%s: %s", source, message)
        else:
            logger.info("%s: %s", source, message)
        for callback in self.callbacks:
            callback(finding)
        return finding

    def check(self, ok_reason: tuple, source: str, theorem: bool = True, **witness) -> bool:
        """
        Record a (ok, reason) verdict

        Args:
            ok_reason: (is_ok, reason) tuple from a check_* function
            theorem: failures are VIOLATION when True, INFO otherwise
        """
        ok, reason = ok_reason
        if not ok:
            self.record(Severity.VIOLATION if theorem else Severity.INFO, source, reason, **witness)
        return ok

    def on_finding(self, callback: Callable[[Finding], None]) -> None:
        self.callbacks.append(callback)

    @property
    def has_violations(self) -> bool:
        return self.violation_count > 0

    def exit_code(self) -> int:
        return 1 if self.has_violations else 0

    def summary(self) -> Dict[str, Any]:
        counts = {s.value: 0 for s in Severity}
        for finding in self.findings:
            counts[finding.severity.value] += 1
        return {"counts": counts, "findings": [f.to_dict() for f in self.findings]}
