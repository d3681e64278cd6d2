"""Bounded bidirectional strategic<->tactical message bus."""

from strata.bus.channel import ChannelPair, SendCommandResult, SendReportResult
from strata.bus.messages import Command, Report, ReportKind, TERMINAL_REPORT_KINDS

__all__ = [
    "ChannelPair",
    "Command",
    "Report",
    "ReportKind",
    "SendCommandResult",
    "SendReportResult",
    "TERMINAL_REPORT_KINDS",
]
