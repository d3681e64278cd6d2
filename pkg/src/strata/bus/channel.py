"""Ordered, bounded, non-blocking channel pair between the two layers.

The tactical layer must never wait on the strategic layer: every
operation here returns immediately. When the uplink overflows, the
oldest refreshable (non-terminal) report is evicted; terminal reports
are never dropped because they are the strategic layer's ground truth.
"""
from __future__ import annotations

import threading
from collections import deque
from enum import Enum

from strata.bus.messages import Command, Report

DOWNLINK_CAPACITY = 16
UPLINK_CAPACITY = 256


class SendCommandResult(Enum):
    QUEUED = "queued"
    DOWNLINK_FULL = "downlink_full"


class SendReportResult(Enum):
    QUEUED = "queued"
    DROPPED_OLDEST = "dropped_oldest"


class ChannelPair:
    """One robot's strategic<->tactical link: FIFO downlink + FIFO uplink.

    Safe for one producer and one consumer per direction running from
    different threads; no operation ever blocks on queue state.
    """

    def __init__(
        self,
        robot_id: str,
        downlink_capacity: int = DOWNLINK_CAPACITY,
        uplink_capacity: int = UPLINK_CAPACITY,
    ) -> None:
        if downlink_capacity < 1 or uplink_capacity < 1:
            raise ValueError("channel capacities must be >= 1")
        self.robot_id = robot_id
        self.downlink_capacity = downlink_capacity
        self.uplink_capacity = uplink_capacity
        self._down: deque[Command] = deque()
        self._up: deque[Report] = deque()
        self._down_lock = threading.Lock()
        self._up_lock = threading.Lock()
        self.dropped_uplink_count = 0

    # -- downlink (strategic -> tactical) ---------------------------------

    def send_command(self, command: Command) -> SendCommandResult:
        """Append FIFO; a full downlink is a planning signal, not a fault."""
        with self._down_lock:
            if len(self._down) >= self.downlink_capacity:
                return SendCommandResult.DOWNLINK_FULL
            self._down.append(command)
            return SendCommandResult.QUEUED

    def poll_commands(self, max_n: int) -> list[Command]:
        out: list[Command] = []
        with self._down_lock:
            while self._down and len(out) < max_n:
                out.append(self._down.popleft())
        return out

    def downlink_free(self) -> int:
        with self._down_lock:
            return self.downlink_capacity - len(self._down)

    # -- uplink (tactical -> strategic) ------------------------------------

    def send_report(self, report: Report) -> SendReportResult:
        """Append FIFO, evicting the oldest non-terminal report on overflow.

        Terminal reports are conserved: if the queue is full of terminals,
        a terminal arrival grows the queue past nominal capacity and a
        non-terminal arrival is itself the dropped message.
        """
        with self._up_lock:
            if len(self._up) < self.uplink_capacity:
                self._up.append(report)
                return SendReportResult.QUEUED
            for i, queued in enumerate(self._up):
                if not queued.terminal:
                    del self._up[i]
                    self._up.append(report)
                    self.dropped_uplink_count += 1
                    return SendReportResult.DROPPED_OLDEST
            if report.terminal:
                self._up.append(report)
                return SendReportResult.QUEUED
            self.dropped_uplink_count += 1
            return SendReportResult.DROPPED_OLDEST

    def poll_reports(self, max_n: int) -> list[Report]:
        out: list[Report] = []
        with self._up_lock:
            while self._up and len(out) < max_n:
                out.append(self._up.popleft())
        return out

    def uplink_len(self) -> int:
        with self._up_lock:
            return len(self._up)
