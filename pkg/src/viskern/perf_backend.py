"""Hardware counter backend over the Linux perf_event_open syscall.

Opens per-process counting events (instructions, cycles, last-level-cache
references and misses) with inherit set, so threads spawned inside a marker
region are folded into the parent's count once they exit.  Counters the
kernel refuses to open are simply reported as unavailable; opening never
fails the run.
"""

from __future__ import annotations

import ctypes
import os
import platform
import struct

PERF_TYPE_HARDWARE = 0
PERF_COUNT_HW_CPU_CYCLES = 0
PERF_COUNT_HW_INSTRUCTIONS = 1
PERF_COUNT_HW_CACHE_REFERENCES = 2
PERF_COUNT_HW_CACHE_MISSES = 3

PERF_EVENT_IOC_ENABLE = 0x2400
PERF_EVENT_IOC_DISABLE = 0x2401
PERF_EVENT_IOC_RESET = 0x2403

_FLAG_DISABLED = 1 << 0
_FLAG_INHERIT = 1 << 1
_FLAG_EXCLUDE_KERNEL = 1 << 5
_FLAG_EXCLUDE_HV = 1 << 6

_SYSCALL_NR = {
    "x86_64": 298,
    "aarch64": 241,
    "riscv64": 241,
}

# counter name -> perf hardware config id; names match CounterSample fields
COUNTER_CONFIGS = {
    "instructions": PERF_COUNT_HW_INSTRUCTIONS,
    "cycles": PERF_COUNT_HW_CPU_CYCLES,
    "l3_requests": PERF_COUNT_HW_CACHE_REFERENCES,
    "l3_misses": PERF_COUNT_HW_CACHE_MISSES,
}


class _PerfEventAttr(ctypes.Structure):
    # leading fields of struct perf_event_attr; the rest stays zeroed
    _fields_ = [
        ("type", ctypes.c_uint),
        ("size", ctypes.c_uint),
        ("config", ctypes.c_ulonglong),
        ("sample_period", ctypes.c_ulonglong),
        ("sample_type", ctypes.c_ulonglong),
        ("read_format", ctypes.c_ulonglong),
        ("flags", ctypes.c_ulonglong),
        ("wakeup_events", ctypes.c_uint),
        ("bp_type", ctypes.c_uint),
        ("config1", ctypes.c_ulonglong),
        ("config2", ctypes.c_ulonglong),
    ]


class PerfEventBackend:
    """A set of open perf counters for the calling process."""

    def __init__(self, fds: dict[str, int]):
        self._fds = fds

    @property
    def counter_names(self) -> list[str]:
        return sorted(self._fds)

    def start(self) -> None:
        for fd in self._fds.values():
            _ioctl(fd, PERF_EVENT_IOC_RESET)
        for fd in self._fds.values():
            _ioctl(fd, PERF_EVENT_IOC_ENABLE)

    def stop_and_read(self) -> dict[str, int]:
        for fd in self._fds.values():
            _ioctl(fd, PERF_EVENT_IOC_DISABLE)
        return {
            name: struct.unpack("Q", os.read(fd, 8))[0]
            for name, fd in self._fds.items()
        }

    def close(self) -> None:
        for fd in self._fds.values():
            try:
                os.close(fd)
            except OSError:
                pass
        self._fds = {}


_libc = None


def _get_libc():
    global _libc
    if _libc is None:
        _libc = ctypes.CDLL(None, use_errno=True)
    return _libc


def _ioctl(fd: int, req: int) -> None:
    if _get_libc().ioctl(fd, req, 0) != 0:
        err = ctypes.get_errno()
        raise OSError(err, os.strerror(err))


def _open_one(nr: int, config: int) -> int | None:
    attr = _PerfEventAttr()
    attr.type = PERF_TYPE_HARDWARE
    attr.size = ctypes.sizeof(_PerfEventAttr)
    attr.config = config
    attr.flags = _FLAG_DISABLED | _FLAG_INHERIT | _FLAG_EXCLUDE_KERNEL | _FLAG_EXCLUDE_HV
    fd = _get_libc().syscall(
        ctypes.c_long(nr),
        ctypes.byref(attr),
        ctypes.c_int(0),    # this process
        ctypes.c_int(-1),   # any cpu
        ctypes.c_int(-1),   # no group
        ctypes.c_ulong(0),
    )
    return fd if fd >= 0 else None


def hardware_backend_open() -> PerfEventBackend | None:
    """Open whatever hardware counters the platform exposes.

    Returns None when no counter can be opened (non-Linux, sandboxed kernel,
    missing PMU); callers fall back to software counters.
    """
    nr = _SYSCALL_NR.get(platform.machine())
    if nr is None or not hasattr(os, "read"):
        return None
    fds = {}
    try:
        for name, config in COUNTER_CONFIGS.items():
            fd = _open_one(nr, config)
            if fd is not None:
                fds[name] = fd
    except Exception:
        for fd in fds.values():
            try:
                os.close(fd)
            except OSError:
                pass
        return None
    if not fds:
        return None
    return PerfEventBackend(fds)
