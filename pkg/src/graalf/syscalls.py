"""x86-64 syscall number to name table.

Linux audit SYSCALL records carry the raw number; this maps the subset
relevant to provenance (I/O, descriptor management, process lifecycle)
plus common no-op neighbours so unknown-number noise stays identifiable.
"""

SYSCALL_NAMES = {
    0: "read",
    1: "write",
    2: "open",
    3: "close",
    4: "stat",
    5: "fstat",
    6: "lstat",
    8: "lseek",
    9: "mmap",
    16: "ioctl",
    17: "pread64",
    18: "pwrite64",
    19: "readv",
    20: "writev",
    21: "access",
    22: "pipe",
    32: "dup",
    33: "dup2",
    40: "sendfile",
    41: "socket",
    42: "connect",
    43: "accept",
    44: "sendto",
    45: "recvfrom",
    46: "sendmsg",
    47: "recvmsg",
    49: "bind",
    50: "listen",
    56: "clone",
    57: "fork",
    58: "vfork",
    59: "execve",
    60: "exit",
    62: "kill",
    76: "truncate",
    77: "ftruncate",
    82: "rename",
    83: "mkdir",
    84: "rmdir",
    85: "creat",
    86: "link",
    87: "unlink",
    88: "symlink",
    90: "chmod",
    91: "fchmod",
    92: "chown",
    93: "fchown",
    231: "exit_group",
    257: "openat",
    258: "mkdirat",
    263: "unlinkat",
    264: "renameat",
    266: "symlinkat",
    268: "fchmodat",
    288: "accept4",
    292: "dup3",
    293: "pipe2",
    316: "renameat2",
}

SYSCALL_NUMBERS = {name: num for num, name in SYSCALL_NAMES.items()}


def syscall_name(number: int) -> str:
    """Name for a syscall number; unknown numbers become "sys_<n>"."""
    return SYSCALL_NAMES.get(number, f"sys_{number}")
