from brinkhom.cli.commands import (
    COMMANDS,
    cmd_bogovskii,
    cmd_cell,
    cmd_converge,
    cmd_correctors,
    cmd_resistance,
    cmd_solve,
    execute,
)
from brinkhom.cli.config_file import load_run_config, merge, read_toml

__all__ = [
    "COMMANDS",
    "cmd_cell",
    "cmd_correctors",
    "cmd_resistance",
    "cmd_solve",
    "cmd_converge",
    "cmd_bogovskii",
    "execute",
    "load_run_config",
    "merge",
    "read_toml",
]
