# Copyright 2024 Open Source Robotics Foundation, Inc.
# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

import os
from typing import Any

from colcon_core.command \
    import LOG_LEVEL_ENVIRONMENT_VARIABLE \
    as COLCON_LOG_LEVEL_ENVIRONMENT_VARIABLE
from colcon_core.command import main as colcon_main
from colcon_core.environment_variable import EnvironmentVariable

"""Environment variable to set the log level"""
LOG_LEVEL_ENVIRONMENT_VARIABLE = EnvironmentVariable(
    'FLUX_ISING_LOG_LEVEL',
    COLCON_LOG_LEVEL_ENVIRONMENT_VARIABLE.description)


def main(*args: str, **kwargs: str) -> Any:
    """Execute the main logic of the command."""
    colcon_kwargs = {
        'command_name': 'flux-ising',
        'verb_group_name': 'flux_ising.verb',
        'environment_variable_group_name':
            'flux_ising.environment_variable',
        'default_log_base': os.devnull,
        **kwargs,
    }
    return colcon_main(*args, **colcon_kwargs)
