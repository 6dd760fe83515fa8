# Copyright 2024 Open Source Robotics Foundation, Inc.
# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from setuptools import setup

setup()
