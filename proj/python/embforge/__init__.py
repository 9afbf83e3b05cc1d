# Copyright 2026 The embforge Authors
# SPDX-License-Identifier: Apache-2.0
"""Embedding training-data toolkit."""

from ._embforge import *  # noqa: F401,F403
from ._embforge import Error, ParseError, ProtocolError, StageError, TransportError, ValidationError

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
