"""Root component ABC
"""
from __future__ import annotations

import os
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from drhpe.controller import RunController


class Component(ABC):
    """Base component class for drhpe session steps.

    Example:
    ::
        class MyComponent(Component):

        def __init__(self, controller):
            super().__init__(controller)
            self._result = None

        def validate_inputs(self):
            if self.config.certify is None:
                raise ConfigError("missing [certify] section")

        def run(self):
            self._result = self._step()
    """

    def __init__(self, controller: RunController):
        self._controller = controller

    @property
    def controller(self):
        """Parent controller"""
        return self._controller

    def get_abs_path(self, rel_path: str) -> str:
        """Get the absolute path from the run directory given a relative path."""
        if os.path.isabs(rel_path):
            return rel_path
        return os.path.join(self.controller.run_dir, rel_path)

    def get_output_path(self, rel_path: str) -> str:
        """Absolute output path under config.run.output_dir; creates the parent directory."""
        if not os.path.isabs(rel_path):
            rel_path = os.path.join(self.config.run.output_dir, rel_path)
        path = self.get_abs_path(rel_path)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return path

    @property
    def config(self):
        """Configuration settings loaded from config files"""
        return self.controller.config

    @property
    def logger(self):
        """Session logger"""
        return self.controller.logger

    def validate_inputs(self):
        """Validate inputs are correct at session start, fail fast if not"""

    @abstractmethod
    def run(self):
        """Run component"""
