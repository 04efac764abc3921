"""
Experiment config validation guardrail.

This module loads YAML experiment configs into ExperimentConfig and turns
schema violations into ConfigError messages that carry the line number of
the offending key, with a fuzzy "did you mean" hint for misspelled
methods, anchor flags and section keys.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import yaml
from fuzzywuzzy import fuzz, process
from pydantic import BaseModel, ValidationError

from centrolab.config import ANCHOR_FLAGS, BINDING_METHODS
from centrolab.errors import ConfigError
from centrolab.models.schemas import ExperimentConfig

logger = logging.getLogger(__name__)

KeyPath = Tuple[Union[str, int], ...]


class ConfigValidator:
    """
    Validates experiment configs against the pydantic schema.

    Uses fuzzy matching to point at the closest known name.
    """

    def __init__(self, similarity_threshold: int = 60):
        """
        Initialize the config validator.

        Args:
            similarity_threshold: Minimum similarity score (0-100) to offer a suggestion
        """
        self.methods = list(BINDING_METHODS)
        self.anchor_flags = list(ANCHOR_FLAGS)
        self.similarity_threshold = similarity_threshold

    def suggest(self, name: str, choices: Iterable[str]) -> Optional[str]:
        """
        Closest known name, or None when nothing is similar enough.

        Examples:
            >>> ConfigValidator().suggest("centrobnid", BINDING_METHODS)
            'centrobind'
        """
        choices = list(choices)
        if not name or not choices:
            return None
        match = process.extractOne(str(name).strip().lower(), choices, scorer=fuzz.ratio)
        if match and match[1] >= self.similarity_threshold:
            return match[0]
        return None

    def check_method(self, method: str) -> Tuple[bool, Optional[str]]:
        """
        Validate one method name.

        Returns:
            Tuple of (is_valid, suggestion)
        """
        base, _, index = str(method).strip().lower().partition(":")
        if base in self.methods:
            if base != "fabind" or (index.isdigit() and int(index) >= 1):
                return True, None
            return False, "fabind:1"
        suggestion = self.suggest(base, self.methods)
        if suggestion == "fabind" and index:
            suggestion = f"fabind:{index}"
        return False, suggestion

    def check_anchor_flag(self, flag: str) -> Tuple[bool, Optional[str]]:
        """Validate a bind.anchor flag (wavg may carry ':w1,w2,..')."""
        base = str(flag).strip().lower().split(":", 1)[0]
        if base in self.anchor_flags:
            return True, None
        return False, self.suggest(base, self.anchor_flags)

    @staticmethod
    def line_index(text: str) -> Dict[KeyPath, int]:
        """
        Map every key path of a YAML document to its 1-based line.

        Sequence items are addressed by their integer position.
        """
        try:
            root = yaml.compose(text)
        except yaml.YAMLError:
            return {}
        lines: Dict[KeyPath, int] = {}

        def walk(node, path: KeyPath):
            if isinstance(node, yaml.MappingNode):
                for key, value in node.value:
                    child = path + (key.value,)
                    lines[child] = key.start_mark.line + 1
                    walk(value, child)
            elif isinstance(node, yaml.SequenceNode):
                for i, item in enumerate(node.value):
                    child = path + (i,)
                    lines[child] = item.start_mark.line + 1
                    walk(item, child)

        if root is not None:
            walk(root, ())
        return lines

    @staticmethod
    def _where(source: str, line: Optional[int]) -> str:
        return f"{source}:{line}" if line else source

    @staticmethod
    def _line_for(lines: Dict[KeyPath, int], path: KeyPath) -> Optional[int]:
        for end in range(len(path), 0, -1):
            if path[:end] in lines:
                return lines[path[:end]]
        return None

    def _vocabulary_errors(self, data: Dict[str, Any], lines: Dict[KeyPath, int], source: str) -> list:
        problems = []
        for i, method in enumerate(data.get("methods") or []):
            is_valid, suggestion = self.check_method(method)
            if not is_valid:
                hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
                line = self._line_for(lines, ("methods", i))
                problems.append(f"{self._where(source, line)}: unknown method '{method}'{hint}")

        anchor = (data.get("bind") or {}).get("anchor")
        if anchor is not None:
            is_valid, suggestion = self.check_anchor_flag(anchor)
            if not is_valid:
                hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
                line = self._line_for(lines, ("bind", "anchor"))
                problems.append(f"{self._where(source, line)}: unknown anchor flag '{anchor}'{hint}")
        return problems

    def _field_names(self, path: KeyPath) -> Iterable[str]:
        model = ExperimentConfig
        for part in path:
            field = model.model_fields.get(part) if isinstance(part, str) else None
            annotation = getattr(field, "annotation", None)
            if isinstance(annotation, type) and issubclass(annotation, BaseModel):
                model = annotation
            else:
                break
        return model.model_fields.keys()

    def validate_data(self, data: Any, text: str = "", source: str = "<config>") -> ExperimentConfig:
        """
        Validate a parsed YAML document.

        Args:
            data: Parsed document
            text: Original YAML text, used for line numbers
            source: Name shown in messages

        Returns:
            ExperimentConfig

        Raises:
            ConfigError: Listing every violation with its line
        """
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: expected a mapping at the top level, got {type(data).__name__}")

        lines = self.line_index(text)
        problems = self._vocabulary_errors(data, lines, source)
        if problems:
            raise ConfigError("\n".join(problems))

        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as e:
            for err in e.errors():
                loc = tuple(err["loc"])
                line = self._line_for(lines, loc)
                where = ".".join(str(p) for p in loc) or "<root>"
                message = f"{self._where(source, line)}: {where}: {err['msg']}"
                if err["type"] == "extra_forbidden" and loc:
                    suggestion = self.suggest(str(loc[-1]), self._field_names(loc[:-1]))
                    if suggestion:
                        message += f" (did you mean '{suggestion}'?)"
                problems.append(message)
            raise ConfigError("\n".join(problems)) from e

    def load(self, path: Union[str, Path]) -> ExperimentConfig:
        """Read and validate a YAML experiment config file."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from e
        config = self.validate_data(data, text, str(path))
        logger.info(f"Loaded config '{config.name}' from {path}")
        return config


# Global instance for easy import
config_validator = ConfigValidator()
