# Copyright 2024 Open Source Robotics Foundation, Inc.
# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from typing import Any
from typing import Mapping
from typing import Optional

import yaml


class AnnotatedSafeLoader(yaml.SafeLoader):
    """
    YAML loader that records where containers and strings were parsed from.

    Mappings, sequences and strings are replaced with derived types carrying
    a '__lines__' range of 1-based source lines, so configuration errors can
    point back at the document. Numbers keep their plain types; their
    position is recovered through the key they are stored under.
    """

    class AnnotatedDict(dict):
        """Implementation of 'dict' with '__lines__' attribute."""

        __slots__ = ('__lines__',)

    class AnnotatedList(list):
        """Implementation of 'list' with '__lines__' attribute."""

        __slots__ = ('__lines__',)

    class AnnotatedStr(str):
        """Implementation of 'str' with '__lines__' attribute."""

        __slots__ = ('__lines__',)

    def compose_node(self, parent, index):  # noqa: D102
        event = self.peek_event()
        start_line = event.start_mark.line + 1
        end_line = max(event.end_mark.line + 1, start_line + 1)
        node = super().compose_node(parent, index)
        node.__lines__ = range(start_line, end_line)
        return node

    def _extend(self, data, values) -> None:
        for value in values:
            lines = getattr(value, '__lines__', None)
            if lines is not None and lines.stop > data.__lines__.stop:
                data.__lines__ = range(data.__lines__.start, lines.stop)

    def construct_annotated_map(self, node):  # noqa: D102
        data = AnnotatedSafeLoader.AnnotatedDict()
        data.__lines__ = node.__lines__
        yield data
        value = self.construct_mapping(node, deep=True)
        self._extend(data, value.keys())
        self._extend(data, value.values())
        data.update(value)

    def construct_annotated_seq(self, node):  # noqa: D102
        data = AnnotatedSafeLoader.AnnotatedList()
        data.__lines__ = node.__lines__
        yield data
        value = self.construct_sequence(node, deep=True)
        self._extend(data, value)
        data.extend(value)

    def construct_annotated_str(self, node):  # noqa: D102
        data = AnnotatedSafeLoader.AnnotatedStr(self.construct_yaml_str(node))
        data.__lines__ = node.__lines__
        return data


AnnotatedSafeLoader.add_constructor(
    'tag:yaml.org,2002:map', AnnotatedSafeLoader.construct_annotated_map)
AnnotatedSafeLoader.add_constructor(
    'tag:yaml.org,2002:seq', AnnotatedSafeLoader.construct_annotated_seq)
AnnotatedSafeLoader.add_constructor(
    'tag:yaml.org,2002:str', AnnotatedSafeLoader.construct_annotated_str)


def load_annotated(text: str) -> Any:
    """Parse a YAML (or JSON) document with line annotations."""
    return yaml.load(text, Loader=AnnotatedSafeLoader)


def lines_of(value: Any) -> Optional[range]:
    """Get the source lines of a parsed value, if they are known."""
    return getattr(value, '__lines__', None)


def key_lines(mapping: Mapping, key: str) -> Optional[range]:
    """Get the source lines of a key in a parsed mapping."""
    for candidate in mapping:
        if candidate == key:
            return lines_of(candidate)
    return lines_of(mapping)
