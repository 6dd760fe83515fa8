# Copyright 2024 Open Source Robotics Foundation, Inc.
# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from collections import namedtuple
from enum import IntEnum
import itertools
import re
import textwrap
from typing import Any
from typing import Dict
from typing import List
from typing import Union


def _text_wrap(orig: str, width: int) -> List[str]:
    match = re.match(r'^(\s*[-*] )', orig)
    subsequent_indent = ' ' * len(match.group(1) if match else '')
    return textwrap.wrap(
        orig, width=width, subsequent_indent=subsequent_indent,
    ) or ['']


def _boxed_text(text: Union[str, List[str]], width: int = 78) -> str:
    result = '+' + ('-' * (width - 2)) + '+'

    if not isinstance(text, list):
        text = [text]

    text_width = width - 4
    for idx, segment in enumerate(text):
        if idx:
            result += '\n+' + ('-' * (width - 2)) + '+'
        for line in segment.splitlines():
            for chunk in _text_wrap(line, text_width):
                result += '\n| ' + chunk.ljust(text_width) + ' |'

    result += '\n+' + ('-' * (width - 2)) + '+'

    return result


class Verdict(IntEnum):
    """Outcome of a single verification check."""

    FAIL = 0
    WARN = 1
    PASS = 2

    def as_symbol(self) -> str:
        """Convert the verdict to a fixed-width marker."""
        return {
            Verdict.FAIL: '[FAIL]',
            Verdict.WARN: '[WARN]',
            Verdict.PASS: '[ OK ]',
        }[self]

    def as_text(self) -> str:
        """Convert the verdict to a short text summary."""
        return {
            Verdict.FAIL: 'Some checks failed',
            Verdict.WARN: 'All checks passed, some need attention',
            Verdict.PASS: 'All checks passed',
        }[self]

    @classmethod
    def from_bound(
        cls, value: float, bound: float, *, warn_factor: float = 1.0,
    ) -> 'Verdict':
        """Judge a value against an upper bound with an optional slack."""
        if value <= bound:
            return cls.PASS
        if value <= bound * warn_factor:
            return cls.WARN
        return cls.FAIL


Check = namedtuple('Check', ('verdict', 'rationale'))


Note = namedtuple('Note', ('point', 'message'))


class Report:
    """Verification checks and notes gathered while producing a dataset."""

    def __init__(self, title: str):
        """
        Initialize a new instance of a Report.

        :param title: What was computed
        """
        self.title = title
        self._sections: Dict[str, List[Check]] = {}
        self._notes: List[Note] = []

    @property
    def sections(self) -> Dict[str, List[Check]]:
        """Get the mapping of section name to checks."""
        return self._sections

    @property
    def notes(self) -> List[Note]:
        """Get the per-point notes."""
        return self._notes

    def add_check(self, section: str, verdict: Verdict, rationale: str):
        """Record the outcome of a check."""
        self._sections.setdefault(section, []).append(
            Check(verdict, rationale))

    def add_note(self, point: Any, message: str):
        """Record a note about a single grid point."""
        self._notes.append(Note(point, message))

    @property
    def verdict(self) -> Verdict:
        """Get the overall verdict."""
        checks = itertools.chain.from_iterable(self.sections.values())
        return min(
            (check.verdict for check in checks), default=Verdict.PASS)

    def summarize(self) -> str:
        """Summarize the checks."""
        if not self._sections:
            return '(No checks were run)'

        message = ''
        for idx, (section, checks) in enumerate(self.sections.items()):
            if idx:
                message += '\n\n'
            message += f'{section}:'
            for check in checks:
                message += '\n* ' + check.verdict.as_symbol()
                message += ' ' + textwrap.indent(check.rationale, '  ')[2:]

        return message

    def to_text(self, *, width: int = 80) -> str:
        """
        Generate a text representation of this report.

        :param width: Maximum number of columns in the output.
        :returns: A string containing the text representation of the report.
        """
        verdict = self.verdict
        result = textwrap.indent(
            f'{verdict.as_symbol()} {self.title}: {verdict.as_text()}\n' +
            _boxed_text(self.summarize(), width=width - 2),
            ' ')

        if self.notes:
            result += '\n' + textwrap.indent(
                '\n' + _boxed_text(
                    [f'{note.point}: {note.message}' for note in self.notes],
                    width=width - 5),
                '  ¦ ', predicate=lambda _: True)

        return result

    def to_dict(self) -> Dict[str, Any]:
        """Get a JSON-ready form of this report."""
        return {
            'title': self.title,
            'verdict': self.verdict.name,
            'sections': {
                section: [
                    {'verdict': c.verdict.name, 'rationale': c.rationale}
                    for c in checks]
                for section, checks in self.sections.items()},
            'notes': [
                {'point': note.point, 'message': note.message}
                for note in self.notes],
        }
