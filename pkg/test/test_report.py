# Copyright 2024 Open Source Robotics Foundation, Inc.
# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from flux_ising.report import Report
from flux_ising.report import Verdict


def test_to_text():
    report = Report('Spectrum along alpha')
    text = report.to_text()
    assert Verdict.PASS.as_text() in text
    assert '(No checks were run)' in text

    report.add_check(
        'Anharmonicity', Verdict.PASS, 'E01/E12 = 3.1 at alpha=0.2')
    report.add_note({'alpha': 1.5}, 'alpha must be in (0, 1]')

    text = report.to_text()
    assert 'Anharmonicity' in text
    assert '[ OK ]' in text
    assert 'E01/E12 = 3.1' in text
    assert "{'alpha': 1.5}: alpha must be in (0, 1]" in text

    report.add_check(
        'Two-level description', Verdict.FAIL,
        'This is a pretty long string, which should force the line '
        'wrapping in the text formatting code to wrap it to the bounding '
        'box width.')
    text = report.to_text(width=60)
    assert Verdict.FAIL.as_text() in text
    assert '[FAIL]' in text
    assert 'wrapping' in text
    assert all(len(line) <= 60 for line in text.splitlines())


def test_verdict():
    report = Report('Couplings')
    assert report.verdict == Verdict.PASS

    report.add_check('a', Verdict.PASS, 'fine')
    report.add_check('b', Verdict.WARN, 'close')
    assert report.verdict == Verdict.WARN
    report.add_check('b', Verdict.FAIL, 'broken')
    assert report.verdict == Verdict.FAIL
    assert len(report.sections['b']) == 2


def test_from_bound():
    assert Verdict.from_bound(0.5, 1.0) == Verdict.PASS
    assert Verdict.from_bound(1.0, 1.0) == Verdict.PASS
    assert Verdict.from_bound(1.5, 1.0) == Verdict.FAIL
    assert Verdict.from_bound(1.5, 1.0, warn_factor=2) == Verdict.WARN
    assert Verdict.from_bound(2.5, 1.0, warn_factor=2) == Verdict.FAIL


def test_to_dict():
    report = Report('Local error budget')
    report.add_check('Local error', Verdict.WARN, 'Minimum 0.2%')
    report.add_note({'Ve_uV': 0.0}, 'failed')
    assert report.to_dict() == {
        'title': 'Local error budget',
        'verdict': 'WARN',
        'sections': {
            'Local error': [{'verdict': 'WARN', 'rationale': 'Minimum 0.2%'}],
        },
        'notes': [{'point': {'Ve_uV': 0.0}, 'message': 'failed'}],
    }
