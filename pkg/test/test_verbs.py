# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

import argparse
import csv
import json

from colcon_core.command import CommandContext
from flux_ising.circuit import FluxQubitSpec
from flux_ising.config import ConfigError
from flux_ising.coupling import chain_graph
from flux_ising.coupling import geometric_model
from flux_ising.output import write_json
from flux_ising.verb.cluster import ClusterVerb
from flux_ising.verb.coupling import CouplingVerb
from flux_ising.verb.errors import ErrorsVerb
from flux_ising.verb.spectrum import SpectrumVerb
import pytest


def _run(verb, out, *argv):
    parser = argparse.ArgumentParser()
    verb.add_arguments(parser=parser)
    args = parser.parse_args(
        ['--out', str(out), '--threads', '1', '--cutoff', '3', *argv])
    context = CommandContext(command_name='flux-ising', args=args)
    return verb.main(context=context)


def _manifest(out):
    return json.loads((out / 'manifest.json').read_text())


def _table(path):
    with path.open() as f:
        return list(csv.DictReader(f))


def test_spectrum_verb(tmp_path):
    assert 0 == _run(SpectrumVerb(), tmp_path, '--grid', '0.2', '0.3')

    rows = _table(tmp_path / 'spectrum_alpha.csv')
    assert [row['alpha'] for row in rows] == ['0.2', '0.3']
    assert all(float(row['E01_GHz']) > 0 for row in rows)

    manifest = _manifest(tmp_path)
    assert manifest['command'] == 'spectrum'
    assert manifest['grid']['values'] == [0.2, 0.3]
    assert all(status['ok'] for status in manifest['status'])
    assert str(tmp_path / 'manifest.json') in manifest['outputs']
    assert manifest['config_hash']


def test_spectrum_verb_partial_failure(tmp_path):
    assert 2 == _run(SpectrumVerb(), tmp_path, '--grid', '0.2', '1.5')

    rows = _table(tmp_path / 'spectrum_alpha.csv')
    assert rows[0]['error'] == ''
    assert rows[1]['error']
    manifest = _manifest(tmp_path)
    assert [s['ok'] for s in manifest['status']] == [True, False]


def test_spectrum_verb_series(tmp_path):
    assert 0 == _run(
        SpectrumVerb(), tmp_path, '--axis', 'flux', '--grid', '0.49', '0.5',
        '--voltages', '0', '500')

    for value in ('0', '500'):
        name = f'spectrum_flux_voltage{value}.csv'
        rows = _table(tmp_path / name)
        assert [row['f'] for row in rows] == ['0.49', '0.5']
    assert len(_manifest(tmp_path)['status']) == 4


def test_spectrum_verb_empty_grid(tmp_path):
    with pytest.raises(ConfigError):
        _run(SpectrumVerb(), tmp_path, '--grid')


def test_coupling_verb_pair(tmp_path):
    assert 0 == _run(CouplingVerb(), tmp_path, '--grid', '0', '1000')

    rows = _table(tmp_path / 'coupling_pair.csv')
    assert [row['Ve_uV'] for row in rows] == ['0', '1000']
    assert abs(float(rows[0]['g_GHz'])) < 1e-9
    assert abs(float(rows[1]['g_GHz'])) > 0

    manifest = _manifest(tmp_path)
    assert 'Switchability' in manifest['report']['sections']
    assert manifest['grid']['oracle_window_Ve_uV'] == [1000]
    assert 'residual_zz_GHz' in manifest['grid']
    assert any(
        'residual ZZ' in note['message']
        for note in manifest['report']['notes'])


def _chain_config(tmp_path, size=3):
    path = tmp_path / 'device.yaml'
    path.write_text(
        'topology:\n'
        '  kind: chain\n'
        f'  size: {size}\n'
        '  coupling_capacitance: 0.077\n')
    return path


def test_coupling_verb_model(tmp_path):
    out = tmp_path / 'out'
    assert 0 == _run(
        CouplingVerb(), out, '--mode', 'model', '--config',
        str(_chain_config(tmp_path)), '--ve', '1000', '--powered', '0',
        '--powered', '1')

    document = json.loads((out / 'effective_model.json').read_text())
    assert len(document['sites']) == 3
    assert (0, 1) in [(p['i'], p['j']) for p in document['pairs']]
    manifest = _manifest(out)
    assert manifest['grid']['Ve_uV'] == [1000, 1000, 0]
    assert 'Switchability' in manifest['report']['sections']


def test_coupling_verb_model_arguments(tmp_path):
    with pytest.raises(ConfigError):
        _run(CouplingVerb(), tmp_path / 'single', '--mode', 'model')
    with pytest.raises(ConfigError):
        _run(
            CouplingVerb(), tmp_path / 'missing', '--mode', 'model',
            '--config', str(_chain_config(tmp_path)), '--powered', '5')


def test_coupling_verb_chain_too_short(tmp_path):
    with pytest.raises(ConfigError):
        _run(CouplingVerb(), tmp_path, '--mode', 'chain', '--n', '2')


def test_errors_verb_local(tmp_path):
    assert 0 == _run(
        ErrorsVerb(), tmp_path, '--local', '--grid', '500', '1000', '1500')

    rows = _table(tmp_path / 'errors_local.csv')
    assert len(rows) == 3
    for row in rows:
        assert float(row['eps_loc']) == pytest.approx(
            float(row['eps_d']) + float(row['eps_tim']))
    manifest = _manifest(tmp_path)
    assert manifest['grid']['mode'] == 'local'
    assert manifest['grid']['argmin_Ve_uV'] in (500, 1000, 1500)
    assert all(row['in_regime'] in ('0', '1') for row in rows)


def test_errors_verb_local_without_coupling(tmp_path):
    assert 2 == _run(
        ErrorsVerb(), tmp_path, '--local', '--grid', '0', '500', '1000')

    rows = _table(tmp_path / 'errors_local.csv')
    assert 'switched off' in rows[0]['error']
    assert rows[0]['in_regime'] == '0'
    assert rows[1]['error'] == ''
    manifest = _manifest(tmp_path)
    assert [s['ok'] for s in manifest['status']] == [False, True, True]
    assert manifest['grid']['argmin_Ve_uV'] in (500, 1000)


def test_errors_verb_local_explains_missed_threshold(tmp_path):
    config = tmp_path / 'device.yaml'
    config.write_text('thresholds:\n  local: 1.0e-9\n')
    out = tmp_path / 'out'
    assert 0 == _run(
        ErrorsVerb(), out, '--local', '--config', str(config), '--grid',
        '500', '1000')

    manifest = _manifest(out)
    assert manifest['grid']['budget'] == {
        'dt_ns': None, 'dt_Ve_uV': None, 'dv_uV': None, 'dv_Ve_uV': None}
    assert any(
        'at the minimum' in note['message']
        for note in manifest['report']['notes'])


def test_errors_verb_correlated(tmp_path):
    assert 0 == _run(
        ErrorsVerb(), tmp_path, '--correlated', '--grid', '0.05', '0.077',
        '--n', '6', '--p', '2', '--p', '3')

    rows = _table(tmp_path / 'errors_correlated.csv')
    assert list(rows[0]) == [
        'Cc_fF', 'R', 'eps_non_p2', 'eps_non_p3', 'error']
    for row in rows:
        assert float(row['eps_non_p3']) <= float(row['eps_non_p2'])
    assert _manifest(tmp_path)['grid']['p'] == [2, 3]


def test_cluster_verb_echo_demo(tmp_path):
    assert 0 == _run(
        ClusterVerb(), tmp_path, '--echo-demo', '--g', '0.1', '--ratio',
        '0.1')

    document = json.loads((tmp_path / 'cluster_report.json').read_text())
    assert document['target']['vertices'] == 3
    simulation = document['simulation']
    assert simulation['corrected_fidelity'] == pytest.approx(1, abs=1e-9)
    assert simulation['phase_map_overlap'] == pytest.approx(1, abs=1e-9)
    assert (tmp_path / 'schedule.json').is_file()


def test_cluster_verb_1d(tmp_path):
    report = tmp_path / 'reports' / 'chain.json'
    assert 0 == _run(
        ClusterVerb(), tmp_path, '--n', '7', '--simulate', '--g', '0.1',
        '--ratio', '0.2', '--report', str(report))

    document = json.loads(report.read_text())
    assert document['gate_counts'] == [2, 2, 2]
    assert document['simulation']['corrected_fidelity'] == pytest.approx(
        1, abs=1e-9)
    assert document['report']['verdict'] == 'PASS'
    assert set(document['report']['sections']) == {
        'Schedule', 'Phases', 'Simulation'}


def test_cluster_verb_model(tmp_path):
    graph = chain_graph(7, 0.077, FluxQubitSpec())
    path = write_json(
        tmp_path / 'model.json', geometric_model(graph, 0.1, 0.2).to_dict())
    out = tmp_path / 'out'
    assert 0 == _run(
        ClusterVerb(), out, '--n', '7', '--simulate', '--model', str(path))

    document = json.loads((out / 'cluster_report.json').read_text())
    assert document['simulation']['corrected_fidelity'] == pytest.approx(
        1, abs=1e-9)
    manifest = _manifest(out)
    assert manifest['grid']['model'] == str(path)
    assert manifest['grid']['g_GHz'] == pytest.approx(0.1)
    assert manifest['grid']['R'] == pytest.approx(0.2)


def test_cluster_verb_model_mismatch(tmp_path):
    graph = chain_graph(7, 0.077, FluxQubitSpec())
    path = write_json(
        tmp_path / 'model.json', geometric_model(graph, 0.1, 0.2).to_dict())
    with pytest.raises(ConfigError):
        _run(ClusterVerb(), tmp_path, '--n', '9', '--model', str(path))

    broken = tmp_path / 'broken.json'
    broken.write_text('{"pairs": []}')
    with pytest.raises(ConfigError):
        _run(ClusterVerb(), tmp_path, '--n', '7', '--model', str(broken))


def test_cluster_verb_grid_too_small(tmp_path):
    with pytest.raises(ConfigError):
        _run(ClusterVerb(), tmp_path, '--dim', '2d', '--n', '3')
