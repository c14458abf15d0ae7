"""
Integration tests for the ssparse command-line interface
Exit codes, output formats and batch handling through SSPARSE.main
"""

import json
import logging
import os

import pytest

from SSPARSE import main
from services.mtheory_loader import load_mtheory

from tests.conftest import S1, S2
from tests.test_chart_parser import NP_ATTACHMENT, VP_ATTACHMENT


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ('SSPARSE_DEPTH_LIMIT', 'SSPARSE_MODE', 'SSPARSE_LOG_LEVEL', 'SSPARSE_SYMMETRIC_QUERY'):
        monkeypatch.delenv(name, raising=False)
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_ssparse_handler', False):
            root.removeHandler(handler)
    root.setLevel(logging.WARNING)


@pytest.fixture
def grammar_path(examples_dir):
    return os.path.join(examples_dir, 'pp_attachment.cfg')


@pytest.fixture
def instrument_path(examples_dir):
    return os.path.join(examples_dir, 'instrument_kb.json')


@pytest.fixture
def empty_path(examples_dir):
    return os.path.join(examples_dir, 'empty_kb.json')


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.integration
class TestValidateCommand:
    """Test `ssparse validate`"""

    def test_ok(self, capsys, grammar_path, instrument_path):
        code, out, _ = run(capsys, 'validate', '--grammar', grammar_path, '--mtheory', instrument_path)
        assert code == 0
        assert out.strip() == 'OK'

    def test_grammar_violation(self, capsys, tmp_path, pp_grammar_text):
        path = tmp_path / 'bad.cfg'
        path.write_text(pp_grammar_text.replace("NP -> 'eggs' 0.1", "NP -> 'eggs' 0.100001"))
        code, out, _ = run(capsys, 'validate', '--grammar', str(path))
        assert code == 1
        assert out.splitlines() == ['grammar: rules for NP sum to 1.000001, expected 1']

    def test_mtheory_violation(self, capsys, tmp_path):
        path = tmp_path / 'cyclic.json'
        path.write_text(json.dumps({'name': 'Cyclic', 'mfrags': [{'name': 'Main', 'residents': [
            {'name': 'A', 'parents': ['B'], 'cpt': {'default': [0.5, 0.5]}},
            {'name': 'B', 'parents': ['A'], 'cpt': {'default': [0.5, 0.5]}},
        ]}]}))
        code, out, _ = run(capsys, 'validate', '--mtheory', str(path))
        assert code == 1
        assert out.splitlines() == ['mtheory: Main: cycle (dependency graph is not acyclic)']

    def test_bridge_collision(self, capsys, tmp_path, grammar_path):
        path = tmp_path / 'collide.json'
        path.write_text(json.dumps({'name': 'Collide', 'mfrags': [{'name': 'Main', 'residents': [
            {'name': 'NP', 'cpt': {'default': [0.5, 0.5]}}]}]}))
        code, out, _ = run(capsys, 'validate', '--grammar', grammar_path, '--mtheory', str(path))
        assert code == 1
        assert out.startswith('bridge: ')

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, 'validate', '--grammar', str(tmp_path / 'nope.cfg'))
        assert code == 2
        assert 'no such file' in err

    def test_nothing_to_validate(self, capsys):
        code, _, err = run(capsys, 'validate')
        assert code == 2
        assert err.startswith('error: ')
        assert err.count('error: ') == 1

    def test_malformed_grammar(self, capsys, tmp_path):
        path = tmp_path / 'broken.cfg'
        path.write_text("S -> A B C 1.0\n")
        code, _, err = run(capsys, 'validate', '--grammar', str(path))
        assert code == 2
        assert 'line 1' in err

    def test_write_bridged(self, capsys, tmp_path, grammar_path, empty_path):
        target = tmp_path / 'bridged.json'
        code, _, _ = run(capsys, 'validate', '--grammar', grammar_path, '--mtheory', empty_path,
                         '--write-bridged', str(target))
        assert code == 0
        theory = load_mtheory(target.read_text())
        assert theory.mfrags[0].resident('hasProbability') is not None
        assert theory.entity('vp->vp_pp') is not None


@pytest.mark.integration
class TestParseCommand:
    """Test `ssparse parse`"""

    def test_s1(self, capsys, grammar_path):
        code, out, _ = run(capsys, 'parse', '--grammar', grammar_path, *S1.split())
        assert code == 0
        assert out.splitlines() == [NP_ATTACHMENT, 'probability: 4.53600e-04']

    def test_all(self, capsys, grammar_path):
        code, out, _ = run(capsys, 'parse', '--grammar', grammar_path, '--all', S1)
        assert code == 0
        assert out.splitlines() == [NP_ATTACHMENT, 'probability: 4.53600e-04',
                                    VP_ATTACHMENT, 'probability: 2.72160e-04']

    def test_unknown_token(self, capsys, grammar_path):
        code, out, err = run(capsys, 'parse', '--grammar', grammar_path, 'Alex eats rocks')
        assert code == 1
        assert out == ''
        assert "unknown token 'rocks'" in err

    def test_no_parse(self, capsys, grammar_path):
        code, _, err = run(capsys, 'parse', '--grammar', grammar_path, 'with with')
        assert code == 1
        assert 'no parse' in err

    def test_json_format(self, capsys, grammar_path):
        code, out, _ = run(capsys, 'parse', '--grammar', grammar_path, '--format', 'json', 'Alex eats fish')
        assert code == 0
        data = json.loads(out)
        assert data['tree']['label'] == 'S'
        assert data['probability'] == pytest.approx(2.268e-2)

    def test_tree_format(self, capsys, grammar_path):
        code, out, _ = run(capsys, 'parse', '--grammar', grammar_path, '--format', 'tree', 'Alex eats fish')
        assert code == 0
        assert out.splitlines()[0] == 'S [0,3)'

    def test_missing_sentence(self, capsys, grammar_path):
        code, _, err = run(capsys, 'parse', '--grammar', grammar_path)
        assert code == 2
        assert 'sentence' in err

    def test_batch(self, capsys, tmp_path, grammar_path):
        """Every line is attempted; the exit code is the worst line's"""
        batch = tmp_path / 'sentences.txt'
        batch.write_text(f"# worked examples\n{S1}\nAlex eats rocks\n\n{S2}\n")
        code, out, err = run(capsys, 'parse', '--grammar', grammar_path, '--batch', str(batch))
        assert code == 1
        assert out.splitlines() == [NP_ATTACHMENT, 'probability: 4.53600e-04',
                                    NP_ATTACHMENT.replace('fork', 'eggs'), 'probability: 1.13400e-03']
        assert err.splitlines() == ["error: 'Alex eats rocks': unknown token 'rocks' at position 2"]

    def test_batch_missing_file(self, capsys, tmp_path, grammar_path):
        code, _, _ = run(capsys, 'parse', '--grammar', grammar_path, '--batch', str(tmp_path / 'none.txt'))
        assert code == 2

    def test_log_level(self, capsys, grammar_path):
        """Diagnostics go to stderr, never stdout"""
        code, out, err = run(capsys, '--log-level', 'INFO', 'parse', '--grammar', grammar_path, S1)
        assert code == 0
        assert 'Viterbi parse over 5 tokens' in err
        assert 'Viterbi' not in out


@pytest.mark.integration
class TestSparseCommand:
    """Test `ssparse sparse`"""

    def test_s1_attaches_to_verb(self, capsys, grammar_path, instrument_path):
        code, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path, S1)
        assert code == 0
        assert out.splitlines() == [VP_ATTACHMENT, 'probability: 2.72160e-04']

    def test_s2_attaches_to_noun(self, capsys, grammar_path, instrument_path):
        code, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path, S2)
        assert code == 0
        assert out.splitlines()[0] == NP_ATTACHMENT.replace('fork', 'eggs')

    def test_empty_kb_matches_parse(self, capsys, rng, pp_grammar, grammar_sampler, grammar_path, empty_path):
        """A knowledge base without beliefs prints exactly what `parse` prints"""
        sentences = [S1, S2] + [' '.join(grammar_sampler(rng, pp_grammar, max_length=10)) for _ in range(48)]
        for sentence in sentences:
            _, expected, _ = run(capsys, 'parse', '--grammar', grammar_path, sentence)
            code, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', empty_path, sentence)
            assert code == 0
            assert out == expected

    def test_trace(self, capsys, grammar_path, instrument_path):
        code, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path,
                           '--trace', S1)
        assert code == 0
        trace_line = out.splitlines()[-1]
        assert trace_line.startswith('trace: ')
        trace = json.loads(trace_line[len('trace: '):])
        assert trace[0]['winner'] == 'VP -> VP PP'
        assert trace[0]['p_mebn'] == pytest.approx(0.7)

    def test_json_trace(self, capsys, grammar_path, instrument_path):
        code, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path,
                           '--format', 'json', '--trace', S1)
        assert code == 0
        data = json.loads(out)
        assert data['probability'] == pytest.approx(2.7216e-4)
        assert len(data['trace']) == 1

    def test_normalized_mode(self, capsys, grammar_path, instrument_path):
        code, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path,
                           '--mode', 'normalized', S1)
        assert code == 0
        assert out.splitlines()[0] == NP_ATTACHMENT

    def test_mode_from_environment(self, capsys, monkeypatch, grammar_path, instrument_path):
        monkeypatch.setenv('SSPARSE_MODE', 'normalized')
        _, out, _ = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path, S1)
        assert out.splitlines()[0] == NP_ATTACHMENT

    def test_bad_depth_limit(self, capsys, grammar_path, instrument_path):
        code, _, err = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', instrument_path,
                           '--depth-limit', '0', S1)
        assert code == 2
        assert 'Depth limit' in err

    def test_unknown_mode_flag(self, grammar_path, instrument_path):
        with pytest.raises(SystemExit) as exc_info:
            main(['sparse', '--grammar', grammar_path, '--mtheory', instrument_path, '--mode', 'loud', S1])
        assert exc_info.value.code == 2

    def test_invalid_mtheory(self, capsys, tmp_path, grammar_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"mfrags": [')
        code, _, err = run(capsys, 'sparse', '--grammar', grammar_path, '--mtheory', str(path), S1)
        assert code == 2
        assert 'invalid JSON' in err


@pytest.mark.integration
class TestQueryCommand:
    """Test `ssparse query`"""

    def test_posterior(self, capsys, instrument_path):
        code, out, _ = run(capsys, 'query', '--mtheory', instrument_path,
                           'hasProbability', 'eats_fish_with_fork', 'vp->vp_pp')
        assert code == 0
        assert out.splitlines() == ['T: 7.00000e-01', 'F: 3.00000e-01']

    def test_extra_evidence(self, capsys, instrument_path):
        code, out, _ = run(capsys, 'query', '--mtheory', instrument_path,
                           '--evidence', 'instrumentalPP(eats_fish_with_fork)=F',
                           'hasProbability', 'eats_fish_with_fork', 'vp->vp_pp')
        assert code == 0
        assert out.splitlines()[0] == 'T: 5.00000e-01'

    def test_prior_only(self, capsys, instrument_path):
        """Without findings the default row gives 0.2"""
        code, out, _ = run(capsys, 'query', '--mtheory', instrument_path, '--format', 'json',
                           'instrumentalPP', 'vp->v_np')
        assert code == 0
        assert json.loads(out) == {'variable': 'instrumentalPP(vp->v_np)',
                                   'posterior': {'T': pytest.approx(0.2), 'F': pytest.approx(0.8)}}

    def test_with_grammar(self, capsys, grammar_path, empty_path):
        """Nonterminal inputs added by the bridge have a uniform prior"""
        code, out, _ = run(capsys, 'query', '--mtheory', empty_path, '--grammar', grammar_path,
                           'NP', 'vp->vp_pp')
        assert code == 0
        assert out.splitlines()[0] == 'T: 5.00000e-01'

    def test_unknown_entity(self, capsys, instrument_path):
        code, _, err = run(capsys, 'query', '--mtheory', instrument_path, 'hasProbability', 'zzz', 'vp->vp_pp')
        assert code == 2
        assert "unknown entity 'zzz'" in err

    def test_unknown_variable(self, capsys, instrument_path):
        code, _, _ = run(capsys, 'query', '--mtheory', instrument_path, 'nothing')
        assert code == 2

    def test_bad_evidence(self, capsys, instrument_path):
        code, _, err = run(capsys, 'query', '--mtheory', instrument_path, '--evidence', 'oops',
                           'instrumentalPP', 'eats_fish_with_fork')
        assert code == 2
        assert 'Invalid evidence' in err
