from pathlib import Path

import pytest

import nodule_cascade as nc

RunConfig = nc.cli.RunConfig


@pytest.mark.UNIT_TEST
def test_parse_config_file(tmp_path: Path) -> None:
    path = tmp_path / 'run.cfg'
    path.write_text('# comment\n\nseed = 7\nsplit-fractions = 0.5 0.25 0.25\n  threshold=0.4  \n')
    assert nc.cli.parse_config_file(path) == {'seed': '7', 'split_fractions': '0.5 0.25 0.25', 'threshold': '0.4'}


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('line', ['seed 7', '= 7'])
def test_parse_config_file_rejects_bad_lines(tmp_path: Path, line: str) -> None:
    path = tmp_path / 'run.cfg'
    path.write_text(f'epochs = 2\n{line}\n')
    with pytest.raises(nc.interfaces.ConfigError, match='run.cfg:2'):
        nc.cli.parse_config_file(path)


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('value, expected', [
    (nc.cascade.Aggregation.MAJORITY, 'majority'),
    (True, 'true'),
    (False, 'false'),
    (0.1, '0.1'),
    (3, '3'),
    ((64, 64, 32), '64,64,32'),
    ([1., 2.5], '1.0,2.5'),
    (Path('a/b'), str(Path('a/b'))),
])
def test_format_value(value: object, expected: str) -> None:
    assert nc.cli.format_value(value) == expected


@pytest.mark.UNIT_TEST
def test_flags_win_over_config_file(tmp_path: Path) -> None:
    path = tmp_path / 'run.cfg'
    path.write_text('seed = 7\nepochs = 4\n')
    cfg = RunConfig.from_sources(path, {'epochs': 9, 'threshold': None})
    assert cfg.seed == 7
    assert cfg.get_int('epochs') == 9
    assert not cfg.has('threshold')


@pytest.mark.UNIT_TEST
def test_typed_getters() -> None:
    cfg = RunConfig({'dims': [32, 32, 16], 'binarize': 'yes', 'aggregation': 'MAJORITY', 'lr': '1e-3'})
    assert cfg.get_tuple('dims', 3, int) == (32, 32, 16)
    assert cfg.get_bool('binarize') is True
    assert cfg.get_bool('strict') is False
    assert cfg.get_enum('aggregation', nc.cascade.Aggregation, nc.cascade.Aggregation.MEAN) == \
           nc.cascade.Aggregation.MAJORITY
    assert cfg.get_float('lr') == 1e-3
    assert cfg.get_str('missing') is None
    assert cfg.get_int('pad', 5) == 5


@pytest.mark.UNIT_TEST
def test_missing_required_setting() -> None:
    with pytest.raises(nc.interfaces.ConfigError, match='missing required setting out'):
        RunConfig().get_path('out', required=True)


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('key, getter', [
    ('epochs', lambda cfg: cfg.get_int('epochs')),
    ('binarize', lambda cfg: cfg.get_bool('binarize')),
    ('aggregation', lambda cfg: cfg.get_enum('aggregation', nc.cascade.Aggregation, nc.cascade.Aggregation.MEAN)),
    ('dims', lambda cfg: cfg.get_tuple('dims', 3, int)),
])
def test_invalid_value(key: str, getter: object) -> None:
    cfg = RunConfig({key: 'maybe'})
    with pytest.raises(nc.interfaces.ConfigError, match='invalid value'):
        getter(cfg)  # type: ignore


@pytest.mark.UNIT_TEST
def test_builders_use_defaults() -> None:
    cfg = RunConfig({'seed': 4})
    assert cfg.phantom_spec() == nc.phantom.PhantomSpec(seed=4)
    assert cfg.train_config() == nc.training.TrainConfig(seed=4)
    assert cfg.screen_opts() == nc.cascade.ScreenOpts()
    assert cfg.threshold() == nc.cascade.DEFAULT_THRESHOLD
    split = cfg.split_config(nc.training.CLASSIFIER_SPLIT, nc.training.SplitUnit.CASE)
    assert split.fractions == nc.training.CLASSIFIER_SPLIT
    assert split.seed == 4


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('values, build', [
    ({'cases_per_class': 0}, lambda cfg: cfg.phantom_spec()),
    ({'spiculation': 1.5}, lambda cfg: cfg.phantom_spec()),
    ({'epochs': -1}, lambda cfg: cfg.train_config()),
    ({'batch_size': 0}, lambda cfg: cfg.screen_opts()),
    ({'window_lo': 10, 'window_hi': 0}, lambda cfg: cfg.window()),
    ({'threshold': 1.5}, lambda cfg: cfg.threshold()),
    ({'threshold': -0.1}, lambda cfg: cfg.threshold()),
])
def test_builders_raise_config_error(values: dict, build: object) -> None:
    with pytest.raises(nc.interfaces.ConfigError):
        build(RunConfig(values))  # type: ignore


@pytest.mark.UNIT_TEST
def test_echo_reproduces_the_run(tmp_path: Path) -> None:
    cfg = RunConfig({'seed': 3, 'threshold': '0.5', 'unused': 'x'})
    cfg.train_config()
    cfg.threshold()
    path = cfg.echo(tmp_path, 'train-seg')
    assert path == tmp_path / nc.cli.CONFIG_ECHO_FILE
    lines = path.read_text().splitlines()
    assert lines[0] == '# nodule-cascade train-seg'
    echoed = nc.cli.parse_config_file(path)
    assert echoed['seed'] == '3'
    assert echoed['threshold'] == '0.5'
    assert echoed['epochs'] == '30'
    assert 'unused' not in echoed

    replay = RunConfig.from_sources(path)
    assert replay.train_config() == cfg.train_config()
    assert replay.threshold() == 0.5
