import enum
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple, Type, TypeVar, Union

from ..cascade import Aggregation, DEFAULT_THRESHOLD, ScreenOpts
from ..interfaces import ConfigError, HUWindow
from ..phantom import PhantomSpec
from ..training import SplitConfig, SplitUnit, TrainConfig

__all__ = ['CONFIG_ECHO_FILE', 'RunConfig', 'parse_config_file', 'format_value']

CONFIG_ECHO_FILE = 'config.txt'

PathLike = Union[str, Path]
_E = TypeVar('_E', bound=enum.Enum)
_T = TypeVar('_T')

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def parse_config_file(path: PathLike) -> Dict[str, str]:
    """
    Read a flat key = value file. Blank lines and lines starting with # are skipped; keys may use - or _.

    :param path: config file
    :return: raw values by key
    """
    values: Dict[str, str] = {}
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            key = key.strip().replace('-', '_')
            if not sep or not key:
                raise ConfigError(f'{path}:{line_no}: expected key = value, got {line!r}')
            values[key] = value.strip()
    return values


def format_value(value: Any) -> str:
    """Render a value the way parse_config_file and the typed getters read it back."""
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ','.join(format_value(v) for v in value)
    return str(value)


def _split_list(raw: str) -> Sequence[str]:
    return [v for v in raw.replace(',', ' ').split() if v]


def _as_bool(raw: str) -> bool:
    if raw.lower() in _TRUE:
        return True
    if raw.lower() in _FALSE:
        return False
    raise ValueError(raw)


class RunConfig:
    """
    Effective settings of one command: a config file merged with command-line flags, flags winning.

    Every typed getter records the value it resolved, defaults included, so that echo() writes a file which
    reproduces the run when passed back with --config.
    """

    _values: Dict[str, str]
    _resolved: Dict[str, str]

    def __init__(self, values: Optional[Mapping[str, Any]] = None) -> None:
        self._values = {k.replace('-', '_'): format_value(v) for k, v in (values or {}).items() if v is not None}
        self._resolved = {}

    @staticmethod
    def from_sources(config_file: Optional[PathLike] = None,
                     overrides: Optional[Mapping[str, Any]] = None) -> 'RunConfig':
        """
        :param config_file: optional key = value file
        :param overrides: flag values, None meaning not given
        :return: the merged RunConfig
        """
        values: Dict[str, Any] = dict(parse_config_file(config_file)) if config_file else {}
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return RunConfig(values)

    @property
    def resolved(self) -> Dict[str, str]:
        return dict(self._resolved)

    def has(self, key: str) -> bool:
        return key in self._values

    def _get(self, key: str, cast: Callable[[str], _T], default: Optional[_T], required: bool) -> Any:
        raw = self._values.get(key)
        if raw is None:
            if required and default is None:
                raise ConfigError(f'missing required setting {key}')
            value = default
        else:
            try:
                value = cast(raw)
            except (ValueError, KeyError) as e:
                raise ConfigError(f'{key}: invalid value {raw!r}') from e
        if value is not None:
            self._resolved[key] = format_value(value)
        return value

    def get_str(self, key: str, default: Optional[str] = None, required: bool = False) -> Any:
        return self._get(key, str, default, required)

    def get_path(self, key: str, default: Optional[PathLike] = None, required: bool = False) -> Any:
        return self._get(key, Path, Path(default) if default is not None else None, required)

    def get_int(self, key: str, default: Optional[int] = None, required: bool = False) -> Any:
        return self._get(key, int, default, required)

    def get_float(self, key: str, default: Optional[float] = None, required: bool = False) -> Any:
        return self._get(key, float, default, required)

    def get_bool(self, key: str, default: bool = False) -> bool:
        return bool(self._get(key, _as_bool, default, False))

    def get_enum(self, key: str, enum_type: Type[_E], default: _E) -> _E:
        return self._get(key, lambda raw: enum_type(raw.lower()), default, False)  # type: ignore

    def get_tuple(self, key: str, n: int, cast: Callable[[str], _T], default: Optional[Tuple[_T, ...]] = None) \
            -> Any:
        def parse(raw: str) -> Tuple[_T, ...]:
            items = _split_list(raw)
            if len(items) != n:
                raise ValueError(f'expected {n} values')
            return tuple(cast(v) for v in items)

        return self._get(key, parse, default, False)

    # builders for the option objects of the other modules

    @property
    def seed(self) -> int:
        return int(self.get_int('seed', 0))

    def _build(self, factory: Callable[..., _T], **kwargs: Any) -> _T:
        try:
            return factory(**kwargs)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def phantom_spec(self) -> PhantomSpec:
        d = PhantomSpec()
        return self._build(PhantomSpec,
                           dims=self.get_tuple('dims', 3, int, d.dims),
                           spacing=self.get_tuple('spacing', 3, float, d.spacing),
                           background_mean=self.get_float('background_mean', d.background_mean),
                           background_noise_sd=self.get_float('background_noise_sd', d.background_noise_sd),
                           benign_diameter_range=self.get_tuple('benign_diameter', 2, float,
                                                                d.benign_diameter_range),
                           malignant_diameter_range=self.get_tuple('malignant_diameter', 2, float,
                                                                   d.malignant_diameter_range),
                           spiculation_amplitude=self.get_float('spiculation', d.spiculation_amplitude),
                           nodule_intensity_mean=self.get_float('nodule_mean', d.nodule_intensity_mean),
                           nodule_intensity_sd=self.get_float('nodule_sd', d.nodule_intensity_sd),
                           cases_per_class=self.get_int('cases_per_class', d.cases_per_class),
                           seed=self.seed)

    def split_config(self, default_fractions: Tuple[float, float, float], unit: SplitUnit) -> SplitConfig:
        return self._build(SplitConfig,
                           fractions=self.get_tuple('split_fractions', 3, float, default_fractions),
                           seed=self.seed,
                           unit=unit)

    def train_config(self) -> TrainConfig:
        d = TrainConfig()
        return self._build(TrainConfig,
                           batch_size=self.get_int('batch_size', d.batch_size),
                           learning_rate=self.get_float('learning_rate', d.learning_rate),
                           epochs=self.get_int('epochs', d.epochs),
                           seed=self.seed,
                           oversample_factor=self.get_int('oversample_factor', d.oversample_factor))

    def window(self) -> HUWindow:
        d = HUWindow()
        return self._build(HUWindow, lo=self.get_float('window_lo', d.lo), hi=self.get_float('window_hi', d.hi))

    def screen_opts(self) -> ScreenOpts:
        d = ScreenOpts()
        return self._build(ScreenOpts,
                           window=self.window(),
                           aggregation=self.get_enum('aggregation', Aggregation, d.aggregation),
                           binarize=self.get_bool('binarize', d.binarize),
                           batch_size=self.get_int('batch_size', d.batch_size))

    def threshold(self) -> float:
        value = float(self.get_float('threshold', DEFAULT_THRESHOLD))
        if not 0. <= value <= 1.:
            raise ConfigError(f'threshold must lie in [0, 1], got {value}')
        return value

    def echo(self, out_dir: PathLike, command: str) -> Path:
        """Write the resolved settings as config.txt into out_dir."""
        path = Path(out_dir) / CONFIG_ECHO_FILE
        lines = [f'# nodule-cascade {command}'] + [f'{k} = {v}' for k, v in self._resolved.items()]
        path.write_text('\n'.join(lines) + '\n')
        return path
