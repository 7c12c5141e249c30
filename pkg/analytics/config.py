"""
Detector configuration.

Values resolve in three layers: the dataclass defaults, then
`settings.AUDIT_DEFAULTS` (populated from AUDIT_* environment variables), then
an optional ``key = value`` file.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from django.conf import settings
from dotenv import dotenv_values

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

SELF_CITATION_LEVELS = ('author', 'institution')
FIT_SPANS = ('head', 'outside_window')


@dataclass(frozen=True)
class AuditConfig:
    # hump detection
    z_on: float = 2.0
    min_run: int = 8
    near_h: int = 10
    min_mass: float = 5.0
    # baseline fit
    exclude_window: int = 10
    min_points: int = 50
    r2_threshold: float = 0.8
    sigma_floor: float = 0.05
    fit_span: str = 'head'
    # corroboration
    min_cell_size: int = 5
    self_cite_threshold: float = 0.3
    fwci_threshold: float = 2.0
    fwci_excess_threshold: float = 1.5
    self_citation_level: str = 'author'
    # verdict score (fixed logistic, no training data exists)
    score_bias: float = -4.0
    score_w_peak: float = 0.5
    score_w_mass: float = 0.05
    score_w_self: float = 6.0
    score_w_fwci: float = 0.8
    # corpus window
    year_min: int = 1900
    year_max: int = 2100

    def __post_init__(self):
        if self.z_on <= 0:
            raise ConfigError('z_on must be positive', key='z_on')
        if self.min_run < 1:
            raise ConfigError('min_run must be at least 1', key='min_run')
        if self.near_h < 0 or self.exclude_window < 0:
            raise ConfigError('near_h and exclude_window must be non-negative')
        if self.min_points < 3:
            raise ConfigError('min_points must be at least 3', key='min_points')
        if self.min_cell_size < 1:
            raise ConfigError('min_cell_size must be at least 1', key='min_cell_size')
        if self.sigma_floor <= 0:
            raise ConfigError('sigma_floor must be positive', key='sigma_floor')
        if self.fit_span not in FIT_SPANS:
            raise ConfigError(f'fit_span must be one of {FIT_SPANS}', key='fit_span')
        if self.self_citation_level not in SELF_CITATION_LEVELS:
            raise ConfigError(
                f'self_citation_level must be one of {SELF_CITATION_LEVELS}', key='self_citation_level'
            )
        if self.year_min > self.year_max:
            raise ConfigError('year_min must not exceed year_max')

    def as_dict(self):
        return asdict(self)

    def with_values(self, values):
        """Return a copy with string or typed overrides applied"""
        known = {f.name: f for f in fields(self)}
        converted = {}
        for key, raw in values.items():
            name = key.strip().lower()
            if name not in known:
                raise ConfigError(f'Unknown config key {key!r}', key=key)
            converted[name] = _convert(name, known[name].type, raw)
        return replace(self, **converted)


def _convert(name, type_, raw):
    if raw is None:
        raise ConfigError(f'Config key {name!r} has no value', key=name)
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if type_ in (int, 'int'):
            return int(text)
        if type_ in (float, 'float'):
            return float(text)
    except ValueError:
        raise ConfigError(f'Config key {name!r}: cannot parse {raw!r}', key=name) from None
    return text


def load_config(path=None, overrides=None) -> AuditConfig:
    config = AuditConfig().with_values(getattr(settings, 'AUDIT_DEFAULTS', {}))
    if path:
        if not Path(path).is_file():
            raise ConfigError(f"Config file {path} does not exist")
        file_values = dotenv_values(path)
        logger.info(f"Loaded {len(file_values)} config value(s) from {path}")
        config = config.with_values(file_values)
    if overrides:
        config = config.with_values(overrides)
    return config
