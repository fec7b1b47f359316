"""
The Config class reads & writes YAML and JSON experiment files, and
ExperimentConfig validates the experiment they describe.
"""
import os
import re
import json
import logging
from collections import OrderedDict
from dataclasses import dataclass, fields, asdict

import yaml

from covariance import check_hurst, HurstError
from coeffexpr import CoefficientSpec
from fgn import METHODS
from youngsde import INTEGRATORS

logger = logging.getLogger(__name__)

FULL_HIST_PATHS = 100000
FULL_MC_PATHS = 10000
ENV_OUT_DIR = 'HURST_LAB_OUT_DIR'
ENV_WORKERS = 'HURST_LAB_WORKERS'


class ConfigError(ValueError):
    pass


class Config:
    def __init__(self, file_path: str):
        """
        Initialize the Config class with a file path.
        :param file_path: Path to the experiment file.
        """
        self.file_path = self.resolve_env_variables(str(file_path))
        self.file_type = self._detect_file_type()
        self.comments = {}

    def get_filename(self):
        return self.file_path

    def _detect_file_type(self) -> str:
        """
        Detect the file type (JSON or YAML) based on the file extension.
        :return: 'json' or 'yaml'
        :raises ConfigError: If the file extension is not supported.
        """
        if self.file_path.endswith('.json'):
            return 'json'
        if self.file_path.endswith(('.yaml', '.yml')):
            return 'yaml'
        ext = self.file_path.split('.')[-1]
        raise ConfigError(f'Unsupported file type: {ext}')

    def read(self):
        """
        Read the file and return its content as an OrderedDict.
        """
        if self.file_type == 'json':
            with open(self.file_path, 'r', encoding='utf8') as file:
                try:
                    return json.load(file, object_pairs_hook=OrderedDict)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f'{self.file_path}: {exc}') from exc

        with open(self.file_path, 'r', encoding='utf8') as file:
            raw_lines = file.readlines()
        self._extract_comments(raw_lines)
        yaml_content = ''.join(line for line in raw_lines if not line.strip().startswith('#'))
        try:
            return yaml.load(yaml_content, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            raise ConfigError(f'{self.file_path}: {exc}') from exc

    def write(self, data):
        """
        Write the given data to the file, restoring comments read earlier.
        :param data: mapping to be serialized
        """
        if self.file_type == 'json':
            with open(self.file_path, 'w', encoding='utf8') as file:
                json.dump(data, file, indent=4, ensure_ascii=False)
                file.write('\n')
            return

        yaml_content = yaml.safe_dump(_plain(data), default_flow_style=False, sort_keys=False).strip()
        final_content = self._restore_comments(yaml_content)
        with open(self.file_path, 'w', encoding='utf8') as file:
            file.write(final_content + '\n')

    def get_comments(self):
        return self.comments.copy()

    def get_comment(self, name):
        """
        Return the requested comment or empty string if it doesn't exist.
        """
        return self.comments.get(name, '')

    def set_comments(self, comments):
        self.comments = dict(comments)

    def _extract_comments(self, raw_lines):
        """
        Extract comments from YAML lines and store them per key.
        :param raw_lines: List of lines from the YAML file.
        """
        self.comments = {}
        current_comment_lines = []
        for line in raw_lines:
            if line.strip().startswith('#'):
                current_comment_lines.append(line.strip('# \n').strip())
            else:
                key_match = re.match(r'^\s*([\w\-]+)\s*:', line)
                if key_match:
                    key = key_match.group(1)
                    if current_comment_lines:
                        self.comments[key] = '\n'.join(current_comment_lines)
                        current_comment_lines = []
                    inline = _inline_comment(line)
                    if inline:
                        self.comments[key] = f'{self.comments.get(key, "")}\n{inline}'.strip()

    def _restore_comments(self, yaml_content):
        """
        Restore comments into the YAML content during writing: multi-line
        comments go above their key, single lines after it.
        """
        final_lines = []
        for line in yaml_content.splitlines():
            key_match = re.match(r'^(\s*)([\w\-]+)\s*:', line)
            if key_match and key_match.group(2) in self.comments:
                indent, key = key_match.groups()
                comment = self.comments[key]
                if '\n' in comment:
                    final_lines.extend(f'{indent}# {part}' for part in comment.split('\n'))
                else:
                    line += f'  # {comment}'
            final_lines.append(line)
        return '\n'.join(final_lines)

    @staticmethod
    def resolve_env_variables(input_string):
        """
        Resolve environment variables in a string. Replaces {VAR_NAME} with the value of os.environ['VAR_NAME'].
        :param input_string: The input string with potential environment variable placeholders.
        :return: The string with environment variables resolved.
        """
        pattern = re.compile(r'\{(\w+)\}')
        def replace_match(match):
            var_name = match.group(1)
            return os.environ.get(var_name, f'{{{var_name}}}')  # Keep original if not found
        return pattern.sub(replace_match, input_string)


def _inline_comment(line):
    # a comment starts at a ' #' outside quotes
    quote = None
    for idx, c in enumerate(line):
        if c in '\'"':
            quote = None if quote == c else (quote or c)
        elif c == '#' and quote is None and idx > 0 and line[idx - 1].isspace():
            return line[idx + 1:].strip()
    return ''


def _plain(data):
    if isinstance(data, dict):
        return {str(k): _plain(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_plain(v) for v in data]
    return data


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One density-fit experiment. h, n and sde are required.
    """
    h: float
    n: int
    sde: object
    x0: float = 1.0
    hist_paths: int = 10000
    mc_paths: int = 2000
    oversample: int = 8
    quad_n: int = 4096
    master_seed: int = 911
    z_points: int = 401
    out_dir: str = 'runs'
    method: str = 'circulant'
    integrator: str = 'euler'
    tol: float = 1e-10
    workers: int = 1
    batch_size: int = 256

    def __post_init__(self):
        try:
            check_hurst(self.h)
        except HurstError as exc:
            raise ConfigError(f'h: {exc}') from exc
        minimums = {'n': 4, 'hist_paths': 1, 'mc_paths': 1, 'oversample': 1,
                    'quad_n': 1, 'z_points': 2, 'workers': 1, 'batch_size': 1}
        for name, low in minimums.items():
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < low:
                raise ConfigError(f'{name} must be an integer >= {low}: {value!r}')
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError(f'master_seed must be a 64-bit unsigned integer: {self.master_seed!r}')
        if self.method not in METHODS:
            raise ConfigError(f'Unknown sampling method: {self.method}')
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f'Unknown integrator: {self.integrator}')
        if not self.tol > 0:
            raise ConfigError(f'tol must be positive: {self.tol}')
        self.coefficients()

    @property
    def fine_points(self):
        """
        Size of the simulation grid for histogram paths.
        """
        return self.oversample * 2 * self.n

    def coefficients(self):
        try:
            return CoefficientSpec.from_mapping(self.sde)
        except ValueError as exc:
            raise ConfigError(f'sde: {exc}') from exc

    def to_mapping(self):
        data = asdict(self)
        data['sde'] = _plain(self.sde)
        return OrderedDict([('experiment', data)])


def experiment_from_mapping(data, full_scale=False, **overrides):
    """
    Build an ExperimentConfig from a mapping with an 'experiment' table.
    Environment overrides HURST_LAB_OUT_DIR / HURST_LAB_WORKERS apply before
    explicit keyword overrides; None overrides are ignored.
    """
    if not isinstance(data, dict) or not isinstance(data.get('experiment'), dict):
        raise ConfigError("Experiment file needs an 'experiment' mapping")
    table = dict(data['experiment'])
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(table) - known - {'full_scale'})
    if unknown:
        raise ConfigError(f'Unknown experiment keys: {", ".join(unknown)}')
    missing = [key for key in ('h', 'n', 'sde') if key not in table]
    if missing:
        raise ConfigError(f'Missing experiment keys: {", ".join(missing)}')
    if table.pop('full_scale', False) or full_scale:
        table['hist_paths'] = FULL_HIST_PATHS
        table['mc_paths'] = FULL_MC_PATHS
    if isinstance(table.get('out_dir'), str):
        table['out_dir'] = Config.resolve_env_variables(table['out_dir'])
    if os.environ.get(ENV_OUT_DIR):
        table['out_dir'] = os.environ[ENV_OUT_DIR]
    if os.environ.get(ENV_WORKERS):
        try:
            table['workers'] = int(os.environ[ENV_WORKERS])
        except ValueError as exc:
            raise ConfigError(f'{ENV_WORKERS} must be an integer: {os.environ[ENV_WORKERS]}') from exc
    table.update({key: value for key, value in overrides.items() if value is not None})
    # YAML 1.1 reads exponent literals without a dot, such as 1e-10, as strings
    for key in ('h', 'x0', 'tol'):
        if key in table and not isinstance(table[key], bool):
            try:
                table[key] = float(table[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f'{key} must be a number: {table[key]!r}') from exc
    return ExperimentConfig(**table)


def load_experiment(file_path, full_scale=False, **overrides):
    """
    Read and validate an experiment file.
    :return: (ExperimentConfig, Config) so comments can be carried to the echo
    """
    config = Config(file_path)
    if not os.path.exists(config.get_filename()):
        raise ConfigError(f'No such experiment file: {config.get_filename()}')
    experiment = experiment_from_mapping(config.read(), full_scale, **overrides)
    logger.info('loaded experiment %s: h=%s n=%d sde=%s', config.get_filename(),
                experiment.h, experiment.n, experiment.sde)
    return experiment, config


def write_experiment(experiment, file_path, comments=None):
    """
    Write the effective configuration, with comments from the source file.
    """
    config = Config(file_path)
    if comments:
        config.set_comments(comments)
    config.write(experiment.to_mapping())
