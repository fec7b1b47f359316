"""
Tests for the Config class and experiment configuration.
"""
import os
import sys
import json
import shutil
import tempfile
import unittest
from unittest import mock

sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import (
    Config, ConfigError, ExperimentConfig, experiment_from_mapping, load_experiment,
    write_experiment,
)

ROOT = os.path.dirname(os.path.dirname(os.path.realpath(__file__)))
ENV_KEYS = ('HURST_LAB_OUT_DIR', 'HURST_LAB_WORKERS')


def clean_environ():
    return {key: value for key, value in os.environ.items() if key not in ENV_KEYS}


class TestConfig(unittest.TestCase):
    """
    Tests demonstrate the features of the Config class.
    """
    def setUp(self):
        """
        Create JSON and YAML files in a temporary directory.
        """
        self.dir = tempfile.mkdtemp()
        self.json_file = os.path.join(self.dir, 'test_config.json')
        self.yaml_file = os.path.join(self.dir, 'test_config.yaml')

        self.json_data = {'experiment': {'h': 0.7, 'n': 32, 'sde': 'sde2'}}
        with open(self.json_file, 'w', encoding='utf8') as file_h:
            json.dump(self.json_data, file_h, indent=4)

        self.yaml_data = """
# A multi-line comment
# for the experiment table
experiment:
    # Hurst parameter
    h: 0.7
    n: 32  # coarse grid
    sde: sde2
    out_dir: "runs/#1"  # hash inside quotes
    tol: 1e-10
"""
        with open(self.yaml_file, 'w', encoding='utf8') as file_h:
            file_h.write(self.yaml_data)

    def tearDown(self):
        shutil.rmtree(self.dir)

    def test_json_read(self):
        """
        Test reading a JSON file.
        """
        self.assertEqual(Config(self.json_file).read(), self.json_data)

    def test_json_write(self):
        """
        Test writing to a JSON file.
        """
        config = Config(self.json_file)
        updated_data = {'experiment': {'h': 0.8, 'n': 16, 'sde': 'sde1'}}
        config.write(updated_data)
        with open(self.json_file, 'r', encoding='utf8') as file_h:
            content = file_h.read()
        self.assertEqual(json.loads(content), updated_data)
        self.assertTrue(content.endswith('}\n'))

    def test_yaml_read_with_comments(self):
        """
        Test reading a YAML file with comments, including multi-line and
        inline comments.
        """
        config = Config(self.yaml_file)
        data = config.read()
        self.assertEqual(data['experiment']['h'], 0.7)
        self.assertEqual(data['experiment']['out_dir'], 'runs/#1')
        self.assertEqual(config.get_comment('experiment'),
                         'A multi-line comment\nfor the experiment table')
        self.assertEqual(config.get_comment('h'), 'Hurst parameter')
        self.assertEqual(config.get_comment('n'), 'coarse grid')
        self.assertEqual(config.get_comment('out_dir'), 'hash inside quotes')
        self.assertEqual(config.get_comment('sde'), '')

    def test_yaml_write_with_comments(self):
        """
        Multi-line comments go above their key, single lines after it.
        """
        config = Config(self.yaml_file)
        config.set_comments({'experiment': 'Top', 'h': 'Hurst\nparameter', 'n': 'grid'})
        config.write({'experiment': {'h': 0.7, 'n': 32}})
        with open(self.yaml_file, 'r', encoding='utf8') as file_h:
            content = file_h.read()
        self.assertEqual(content, 'experiment:  # Top\n'
                                  '  # Hurst\n'
                                  '  # parameter\n'
                                  '  h: 0.7\n'
                                  '  n: 32  # grid\n')

    def test_yaml_round_trip(self):
        """
        Reading, writing and reading again keeps data and comments.
        """
        config = Config(self.yaml_file)
        data = config.read()
        comments = config.get_comments()
        config.write(data)
        again = Config(self.yaml_file)
        self.assertEqual(again.read(), data)
        self.assertEqual(again.get_comments(), comments)

    def test_unsupported_type(self):
        """
        Only JSON and YAML files are supported.
        """
        with self.assertRaises(ConfigError) as ctx:
            Config(os.path.join(self.dir, 'experiment.ini'))
        self.assertEqual(str(ctx.exception), 'Unsupported file type: ini')

    def test_invalid_content(self):
        """
        Syntax errors surface as ConfigError.
        """
        with open(self.json_file, 'w', encoding='utf8') as file_h:
            file_h.write('{"experiment": ')
        with self.assertRaises(ConfigError):
            Config(self.json_file).read()
        with open(self.yaml_file, 'w', encoding='utf8') as file_h:
            file_h.write('experiment: [1, 2\n')
        with self.assertRaises(ConfigError):
            Config(self.yaml_file).read()

    def test_resolve_env_variables(self):
        """
        {VAR} placeholders are replaced; unknown ones are kept.
        """
        with mock.patch.dict(os.environ, {'HURST_LAB_TEST_DIR': '/data'}):
            self.assertEqual(Config.resolve_env_variables('{HURST_LAB_TEST_DIR}/runs'), '/data/runs')
        self.assertEqual(Config.resolve_env_variables('{HURST_LAB_NOT_SET_XYZ}/runs'),
                         '{HURST_LAB_NOT_SET_XYZ}/runs')


class TestExperimentConfig(unittest.TestCase):
    """
    Validation, overrides and echo of experiment configurations.
    """
    def setUp(self):
        self.dir = tempfile.mkdtemp()
        self.environ = mock.patch.dict(os.environ, clean_environ(), clear=True)
        self.environ.start()

    def tearDown(self):
        self.environ.stop()
        shutil.rmtree(self.dir)

    def test_default_file(self):
        """
        The shipped experiment file loads with its comments.
        """
        experiment, config = load_experiment(os.path.join(ROOT, 'hurst_lab.yaml'))
        self.assertEqual((experiment.h, experiment.n, experiment.sde), (0.55, 16, 'sde1'))
        self.assertEqual(experiment.tol, 1e-10)
        self.assertEqual(experiment.fine_points, 8 * 2 * 16)
        self.assertEqual(config.get_comment('h'), 'Hurst parameter, 1/2 < h < 1')
        self.assertEqual(config.get_comment('hist_paths'), 'paths behind the histogram')

    def test_sample_files(self):
        """
        Every sample experiment under conf/ is valid.
        """
        names = sorted(name for name in os.listdir(os.path.join(ROOT, 'conf'))
                       if name.endswith(('.yaml', '.json')))
        self.assertIn('custom_sde.json', names)
        for name in names:
            experiment, _ = load_experiment(os.path.join(ROOT, 'conf', name))
            self.assertGreater(experiment.h, 0.5, name)
            experiment.coefficients()

    def test_figure_set(self):
        """
        conf/ holds one experiment per equation, Hurst value and grid size
        of the density figures.
        """
        for sde in ('sde1', 'sde2'):
            for h in (0.55, 0.85):
                for n in (16, 32, 64, 128):
                    name = f'{sde}_h{str(h).replace(".", "")}_n{n}.yaml'
                    experiment, _ = load_experiment(os.path.join(ROOT, 'conf', name))
                    self.assertEqual((experiment.sde, experiment.h, experiment.n), (sde, h, n))
                    self.assertEqual(experiment.out_dir, f'runs/{sde}_h{h}_n{n}')

    def test_custom_sde_home(self):
        """
        {HOME} in out_dir is resolved from the environment.
        """
        with mock.patch.dict(os.environ, {'HOME': '/home/lab'}):
            experiment, _ = load_experiment(os.path.join(ROOT, 'conf', 'custom_sde.json'))
        self.assertEqual(experiment.out_dir, '/home/lab/hurst_lab_runs/custom')
        self.assertEqual(experiment.integrator, 'heun')
        self.assertEqual(experiment.coefficients().describe(),
                         {'v1': '1.5 + 0.5*cos(x)', 'v2': '-x/(1 + x*x)'})

    def test_exponent_literal(self):
        """
        YAML exponent literals without a dot are read as numbers.
        """
        experiment = experiment_from_mapping(
            {'experiment': {'h': '0.6', 'n': 8, 'sde': 'sde1', 'tol': '1e-10'}})
        self.assertEqual(experiment.tol, 1e-10)
        self.assertEqual(experiment.h, 0.6)

    def test_overrides(self):
        """
        Environment overrides come before keyword overrides; None is ignored.
        """
        data = {'experiment': {'h': 0.6, 'n': 8, 'sde': 'sde1', 'out_dir': 'a'}}
        with mock.patch.dict(os.environ, {'HURST_LAB_OUT_DIR': 'env', 'HURST_LAB_WORKERS': '3'}):
            experiment = experiment_from_mapping(data)
            self.assertEqual((experiment.out_dir, experiment.workers), ('env', 3))
            experiment = experiment_from_mapping(data, out_dir='cli', workers=None)
            self.assertEqual((experiment.out_dir, experiment.workers), ('cli', 3))
        with mock.patch.dict(os.environ, {'HURST_LAB_WORKERS': 'many'}):
            with self.assertRaises(ConfigError):
                experiment_from_mapping(data)

    def test_full_scale(self):
        """
        Full scale uses 10^5 histogram and 10^4 curve paths.
        """
        data = {'experiment': {'h': 0.6, 'n': 8, 'sde': 'sde1', 'hist_paths': 10}}
        experiment = experiment_from_mapping(data, full_scale=True)
        self.assertEqual((experiment.hist_paths, experiment.mc_paths), (100000, 10000))
        data['experiment']['full_scale'] = True
        self.assertEqual(experiment_from_mapping(data).hist_paths, 100000)

    def test_invalid(self):
        """
        Invalid experiments raise ConfigError naming the problem.
        """
        base = {'h': 0.6, 'n': 8, 'sde': 'sde1'}
        cases = [
            {'h': 0.5}, {'h': 1.0}, {'h': 'half'}, {'n': 3}, {'n': 8.0}, {'hist_paths': 0},
            {'z_points': 1}, {'master_seed': -1}, {'master_seed': 2 ** 64},
            {'method': 'hosking'}, {'integrator': 'rk4'}, {'tol': 0.0}, {'workers': 0},
            {'sde': 'sde9'}, {'sde': {'v1': '2+', 'v2': 'x'}}, {'sde': {'v1': '1/(x-x)', 'v2': 'x'}},
            {'colour': 'red'},
        ]
        for change in cases:
            with self.assertRaises(ConfigError, msg=repr(change)):
                experiment_from_mapping({'experiment': {**base, **change}})
        with self.assertRaises(ConfigError):
            experiment_from_mapping({'experiment': {'h': 0.6, 'n': 8}})
        with self.assertRaises(ConfigError):
            experiment_from_mapping({'h': 0.6})
        with self.assertRaises(ConfigError):
            load_experiment(os.path.join(self.dir, 'missing.yaml'))

    def test_write_experiment(self):
        """
        The effective configuration written out loads back unchanged.
        """
        experiment = ExperimentConfig(h=0.7, n=32, sde={'v1': '2+cos(x)', 'v2': 'sin(x)'},
                                      out_dir=self.dir, hist_paths=50)
        file_path = os.path.join(self.dir, 'experiment.yaml')
        write_experiment(experiment, file_path, {'h': 'Hurst parameter'})
        loaded, config = load_experiment(file_path)
        self.assertEqual(loaded, experiment)
        self.assertEqual(config.get_comment('h'), 'Hurst parameter')
        self.assertEqual(list(experiment.to_mapping()), ['experiment'])


if __name__ == '__main__':
    unittest.main()
