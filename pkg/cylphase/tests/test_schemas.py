import json
import math

from pydantic import ValidationError

from .helper import TestHelper
from cylphase import L_MAX
from cylphase.errors import ConfigError
from cylphase.schemas import ExperimentConfig, StateSpec, WignerGridFile, load_config


class TestExperimentConfig(TestHelper):
    def test_defaults(self):
        config = load_config()
        self.assertEqual(config.command, 'wigner')
        self.assertEqual(config.state.kind, 'coherent')
        self.assertEqual(config.grid.half_width, L_MAX)
        self.assertIsNone(config.tomography.n_phi)
        self.assertEqual(config.format, 'csv')

    def test_lambda_alias(self):
        config = ExperimentConfig.model_validate({'dynamics': {'lambda': 0.25}})
        self.assertEqual(config.dynamics.lam, 0.25)
        self.assertEqual(ExperimentConfig.model_validate({'dynamics': {'lam': 0.5}}).dynamics.lam, 0.5)

    def test_angles_are_reduced(self):
        spec = StateSpec(kind='coherent', phi0=3 * math.pi)
        self.assertAlmostEqual(spec.phi0, math.pi)

    def test_state_kind_parameters(self):
        self.assertRaises(ValidationError, StateSpec, kind='superposition', l1=1)
        self.assertRaises(ValidationError, StateSpec, kind='superposition', l1=1, l2=1)
        self.assertRaises(ValidationError, StateSpec, kind='file')
        self.assertEqual(StateSpec(kind='superposition', l1=1, l2=-1).l2, -1)

    def test_unknown_fields_are_rejected(self):
        self.assertRaises(ValidationError, ExperimentConfig.model_validate, {'stat': {}})
        self.assertRaises(ValidationError, ExperimentConfig.model_validate, {'grid': {'n_phi': 0}})
        self.assertRaises(ValidationError, ExperimentConfig.model_validate, {'dynamics': {'dt': float('inf')}})


class TestLoadConfig(TestHelper):
    def write(self, data) -> str:
        path = self.temp_dir() / 'config.json'
        path.write_text(json.dumps(data))
        return str(path)

    def test_overrides_merge_into_file(self):
        path = self.write({'command': 'tomo', 'state': {'kind': 'eigenstate', 'l0': 4}, 'seed': 5})
        config = load_config(path, {'state': {'l0': -1}, 'tomography': {'roundtrip': True}, 'seed': None})
        self.assertEqual(config.command, 'tomo')
        self.assertEqual(config.state.kind, 'eigenstate')
        self.assertEqual(config.state.l0, -1)
        self.assertEqual(config.seed, 5)
        self.assertTrue(config.tomography.roundtrip)

    def test_validation_details(self):
        with self.assertRaises(ConfigError) as caught:
            load_config(overrides={'grid': {'half_width': 0}})
        self.assertEqual(caught.exception.details[0]['loc'], ['config', 'grid', 'half_width'])

    def test_bad_files(self):
        self.assertRaises(ConfigError, load_config, self.temp_dir() / 'missing.json')
        self.assertRaises(ConfigError, load_config, self.write([1, 2, 3]))


class TestWignerGridFile(TestHelper):
    def test_shape_checks(self):
        WignerGridFile(ell_window=(0, 1), phi_samples=[0.0, 1.0], values=[[0, 0], [0, 0]])
        self.assertRaises(ValidationError, WignerGridFile,
                          ell_window=(1, 0), phi_samples=[0.0, 1.0], values=[])
        self.assertRaises(ValidationError, WignerGridFile,
                          ell_window=(0, 1), phi_samples=[0.0, 1.0], values=[[0, 0]])
        self.assertRaises(ValidationError, WignerGridFile,
                          ell_window=(0, 0), phi_samples=[0.0, 1.0], values=[[0, 0]], tail=[0.0])
