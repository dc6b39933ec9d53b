import copy
import json
import os

import yaml

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    tomllib = None


class ConfigManager:
    """
    Load and validate experiment configuration for CARMA indirect inference.
    Supports YAML, JSON and TOML formats.
    """

    REQUIRED_SECTIONS = ['model', 'driver', 'outliers', 'estimators', 'run', 'logging']
    KNOWN_ESTIMATORS = {'indirect', 'qmle', 'ls', 'gm'}

    def __init__(self, config_path: str = None, config: dict = None):
        self.config_path = config_path
        self.config = {}
        if config is not None:
            self.config = copy.deepcopy(config)
        else:
            self.load_config()
        self.validate_parameters()

    @classmethod
    def from_dict(cls, config: dict) -> "ConfigManager":
        """Build an in-memory configuration (nothing is written back)."""
        return cls(config_path=None, config=config)

    def load_config(self):
        """
        Read the config file (YAML, JSON or TOML) and populate self.config.
        """
        if not self.config_path or not os.path.isfile(self.config_path):
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        ext = os.path.splitext(self.config_path)[1].lower()
        if ext in ('.yaml', '.yml'):
            with open(self.config_path, 'r') as f:
                self.config = yaml.safe_load(f) or {}
        elif ext == '.json':
            with open(self.config_path, 'r') as f:
                self.config = json.load(f)
        elif ext == '.toml':
            if tomllib is None:
                raise ValueError("TOML configs need Python 3.11+ (tomllib)")
            with open(self.config_path, 'rb') as f:
                self.config = tomllib.load(f)
        else:
            raise ValueError("Unsupported config format. Use .yaml, .yml, .json or .toml")

    def validate_parameters(self):
        """
        Ensure required sections exist and values lie in their valid ranges.
        """
        for section in self.REQUIRED_SECTIONS:
            if section not in self.config:
                raise KeyError(f"Missing required config section: '{section}'")

        model = self.config['model']
        if 'family' not in model or 'theta0' not in model:
            raise KeyError("Model section needs 'family' and 'theta0'")
        if model.get('n', 1000) < 2:
            raise ValueError("Model 'n' must be at least 2")
        if model.get('h', 1.0) <= 0:
            raise ValueError("Model 'h' must be positive")

        driver = self.config['driver']
        if str(driver.get('kind', 'brownian')).lower() not in ('brownian', 'nig'):
            raise ValueError("Driver 'kind' must be 'brownian' or 'nig'")
        if driver.get('fine_grid_factor', 10) < 1:
            raise ValueError("Driver 'fine_grid_factor' must be at least 1")

        outliers = self.config['outliers']
        gamma = outliers.get('gamma', 0.0)
        if not (0.0 <= gamma <= 1.0):
            raise ValueError("Outliers 'gamma' must be between 0 and 1")
        if str(outliers.get('mode', 'additive')).lower() not in ('additive', 'replacement'):
            raise ValueError("Outliers 'mode' must be 'additive' or 'replacement'")

        estimators = self.config['estimators']
        names = estimators.get('names', ['indirect', 'qmle'])
        unknown = set(names) - self.KNOWN_ESTIMATORS
        if unknown:
            raise ValueError(f"Unknown estimators {sorted(unknown)}; use {sorted(self.KNOWN_ESTIMATORS)}")
        if estimators.get('r', 1) < 1:
            raise ValueError("Estimators 'r' must be at least 1")
        if estimators.get('s', 75) < 1:
            raise ValueError("Estimators 's' must be at least 1")
        noise_scale = estimators.get('noise_scale')
        if noise_scale is not None and str(noise_scale).lower() not in ('profiled', 'known'):
            raise ValueError("Estimators 'noise_scale' must be 'profiled' or 'known'")

        run = self.config['run']
        if run.get('replications', 50) < 1:
            raise ValueError("Run 'replications' must be at least 1")
        threads = run.get('threads')
        if threads is not None and threads < 1:
            raise ValueError("Run 'threads' must be at least 1")

    def get_model_config(self) -> dict:
        """Return model family, true parameter, box, n and h."""
        return self.config.get('model', {})

    def get_driver_config(self) -> dict:
        """Return driving Lévy process parameters."""
        return self.config.get('driver', {})

    def get_outlier_config(self) -> dict:
        """Return contamination parameters."""
        return self.config.get('outliers', {})

    def get_estimator_config(self) -> dict:
        """Return estimator selection and tuning."""
        return self.config.get('estimators', {})

    def get_run_config(self) -> dict:
        """Return replication count, seed, threads and output paths."""
        return self.config.get('run', {})

    def get_logging_config(self) -> dict:
        """Return logging and monitoring parameters."""
        return self.config.get('logging', {})

    def update_runtime_config(self, section: str, key: str, value, persist: bool = False):
        """
        Update a config value at runtime (CLI overrides); optionally write it back.
        """
        if section not in self.config:
            raise KeyError(f"Unknown config section: {section}")
        self.config[section][key] = value
        self.validate_parameters()

        if not persist or not self.config_path:
            return
        ext = os.path.splitext(self.config_path)[1].lower()
        if ext not in ('.yaml', '.yml', '.json'):
            raise ValueError(f"Cannot persist config format '{ext}'")
        with open(self.config_path, 'w') as f:
            if ext in ('.yaml', '.yml'):
                yaml.safe_dump(self.config, f, sort_keys=False)
            else:
                json.dump(self.config, f, indent=2)
