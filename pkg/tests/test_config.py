from pathlib import Path

from pbn.config import Settings
from pbn.training import SgdConfig


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("PBN_EPOCHS", "7")
    monkeypatch.setenv("PBN_WIRELESS_DATA_PATH", "/data/wifi_localization.txt")
    settings = Settings()
    assert settings.EPOCHS == 7
    assert settings.WIRELESS_DATA_PATH == Path("/data/wifi_localization.txt")


def test_sgd_defaults_follow_settings(monkeypatch):
    from pbn import config

    monkeypatch.setattr(config.settings, "BATCH_SIZE", 17)
    assert SgdConfig().batch_size == 17


def test_shipped_experiment_configs():
    from pbn.harness import ExperimentConfig, ExperimentId
    from pbn.risk import Weighting

    configs = Path(__file__).resolve().parents[1] / "configs"
    for experiment in ExperimentId:
        config = ExperimentConfig.from_yaml(configs / f"{experiment.value}.yaml")
        assert config.experiment is experiment
        assert config.weighting is Weighting.MARGIN
        assert config.sgd.learning_rate == 0.1
        assert config.sgd.epochs == 300
